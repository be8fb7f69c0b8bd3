use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FieldError;

/// Uniform structured grid over a box. Row-major, last axis fastest.
///
/// Non-periodic axes include both endpoints (`h = (max − min)/(n − 1)`); periodic axes
/// omit the right endpoint (`h = (max − min)/n`) so the wrap-around neighbor is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axis_names: Vec<String>,
    pub extents: Vec<(f64, f64)>,
    pub points: Vec<usize>,
    #[serde(default)]
    pub periodic: Vec<bool>,
}

impl GridSpec {
    pub fn new(axis_names: Vec<String>, extents: Vec<(f64, f64)>, points: Vec<usize>) -> Result<Self, FieldError> {
        let d = axis_names.len();
        if extents.len() != d || points.len() != d {
            return Err(FieldError::DimensionMismatch { expected: d, found: extents.len().min(points.len()) });
        }
        for (a, (&(lo, hi), &n)) in extents.iter().zip(&points).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) || n < 2 {
                return Err(FieldError::BadAxis(a));
            }
        }
        Ok(GridSpec { axis_names, extents, points, periodic: vec![false; d] })
    }

    /// Same extent and point count on every axis.
    pub fn uniform(names: &[&str], extent: (f64, f64), n: usize) -> Result<Self, FieldError> {
        let d = names.len();
        Self::new(names.iter().map(|s| s.to_string()).collect(), vec![extent; d], vec![n; d])
    }

    pub fn with_periodic(mut self, axis: usize, periodic: bool) -> Self {
        self.periodic[axis] = periodic;
        self
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic.get(axis).copied().unwrap_or(false)
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let (lo, hi) = self.extents[axis];
        let n = self.points[axis];
        if self.is_periodic(axis) {
            (hi - lo) / n as f64
        } else {
            (hi - lo) / (n - 1) as f64
        }
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.extents[axis].0 + i as f64 * self.spacing(axis)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.points[a + 1];
        }
        s
    }

    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = flat % self.points[a];
            flat /= self.points[a];
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.points).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        self.unflatten(flat, &mut idx);
        idx.iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect()
    }

    /// True when every non-periodic axis index is at least one node from the boundary.
    pub fn is_interior(&self, idx: &[usize]) -> bool {
        idx.iter()
            .enumerate()
            .all(|(a, &i)| self.is_periodic(a) || (i >= 1 && i + 1 < self.points[a]))
    }

    /// The grid with `axis` removed.
    pub fn drop_axis(&self, axis: usize) -> GridSpec {
        let keep: Vec<usize> = (0..self.dim()).filter(|&a| a != axis).collect();
        self.select_axes(&keep)
    }

    /// The grid restricted to `axes`, in that order.
    pub fn select_axes(&self, axes: &[usize]) -> GridSpec {
        let p = self.periodic_padded();
        GridSpec {
            axis_names: axes.iter().map(|&a| self.axis_names[a].clone()).collect(),
            extents: axes.iter().map(|&a| self.extents[a]).collect(),
            points: axes.iter().map(|&a| self.points[a]).collect(),
            periodic: axes.iter().map(|&a| p[a]).collect(),
        }
    }

    /// The same grid with every non-periodic axis box scaled by `factor` about `center`.
    pub fn rescaled(&self, center: &[f64], factor: f64) -> GridSpec {
        let mut g = self.clone();
        for (a, e) in g.extents.iter_mut().enumerate() {
            *e = (center[a] + (e.0 - center[a]) * factor, center[a] + (e.1 - center[a]) * factor);
        }
        g
    }

    /// Flat index of the neighbor one node along `axis` (wrapping on periodic axes).
    /// Callers keep `idx` away from non-periodic edges.
    pub fn neighbor(&self, k: usize, idx: &[usize], axis: usize, forward: bool) -> usize {
        let i = idx[axis];
        let n = self.points[axis];
        let stride: usize = self.points[axis + 1..].iter().product();
        let j = match (forward, i) {
            (true, i) if i + 1 == n => 0,
            (true, i) => i + 1,
            (false, 0) => n - 1,
            (false, i) => i - 1,
        };
        k + j * stride - i * stride
    }

    fn periodic_padded(&self) -> Vec<bool> {
        (0..self.dim()).map(|a| self.is_periodic(a)).collect()
    }
}

/// Complex samples on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self, FieldError> {
        if values.len() != spec.len() {
            return Err(FieldError::DimensionMismatch { expected: spec.len(), found: values.len() });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(FieldError::NonFinite);
        }
        Ok(GridField { spec, values, label: label.into() })
    }

    pub fn zeros(spec: &GridSpec, label: impl Into<String>) -> Self {
        GridField { values: vec![Complex64::new(0.0, 0.0); spec.len()], spec: spec.clone(), label: label.into() }
    }

    /// Samples `f` at every node (parallel over nodes; the result does not depend on scheduling).
    pub fn from_fn(spec: &GridSpec, label: impl Into<String>, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let values = (0..spec.len()).into_par_iter().map(|k| f(&spec.node(k))).collect();
        GridField { spec: spec.clone(), values, label: label.into() }
    }

    pub fn map(&self, label: impl Into<String>, f: impl Fn(Complex64) -> Complex64 + Sync) -> Self {
        GridField { spec: self.spec.clone(), values: self.values.par_iter().map(|&v| f(v)).collect(), label: label.into() }
    }

    pub fn conj(&self) -> Self {
        self.map(format!("conj({})", self.label), |v| v.conj())
    }

    pub fn scale(&self, k: Complex64) -> Self {
        self.map(self.label.clone(), |v| v * k)
    }

    pub fn zip_with(&self, o: &GridField, f: impl Fn(Complex64, Complex64) -> Complex64 + Sync) -> Result<Self, FieldError> {
        if self.spec != o.spec {
            return Err(FieldError::SpecMismatch);
        }
        let values = self.values.par_iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridField { spec: self.spec.clone(), values, label: self.label.clone() })
    }

    pub fn add(&self, o: &GridField) -> Result<Self, FieldError> {
        self.zip_with(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &GridField) -> Result<Self, FieldError> {
        self.zip_with(o, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `sqrt(Σ |v|² · cell volume)` over all nodes, summed in node order.
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.cell_volume()).sqrt()
    }

    /// The slice `axis = index`, with that axis removed.
    pub fn restrict_to_slice(&self, axis: usize, index: usize) -> GridField {
        let sub = self.spec.drop_axis(axis);
        let mut idx = vec![0; self.spec.dim()];
        let mut sub_idx = vec![0; sub.dim()];
        let values = (0..sub.len())
            .map(|k| {
                sub.unflatten(k, &mut sub_idx);
                let mut j = 0;
                for (a, slot) in idx.iter_mut().enumerate() {
                    if a == axis {
                        *slot = index;
                    } else {
                        *slot = sub_idx[j];
                        j += 1;
                    }
                }
                self.values[self.spec.flatten(&idx)]
            })
            .collect();
        GridField { spec: sub, values, label: self.label.clone() }
    }

    /// Value at the node with coordinates `x`, if `x` is a node of this grid.
    pub fn value_at(&self, x: &[f64]) -> Option<Complex64> {
        let mut idx = Vec::with_capacity(x.len());
        for (a, &xa) in x.iter().enumerate() {
            let h = self.spec.spacing(a);
            let t = (xa - self.spec.extents[a].0) / h;
            let i = t.round();
            if (t - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.spec.points[a] {
                return None;
            }
            idx.push(i as usize);
        }
        Some(self.values[self.spec.flatten(&idx)])
    }

    /// `max |f|` over the interior nodes of `coarse` (all of which must be nodes of this grid).
    /// Comparing refinement levels on a fixed node set keeps the measured order free of
    /// boundary-layer drift.
    pub fn max_on_interior_of(&self, coarse: &GridSpec) -> Option<f64> {
        let mut idx = vec![0; coarse.dim()];
        let mut m = 0.0f64;
        for k in 0..coarse.len() {
            coarse.unflatten(k, &mut idx);
            if coarse.is_interior(&idx) {
                m = m.max(self.value_at(&coarse.node(k))?.norm());
            }
        }
        Some(m)
    }

    /// CSV dump: header of axis names then `re,im`; one row per node in row-major order.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{},re,im", self.spec.axis_names.join(","))?;
        for (k, v) in self.values.iter().enumerate() {
            let x = self.spec.node(k);
            let coords: Vec<String> = x.iter().map(|c| format!("{c}")).collect();
            writeln!(out, "{},{},{}", coords.join(","), v.re, v.im)?;
        }
        Ok(())
    }

    /// JSON sidecar describing the grid and label.
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({ "label": self.label, "spec": self.spec }))
            .expect("sidecar serializes")
    }
}

/// `Σ amplitude · exp(i p·x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneWaveSum {
    pub modes: Vec<(Vec<f64>, Complex64)>,
}

impl PlaneWaveSum {
    pub fn new(modes: Vec<(Vec<f64>, Complex64)>) -> Result<Self, FieldError> {
        let Some(d) = modes.first().map(|m| m.0.len()) else {
            return Err(FieldError::NoModes);
        };
        if let Some(m) = modes.iter().find(|m| m.0.len() != d) {
            return Err(FieldError::DimensionMismatch { expected: d, found: m.0.len() });
        }
        Ok(PlaneWaveSum { modes })
    }

    pub fn single(p: Vec<f64>, amplitude: Complex64) -> Self {
        PlaneWaveSum { modes: vec![(p, amplitude)] }
    }

    pub fn dim(&self) -> usize {
        self.modes[0].0.len()
    }

    pub fn scale(&self, k: Complex64) -> Self {
        PlaneWaveSum { modes: self.modes.iter().map(|(p, a)| (p.clone(), a * k)).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.modes
            .iter()
            .map(|(p, a)| {
                let phase: f64 = p.iter().zip(x).map(|(pi, xi)| pi * xi).sum();
                a * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    /// `∂_axis` evaluated analytically.
    pub fn eval_partial(&self, axis: usize, x: &[f64]) -> Complex64 {
        self.modes
            .iter()
            .map(|(p, a)| {
                let phase: f64 = p.iter().zip(x).map(|(pi, xi)| pi * xi).sum();
                a * Complex64::new(0.0, p[axis]) * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }
}

pub fn synthesize(spec: &GridSpec, waves: &PlaneWaveSum) -> Result<GridField, FieldError> {
    if waves.dim() != spec.dim() {
        return Err(FieldError::DimensionMismatch { expected: spec.dim(), found: waves.dim() });
    }
    Ok(GridField::from_fn(spec, "plane-wave-sum", |x| waves.eval(x)))
}
