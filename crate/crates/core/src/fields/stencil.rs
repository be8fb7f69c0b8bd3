use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use super::{FieldError, GridField, GridSpec, PlaneWaveSum};
use crate::matrix::RatMatrix;
use crate::oracle::ConstCoeffOperator;
use crate::scalar::rat_to_f64;

/// `Σ A^{μν} D_μ D_ν + Σ b^μ D_μ + c` discretized with second-order central differences.
///
/// Diagonal second derivatives use the compact 3-point stencil; mixed ones are the product of
/// two central first differences.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilOperator {
    pub second: Vec<Vec<Complex64>>,
    pub first: Vec<Complex64>,
    pub zeroth: Complex64,
}

impl StencilOperator {
    /// `Σ coeffs[μ][ν] D_μ D_ν + mass_term`.
    pub fn from_coeffs(coeffs: &RatMatrix, mass_term: Complex64) -> Self {
        let n = coeffs.rows();
        StencilOperator {
            second: (0..n)
                .map(|i| (0..n).map(|j| Complex64::new(rat_to_f64(&coeffs[(i, j)]), 0.0)).collect())
                .collect(),
            first: vec![Complex64::zero(); n],
            zeroth: mass_term,
        }
    }

    pub fn from_exact(op: &ConstCoeffOperator) -> Self {
        let n = op.dim();
        StencilOperator {
            second: (0..n).map(|i| (0..n).map(|j| op.second[(i, j)].to_c64()).collect()).collect(),
            first: op.first.iter().map(|c| c.to_c64()).collect(),
            zeroth: op.zeroth.to_c64(),
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn scale(&self, k: Complex64) -> Self {
        StencilOperator {
            second: self.second.iter().map(|r| r.iter().map(|c| c * k).collect()).collect(),
            first: self.first.iter().map(|c| c * k).collect(),
            zeroth: self.zeroth * k,
        }
    }

    /// Symbol on a plane wave `exp(i p·x)` with exact derivatives: `−A(p,p) + i b·p + c`.
    pub fn symbol(&self, p: &[f64]) -> Complex64 {
        let n = self.dim();
        let mut s = self.zeroth;
        for mu in 0..n {
            s += self.first[mu] * Complex64::new(0.0, p[mu]);
            for nu in 0..n {
                s -= self.second[mu][nu] * p[mu] * p[nu];
            }
        }
        s
    }

    /// Value at the interior node `idx` (flat index `k`).
    pub fn apply_at(&self, f: &GridField, k: usize, idx: &[usize], strides: &[usize]) -> Complex64 {
        let spec = &f.spec;
        let v = &f.values;
        let n = self.dim();
        let shift = |k: usize, a: usize, dir: isize| -> usize {
            let i = idx[a];
            let np = spec.points[a];
            let j = if dir > 0 {
                if i + 1 == np { 0 } else { i + 1 }
            } else if i == 0 {
                np - 1
            } else {
                i - 1
            };
            k + j * strides[a] - i * strides[a]
        };
        let mut acc = self.zeroth * v[k];
        for a in 0..n {
            let ha = spec.spacing(a);
            let kp = shift(k, a, 1);
            let km = shift(k, a, -1);
            let caa = self.second[a][a];
            if !caa.is_zero() {
                acc += caa * (v[kp] - 2.0 * v[k] + v[km]) / (ha * ha);
            }
            if !self.first[a].is_zero() {
                acc += self.first[a] * (v[kp] - v[km]) / (2.0 * ha);
            }
            for b in a + 1..n {
                let c = self.second[a][b] + self.second[b][a];
                if c.is_zero() {
                    continue;
                }
                let hb = spec.spacing(b);
                let d = v[shift(kp, b, 1)] - v[shift(kp, b, -1)] - v[shift(km, b, 1)] + v[shift(km, b, -1)];
                acc += c * d / (4.0 * ha * hb);
            }
        }
        acc
    }
}

/// Interior residual field (zero on boundary nodes) with its norms.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub field: GridField,
    pub max: f64,
    /// `sqrt(Σ_interior |r|² · cell volume)`.
    pub l2: f64,
    pub interior_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Norms {
    pub max: f64,
    pub l2: f64,
}

impl ResidualReport {
    pub fn norms(&self) -> Norms {
        Norms { max: self.max, l2: self.l2 }
    }
}

pub fn check_grid(spec: &GridSpec) -> Result<(), FieldError> {
    match spec.points.iter().position(|&n| n < 4) {
        Some(axis) => Err(FieldError::GridTooSmall { axis, points: spec.points[axis] }),
        None => Ok(()),
    }
}

/// Applies a stencil operator on interior nodes.
pub fn apply_operator_grid(field: &GridField, op: &StencilOperator) -> Result<ResidualReport, FieldError> {
    let spec = &field.spec;
    if op.dim() != spec.dim() {
        return Err(FieldError::DimensionMismatch { expected: spec.dim(), found: op.dim() });
    }
    check_grid(spec)?;
    let strides = spec.strides();
    let values: Vec<Option<Complex64>> = (0..spec.len())
        .into_par_iter()
        .map_init(
            || vec![0usize; spec.dim()],
            |idx, k| {
                spec.unflatten(k, idx);
                spec.is_interior(idx).then(|| op.apply_at(field, k, idx, &strides))
            },
        )
        .collect();
    let mut max = 0.0f64;
    let mut sq = 0.0;
    let mut count = 0;
    for v in values.iter().flatten() {
        max = max.max(v.norm());
        sq += v.norm_sqr();
        count += 1;
    }
    let out = GridField {
        spec: spec.clone(),
        values: values.into_iter().map(|v| v.unwrap_or_default()).collect(),
        label: format!("residual({})", field.label),
    };
    Ok(ResidualReport { field: out, max, l2: (sq * spec.cell_volume()).sqrt(), interior_nodes: count })
}

/// `Σ coeffs[μ][ν] D_μ D_ν φ + mass_term · φ` on interior nodes.
pub fn residual(field: &GridField, op_coeffs: &RatMatrix, mass_term: Complex64) -> Result<ResidualReport, FieldError> {
    apply_operator_grid(field, &StencilOperator::from_coeffs(op_coeffs, mass_term))
}

/// `max_k |(−σ(p_k) + mass_term) · a_k|`, i.e. the residual with exact derivatives.
pub fn spectral_residual(waves: &PlaneWaveSum, op_coeffs: &RatMatrix, mass_term: Complex64) -> Result<f64, FieldError> {
    let op = StencilOperator::from_coeffs(op_coeffs, mass_term);
    spectral_residual_op(waves, &op)
}

pub fn spectral_residual_op(waves: &PlaneWaveSum, op: &StencilOperator) -> Result<f64, FieldError> {
    if waves.dim() != op.dim() {
        return Err(FieldError::DimensionMismatch { expected: op.dim(), found: waves.dim() });
    }
    Ok(waves.modes.iter().map(|(p, a)| (op.symbol(p) * a).norm()).fold(0.0, f64::max))
}

/// Observed orders `log(e_k / e_{k+1}) / log(h_k / h_{k+1})` between consecutive levels.
pub fn observed_orders(spacings: &[f64], errors: &[f64]) -> Vec<f64> {
    spacings
        .windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}
