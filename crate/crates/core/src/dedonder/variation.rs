use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{CovariantField, DedonderError, Integrand};
use crate::fields::{check_grid, GridSpec};
use crate::geometry::Metric;

type C64 = Complex64;

/// A variation `U = mix · b(x)` with `b` a tensor product of cosine-squared windows.
/// `mix` has one entry per slot (see [`CovariantField::slots`]); barred entries are the conjugates
/// of the unbarred ones so the variation is a real vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationProbe {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    pub mix: Vec<C64>,
}

impl VariationProbe {
    /// `b` along one axis at coordinate `x`.
    fn window(&self, axis: usize, x: f64) -> f64 {
        let u = (x - self.center[axis]) / self.half_width[axis];
        if u.abs() >= 1.0 {
            0.0
        } else {
            (std::f64::consts::FRAC_PI_2 * u).cos().powi(2)
        }
    }

    pub fn zero(dim: usize, spec: &GridSpec) -> Self {
        let center = (0..dim).map(|a| 0.5 * (spec.extents[a].0 + spec.extents[a].1)).collect();
        let half_width = (0..dim).map(|a| 0.2 * (spec.extents[a].1 - spec.extents[a].0)).collect();
        VariationProbe { center, half_width, mix: vec![C64::new(0.0, 0.0); 2 + 2 * dim] }
    }
}

/// Probes with half-width `0.2 L` per axis and centers in the middle fifth of the box, so the
/// support stays inside `[0.2 L, 0.8 L]`. Probe `j` uses ChaCha stream `j` of `seed`.
pub fn variation_probes(spec: &GridSpec, count: usize, seed: u64) -> Vec<VariationProbe> {
    let d = spec.dim();
    (0..count)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let mut center = Vec::with_capacity(d);
            let mut half_width = Vec::with_capacity(d);
            for &(lo, hi) in &spec.extents {
                let l = hi - lo;
                center.push(lo + l * rng.gen_range(0.4..0.6));
                half_width.push(0.2 * l);
            }
            let primal: Vec<C64> =
                (0..1 + d).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let mut mix = vec![primal[0], primal[0].conj()];
            mix.extend(&primal[1..]);
            mix.extend(primal[1..].iter().map(|c| c.conj()));
            VariationProbe { center, half_width, mix }
        })
        .collect()
}

/// `(S(χ + εU) − S(χ − εU)) / 2ε` for one probe. Only nodes whose stencil touches the support of
/// `U` contribute to the difference, so the sum runs over that sub-box.
pub fn directional_derivative(
    chi: &CovariantField,
    metric: &Metric,
    probe: &VariationProbe,
    eps: f64,
) -> Result<f64, DedonderError> {
    chi.check_metric(metric)?;
    let spec = chi.spec();
    check_grid(spec)?;
    let d = spec.dim();
    let windows: Vec<Vec<f64>> =
        (0..d).map(|a| (0..spec.points[a]).map(|i| probe.window(a, spec.coord(a, i))).collect()).collect();
    let ranges: Vec<(usize, usize)> = (0..d)
        .map(|a| {
            let n = spec.points[a];
            if spec.is_periodic(a) {
                return (0, n);
            }
            let first = windows[a].iter().position(|&w| w != 0.0);
            let last = windows[a].iter().rposition(|&w| w != 0.0);
            match (first, last) {
                (Some(f), Some(l)) => (f.saturating_sub(1).max(1), (l + 2).min(n - 1)),
                _ => (1, 1),
            }
        })
        .collect();
    if ranges.iter().any(|(lo, hi)| lo >= hi) || probe.mix.iter().all(|c| *c == C64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    let integrand = Integrand::new(metric, spec);
    let slots = chi.slots();
    let bump = |j: usize| -> f64 {
        let mut rest = j;
        let mut b = 1.0;
        for a in (0..d).rev() {
            b *= windows[a][rest % spec.points[a]];
            rest /= spec.points[a];
        }
        b
    };
    let sub = GridSpec {
        axis_names: spec.axis_names.clone(),
        extents: spec.extents.clone(),
        points: ranges.iter().map(|(lo, hi)| hi - lo).collect(),
        periodic: spec.periodic.clone(),
    };
    let mut scratch = vec![0usize; d];
    let mut idx = vec![0usize; d];
    let mut total = C64::new(0.0, 0.0);
    for s in 0..sub.len() {
        sub.unflatten(s, &mut scratch);
        for a in 0..d {
            idx[a] = scratch[a] + ranges[a].0;
        }
        let k = spec.flatten(&idx);
        let value = |sign: f64| {
            integrand.at(spec, k, &idx, |slot, j| slots[slot].values[j] + sign * eps * probe.mix[slot] * bump(j))
        };
        total += value(1.0) - value(-1.0);
    }
    Ok((total * spec.cell_volume() / (2.0 * eps)).re)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientReport {
    pub max: f64,
    pub epsilon: f64,
    pub per_probe: Vec<f64>,
}

/// The discrete Euler-Lagrange form sampled on `num_probes` seeded interior variations:
/// the largest `|dS[χ](U)|`, with `ε = 1e−6 · max|χ|` (or `1e−6` for `χ = 0`).
pub fn schwinger_weiss_gradient(
    chi: &CovariantField,
    metric: &Metric,
    num_probes: usize,
    seed: u64,
) -> Result<GradientReport, DedonderError> {
    chi.check_metric(metric)?;
    check_grid(chi.spec())?;
    let scale = chi.max_abs();
    let eps = 1e-6 * if scale > 0.0 { scale } else { 1.0 };
    let probes = variation_probes(chi.spec(), num_probes, seed);
    let per_probe: Vec<f64> = probes
        .par_iter()
        .map(|p| directional_derivative(chi, metric, p, eps))
        .collect::<Result<_, _>>()?;
    let max = per_probe.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(GradientReport { max, epsilon: eps, per_probe })
}
