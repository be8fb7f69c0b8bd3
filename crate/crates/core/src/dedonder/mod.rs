//! First-order (de Donder-Weyl) form of the complex wave equation: covariant fields
//! `χ = (φ, φ̄, P, P̄)`, the Hamiltonian `H = η_{μν} P̄^μ P^ν`, the discrete action and its
//! gradient, and the reduced first-order systems obtained from the reduction ansätze.

mod reduced;
mod variation;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fields::{check_grid, FieldError, GridField, GridSpec, Norms, PlaneWaveSum, ResidualReport};
use crate::geometry::{Chart, Metric};
use crate::oracle::OracleError;

pub use reduced::{
    assemble_reduced, extract_reduced, Equation, FirstOrderSystem, ReducedCovariantField, Slot, Term,
};
pub use variation::{directional_derivative, schwinger_weiss_gradient, variation_probes, GradientReport, VariationProbe};

type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DedonderError {
    #[error("chart mismatch: field is in `{field}`, metric is in `{metric}`")]
    ChartMismatch { field: Chart, metric: Chart },
    #[error("expected {expected} momentum components, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("momentum relations are not algebraic in the momenta: {0}")]
    NotAlgebraic(String),
    #[error("momentum relations cannot be solved for the momenta")]
    SingularRelations,
    #[error("mass must be positive")]
    NonPositiveMass,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A section `χ(x) = (φ, φ̄, P^μ, P̄^μ)` sampled on a grid. The barred components are independent
/// storage; [`CovariantField::is_physical`] checks whether they are the conjugates.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariantField {
    pub chart: Chart,
    pub phi: GridField,
    pub phibar: GridField,
    pub p: Vec<GridField>,
    pub pbar: Vec<GridField>,
}

impl CovariantField {
    pub fn new(
        chart: Chart,
        phi: GridField,
        phibar: GridField,
        p: Vec<GridField>,
        pbar: Vec<GridField>,
    ) -> Result<Self, DedonderError> {
        let d = phi.spec.dim();
        for comps in [&p, &pbar] {
            if comps.len() != d {
                return Err(DedonderError::DimensionMismatch { expected: d, found: comps.len() });
            }
        }
        if std::iter::once(&phibar).chain(&p).chain(&pbar).any(|f| f.spec != phi.spec) {
            return Err(FieldError::SpecMismatch.into());
        }
        Ok(CovariantField { chart, phi, phibar, p, pbar })
    }

    /// Barred components set to the conjugates.
    pub fn physical(chart: Chart, phi: GridField, p: Vec<GridField>) -> Result<Self, DedonderError> {
        let phibar = phi.conj();
        let pbar = p.iter().map(GridField::conj).collect();
        Self::new(chart, phi, phibar, p, pbar)
    }

    pub fn zeros(chart: Chart, spec: &GridSpec) -> Self {
        let z = |l: &str| GridField::zeros(spec, l);
        CovariantField {
            chart,
            phi: z("phi"),
            phibar: z("phibar"),
            p: (0..spec.dim()).map(|m| z(&format!("P{m}"))).collect(),
            pbar: (0..spec.dim()).map(|m| z(&format!("Pbar{m}"))).collect(),
        }
    }

    /// `φ = waves`, `P^μ = η^{μν} ∂_ν φ` with exact derivatives, barred components conjugated.
    pub fn from_waves(metric: &Metric, spec: &GridSpec, waves: &PlaneWaveSum) -> Result<Self, DedonderError> {
        let d = metric.dim();
        if spec.dim() != d || waves.dim() != d {
            return Err(FieldError::DimensionMismatch { expected: d, found: spec.dim().min(waves.dim()) }.into());
        }
        let inv = metric.inverse().to_f64();
        let phi = GridField::from_fn(spec, "phi", |x| waves.eval(x));
        let p = (0..d)
            .map(|mu| {
                GridField::from_fn(spec, format!("P{mu}"), |x| {
                    (0..d).map(|nu| inv[mu][nu] * waves.eval_partial(nu, x)).sum()
                })
            })
            .collect();
        Self::physical(metric.chart(), phi, p)
    }

    /// Independent smooth random components: every slot is its own random off-shell plane-wave
    /// sum with wave numbers in `[−2, 2]`, so no relation between `φ` and `P` holds.
    pub fn random_smooth(chart: Chart, spec: &GridSpec, modes: usize, seed: u64) -> Result<Self, DedonderError> {
        let d = spec.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wave = |rng: &mut ChaCha8Rng| -> Result<PlaneWaveSum, FieldError> {
            let m = (0..modes.max(1))
                .map(|_| {
                    let p = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    (p, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                })
                .collect();
            PlaneWaveSum::new(m)
        };
        let w_phi = wave(&mut rng)?;
        let phi = GridField::from_fn(spec, "phi", |x| w_phi.eval(x));
        let mut p = Vec::with_capacity(d);
        for mu in 0..d {
            let w = wave(&mut rng)?;
            p.push(GridField::from_fn(spec, format!("P{mu}"), |x| w.eval(x)));
        }
        Self::physical(chart, phi, p)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.phi.spec
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Slot order: `φ, φ̄, P^0 … P^{d−1}, P̄^0 … P̄^{d−1}`.
    pub fn slots(&self) -> Vec<&GridField> {
        let mut v = vec![&self.phi, &self.phibar];
        v.extend(&self.p);
        v.extend(&self.pbar);
        v
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        let close = |a: &GridField, b: &GridField| a.values.iter().zip(&b.values).all(|(x, y)| (x.conj() - y).norm() <= tol);
        close(&self.phi, &self.phibar) && self.p.iter().zip(&self.pbar).all(|(a, b)| close(a, b))
    }

    pub fn max_abs(&self) -> f64 {
        self.slots().iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    fn check_metric(&self, metric: &Metric) -> Result<(), DedonderError> {
        if metric.chart() != self.chart {
            return Err(DedonderError::ChartMismatch { field: self.chart, metric: metric.chart() });
        }
        if metric.dim() != self.dim() {
            return Err(DedonderError::DimensionMismatch { expected: metric.dim(), found: self.dim() });
        }
        Ok(())
    }
}

/// `H = Σ η_{μν} P̄^μ P^ν` at every node.
pub fn hamiltonian_density(chi: &CovariantField, metric: &Metric) -> Result<GridField, DedonderError> {
    chi.check_metric(metric)?;
    let eta = metric.components().to_f64();
    let d = chi.dim();
    let values = (0..chi.spec().len())
        .into_par_iter()
        .map(|k| {
            let mut h = C64::new(0.0, 0.0);
            for mu in 0..d {
                for nu in 0..d {
                    if eta[mu][nu] != 0.0 {
                        h += eta[mu][nu] * chi.pbar[mu].values[k] * chi.p[nu].values[k];
                    }
                }
            }
            h
        })
        .collect();
    Ok(GridField { spec: chi.spec().clone(), values, label: "H".into() })
}

/// Everything the pointwise action integrand needs besides the field values.
pub(crate) struct Integrand {
    eta: Vec<Vec<f64>>,
    inv2h: Vec<f64>,
    d: usize,
}

impl Integrand {
    pub(crate) fn new(metric: &Metric, spec: &GridSpec) -> Self {
        let d = spec.dim();
        Integrand { eta: metric.components().to_f64(), inv2h: (0..d).map(|a| 0.5 / spec.spacing(a)).collect(), d }
    }

    /// `P̄^μ D_μ φ + P^μ D_μ φ̄ − η_{μν} P̄^μ P^ν` at interior node `k`, reading slot values
    /// through `get(slot, flat)`.
    pub(crate) fn at(&self, spec: &GridSpec, k: usize, idx: &[usize], get: impl Fn(usize, usize) -> C64) -> C64 {
        let d = self.d;
        let mut acc = C64::new(0.0, 0.0);
        for mu in 0..d {
            let kp = spec.neighbor(k, idx, mu, true);
            let km = spec.neighbor(k, idx, mu, false);
            let dphi = (get(0, kp) - get(0, km)) * self.inv2h[mu];
            let dphibar = (get(1, kp) - get(1, km)) * self.inv2h[mu];
            let pbar_mu = get(2 + d + mu, k);
            acc += pbar_mu * dphi + get(2 + mu, k) * dphibar;
            for nu in 0..d {
                if self.eta[mu][nu] != 0.0 {
                    acc -= self.eta[mu][nu] * pbar_mu * get(2 + nu, k);
                }
            }
        }
        acc
    }
}

/// The discrete action, complex-valued: Riemann sum of the integrand over interior nodes times
/// the cell volume, derivatives by central differences.
pub fn action_complex(chi: &CovariantField, metric: &Metric) -> Result<C64, DedonderError> {
    chi.check_metric(metric)?;
    let spec = chi.spec();
    check_grid(spec)?;
    let integrand = Integrand::new(metric, spec);
    let slots = chi.slots();
    let get = |s: usize, j: usize| slots[s].values[j];
    let partial: Vec<C64> = (0..spec.len())
        .into_par_iter()
        .map_init(
            || vec![0usize; spec.dim()],
            |idx, k| {
                spec.unflatten(k, idx);
                if spec.is_interior(idx) {
                    integrand.at(spec, k, idx, get)
                } else {
                    C64::new(0.0, 0.0)
                }
            },
        )
        .collect();
    Ok(partial.iter().sum::<C64>() * spec.cell_volume())
}

/// The discrete action `S[χ]`. Real on physical sections; the imaginary part of
/// [`action_complex`] is dropped.
pub fn action(chi: &CovariantField, metric: &Metric) -> Result<f64, DedonderError> {
    Ok(action_complex(chi, metric)?.re)
}

/// `χ^*θ_H` evaluated from the form's coefficient functions: the coefficient of
/// `dx^ν ∧ i_{∂_μ} vol` is expanded by explicit wedge-sign bookkeeping, then `−H vol` is added.
/// Returns the coefficient of `vol`.
pub fn pullback_theta_h(
    eta: &[Vec<f64>],
    p: &[C64],
    pbar: &[C64],
    dphi: &[C64],
    dphibar: &[C64],
) -> C64 {
    let d = p.len();
    let mut acc = C64::new(0.0, 0.0);
    for mu in 0..d {
        // i_{∂μ} vol = (−1)^μ dx^0 ∧ … (omit μ) … ∧ dx^{d−1}.
        let contraction_sign = if mu % 2 == 0 { 1.0 } else { -1.0 };
        for nu in 0..d {
            let omitted: Vec<usize> = (0..d).filter(|&a| a != mu).collect();
            let sign = wedge_sign(nu, &omitted) * contraction_sign;
            if sign != 0.0 {
                acc += sign * (pbar[mu] * dphi[nu] + p[mu] * dphibar[nu]);
            }
        }
    }
    for mu in 0..d {
        for nu in 0..d {
            acc -= eta[mu][nu] * pbar[mu] * p[nu];
        }
    }
    acc
}

/// Sign `s` with `dx^first ∧ dx^{rest…} = s · dx^0 ∧ … ∧ dx^{d−1}` (0 when an index repeats).
fn wedge_sign(first: usize, rest: &[usize]) -> f64 {
    if rest.contains(&first) {
        return 0.0;
    }
    let mut seq = vec![first];
    seq.extend_from_slice(rest);
    let mut inversions = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One residual per first-order equation.
#[derive(Clone, Debug)]
pub struct DdwResiduals {
    pub equations: Vec<(String, ResidualReport)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquationNorms {
    pub equation: String,
    pub max: f64,
    pub l2: f64,
}

impl DdwResiduals {
    pub fn norms(&self) -> Vec<EquationNorms> {
        self.equations
            .iter()
            .map(|(name, r)| EquationNorms { equation: name.clone(), max: r.max, l2: r.l2 })
            .collect()
    }

    pub fn max(&self) -> f64 {
        self.equations.iter().map(|(_, r)| r.max).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&ResidualReport> {
        self.equations.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }
}

/// Builds a residual report from a per-interior-node evaluator.
pub(crate) fn interior_report(
    spec: &GridSpec,
    label: &str,
    eval: impl Fn(usize, &[usize]) -> C64 + Sync,
) -> ResidualReport {
    let values: Vec<Option<C64>> = (0..spec.len())
        .into_par_iter()
        .map_init(
            || vec![0usize; spec.dim()],
            |idx, k| {
                spec.unflatten(k, idx);
                spec.is_interior(idx).then(|| eval(k, idx))
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
    let field = GridField {
        spec: spec.clone(),
        values: values.into_iter().map(|v| v.unwrap_or_default()).collect(),
        label: label.to_string(),
    };
    ResidualReport { field, max, l2: (sq * spec.cell_volume()).sqrt(), interior_nodes: count }
}

/// Residuals of `∂_μ φ − η_{μν} P^ν = 0` (one per axis), `∂_μ P^μ = 0`, and the conjugate family
/// (suffix `*`), on interior nodes.
pub fn ddw_residuals(chi: &CovariantField, metric: &Metric) -> Result<DdwResiduals, DedonderError> {
    chi.check_metric(metric)?;
    let spec = chi.spec();
    check_grid(spec)?;
    let eta = metric.components().to_f64();
    let d = chi.dim();
    let names = chi.chart.axis_names();
    let inv2h: Vec<f64> = (0..d).map(|a| 0.5 / spec.spacing(a)).collect();
    let diff = |f: &GridField, a: usize, k: usize, idx: &[usize]| {
        (f.values[spec.neighbor(k, idx, a, true)] - f.values[spec.neighbor(k, idx, a, false)]) * inv2h[a]
    };
    let mut equations = Vec::with_capacity(2 * d + 2);
    for (phi, p, star) in [(&chi.phi, &chi.p, ""), (&chi.phibar, &chi.pbar, "*")] {
        for mu in 0..d {
            let name = format!("grad[{}]{star}", names[mu]);
            let r = interior_report(spec, &name, |k, idx| {
                let mut v = diff(phi, mu, k, idx);
                for nu in 0..d {
                    if eta[mu][nu] != 0.0 {
                        v -= eta[mu][nu] * p[nu].values[k];
                    }
                }
                v
            });
            equations.push((name, r));
        }
        let name = format!("div{star}");
        let r = interior_report(spec, &name, |k, idx| (0..d).map(|mu| diff(&p[mu], mu, k, idx)).sum());
        equations.push((name, r));
    }
    Ok(DdwResiduals { equations })
}

/// Machine-readable summary of a residual or gradient study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DedonderReport {
    pub convention: String,
    pub chart: String,
    pub resolution: Vec<usize>,
    pub per_equation_norms: Vec<EquationNorms>,
    pub gradient_max: Option<f64>,
    pub contrast_ratio: Option<f64>,
}

impl DedonderReport {
    pub fn new(metric: &Metric, spec: &GridSpec, norms: Vec<EquationNorms>) -> Self {
        DedonderReport {
            convention: metric.convention_label(),
            chart: metric.chart().name().to_string(),
            resolution: spec.points.clone(),
            per_equation_norms: norms,
            gradient_max: None,
            contrast_ratio: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Residual norms reduced to a single figure per equation family.
pub fn summarize(norms: &[EquationNorms]) -> Norms {
    Norms {
        max: norms.iter().map(|n| n.max).fold(0.0, f64::max),
        l2: norms.iter().map(|n| n.l2 * n.l2).sum::<f64>().sqrt(),
    }
}

/// A null covector `p` (so `η^{μν} p_μ p_ν = 0`) with small components: the spatial part is
/// fixed at `(0.12, 0.16, 0)` plus `0.1` along the last axis, and `p_0` is solved for.
pub fn default_null_momentum(metric: &Metric) -> Vec<f64> {
    let g = metric.inverse().to_f64();
    let d = metric.dim();
    let mut p = vec![0.0; d];
    p[1] = 0.12;
    if d > 2 {
        p[2] = 0.16;
    }
    p[d - 1] = 0.1;
    let a = g[0][0];
    let b: f64 = 2.0 * (1..d).map(|nu| g[0][nu] * p[nu]).sum::<f64>();
    let c: f64 = (1..d).flat_map(|mu| (1..d).map(move |nu| (mu, nu))).map(|(mu, nu)| g[mu][nu] * p[mu] * p[nu]).sum();
    p[0] = if a == 0.0 { -c / b } else { (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a) };
    p
}

#[cfg(test)]
mod tests;
