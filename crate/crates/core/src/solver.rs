//! Explicit leapfrog for the reduced Klein-Gordon equation and Crank-Nicolson for the reduced
//! Schrödinger equation, both on periodic spatial grids.
//!
//! Klein-Gordon: `∂₀²u = Δu − s·m²u`, `s = +1` for the standard sign and `s = −1` for the
//! printed (growing-mode) sign. With `A = −Δ_h + s·m²` the leapfrog update is
//! `u⁺ = 2u − u⁻ − dt²·A u`, and it conserves `E = ‖(u⁺ − u)/dt‖² + Re⟨u⁺, A u⟩` exactly
//! up to rounding.
//!
//! Schrödinger: `c·i·m·∂ₜψ = −Δψ`. The Crank-Nicolson system `(I − a Δ_h) ψ⁺ = (I + a Δ_h) ψ`
//! with `a = i·dt/(2 c m)` is solved by Jacobi iteration, which converges for any `dt` because
//! `a` is purely imaginary.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, GridField, GridSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("CFL violation: dt = {dt} exceeds the stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("implicit solve did not converge: last update {update:e} after {iterations} iterations")]
    NonConvergence { update: f64, iterations: usize },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KgSign {
    /// `∂₀²u − Δu + m²u = 0`.
    Standard,
    /// `∂₀²u = Δu + m²u`, the printed sign; long waves grow exponentially.
    Printed,
}

impl KgSign {
    fn s(self) -> f64 {
        match self {
            KgSign::Standard => 1.0,
            KgSign::Printed => -1.0,
        }
    }

    pub fn regime(self) -> &'static str {
        match self {
            KgSign::Standard => "oscillatory",
            KgSign::Printed => "growing-mode regime",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    KleinGordon { u0: GridField, v0: GridField },
    Schroedinger { psi0: GridField },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionProblem {
    pub mass: f64,
    pub dt: f64,
    pub steps: usize,
    pub initial: Initial,
    /// Klein-Gordon sign; ignored for Schrödinger.
    pub kg_sign: KgSign,
    /// `c` in `c·i·m·∂ₜψ = −Δψ`; ignored for Klein-Gordon.
    pub se_coefficient: f64,
}

pub const SE_MAX_ITERATIONS: usize = 50;
pub const SE_TOLERANCE: f64 = 1e-12;
const SE_TARGET: f64 = 1e-14;

impl EvolutionProblem {
    pub fn spec(&self) -> &GridSpec {
        match &self.initial {
            Initial::KleinGordon { u0, .. } => &u0.spec,
            Initial::Schroedinger { psi0 } => &psi0.spec,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.initial {
            Initial::KleinGordon { .. } => "klein-gordon",
            Initial::Schroedinger { .. } => "schroedinger",
        }
    }

    fn min_spacing(&self) -> f64 {
        let s = self.spec();
        (0..s.dim()).map(|a| s.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// `h/√d` (Klein-Gordon) or `m·h²/d` (Schrödinger).
    pub fn cfl_bound(&self) -> f64 {
        let d = self.spec().dim() as f64;
        let h = self.min_spacing();
        match self.initial {
            Initial::KleinGordon { .. } => h / d.sqrt(),
            Initial::Schroedinger { .. } => self.mass * h * h / d,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let spec = self.spec();
        if !(1..=3).contains(&spec.dim()) {
            return Err(SolverError::Invalid(format!("{} spatial axes (expected 1 to 3)", spec.dim())));
        }
        if (0..spec.dim()).any(|a| !spec.is_periodic(a)) {
            return Err(SolverError::Invalid("all spatial axes must be periodic".into()));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(SolverError::Invalid("mass must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::Invalid("dt must be positive".into()));
        }
        if let Initial::KleinGordon { u0, v0 } = &self.initial {
            if u0.spec != v0.spec {
                return Err(FieldError::SpecMismatch.into());
            }
        }
        if let Initial::Schroedinger { .. } = self.initial {
            if self.se_coefficient == 0.0 || !self.se_coefficient.is_finite() {
                return Err(SolverError::Invalid("Schroedinger coefficient must be nonzero".into()));
            }
        }
        let bound = self.cfl_bound();
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(SolverError::CflViolation { dt: self.dt, bound });
        }
        Ok(())
    }
}

/// Periodic 3-point Laplacian.
pub fn laplacian(f: &GridField) -> Vec<Complex64> {
    let spec = &f.spec;
    let strides = spec.strides();
    let inv_h2: Vec<f64> = (0..spec.dim()).map(|a| 1.0 / (spec.spacing(a) * spec.spacing(a))).collect();
    (0..spec.len())
        .into_par_iter()
        .map_init(
            || vec![0usize; spec.dim()],
            |idx, k| {
                spec.unflatten(k, idx);
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..spec.dim() {
                    let n = spec.points[a];
                    let i = idx[a];
                    let base = k - i * strides[a];
                    let up = base + ((i + 1) % n) * strides[a];
                    let dn = base + ((i + n - 1) % n) * strides[a];
                    acc += (f.values[up] - 2.0 * f.values[k] + f.values[dn]) * inv_h2[a];
                }
                acc
            },
        )
        .collect()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

/// Leapfrog state `(u^{n-1}, u^n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KgState {
    pub prev: GridField,
    pub curr: GridField,
    pub step: usize,
    pub time: f64,
}

impl KgState {
    /// Swaps the two time levels; stepping the result runs the scheme backwards.
    pub fn reversed(&self) -> KgState {
        KgState { prev: self.curr.clone(), curr: self.prev.clone(), step: self.step, time: self.time }
    }
}

fn apply_a(u: &GridField, m2s: f64) -> Vec<Complex64> {
    let lap = laplacian(u);
    lap.par_iter().zip(&u.values).map(|(l, v)| -l + m2s * v).collect()
}

/// Second-order start: `u¹ = u⁰ + dt·v⁰ − dt²/2 · A u⁰`.
pub fn start_kg(problem: &EvolutionProblem) -> Result<KgState, SolverError> {
    problem.validate()?;
    let Initial::KleinGordon { u0, v0 } = &problem.initial else {
        return Err(SolverError::Invalid("not a Klein-Gordon problem".into()));
    };
    let dt = problem.dt;
    let au = apply_a(u0, problem.kg_sign.s() * problem.mass * problem.mass);
    let values = u0
        .values
        .par_iter()
        .zip(&v0.values)
        .zip(&au)
        .map(|((u, v), a)| u + dt * v - 0.5 * dt * dt * a)
        .collect();
    let u1 = GridField { spec: u0.spec.clone(), values, label: u0.label.clone() };
    Ok(KgState { prev: u0.clone(), curr: u1, step: 1, time: dt })
}

/// One leapfrog step.
pub fn step_kg(problem: &EvolutionProblem, state: &KgState) -> Result<KgState, SolverError> {
    problem.validate()?;
    let dt2 = problem.dt * problem.dt;
    let au = apply_a(&state.curr, problem.kg_sign.s() * problem.mass * problem.mass);
    let values = state
        .curr
        .values
        .par_iter()
        .zip(&state.prev.values)
        .zip(&au)
        .map(|((u, um), a)| 2.0 * u - um - dt2 * a)
        .collect();
    let next = GridField { spec: state.curr.spec.clone(), values, label: state.curr.label.clone() };
    Ok(KgState { prev: state.curr.clone(), curr: next, step: state.step + 1, time: state.time + problem.dt })
}

/// `‖(uⁿ − uⁿ⁻¹)/dt‖² + Re⟨uⁿ, A uⁿ⁻¹⟩`, scaled by the cell volume.
pub fn kg_energy(problem: &EvolutionProblem, state: &KgState) -> f64 {
    let dt = problem.dt;
    let vel: Vec<Complex64> = state.curr.values.iter().zip(&state.prev.values).map(|(a, b)| (a - b) / dt).collect();
    let a_prev = apply_a(&state.prev, problem.kg_sign.s() * problem.mass * problem.mass);
    (norm_sq(&vel) + inner(&state.curr.values, &a_prev).re) * state.curr.spec.cell_volume()
}

/// One Crank-Nicolson step; returns the new field and the last Jacobi update size.
pub fn step_se(problem: &EvolutionProblem, psi: &GridField) -> Result<(GridField, f64), SolverError> {
    problem.validate()?;
    let spec = &psi.spec;
    let a = Complex64::new(0.0, problem.dt / (2.0 * problem.se_coefficient * problem.mass));
    let lap = laplacian(psi);
    let rhs: Vec<Complex64> = psi.values.par_iter().zip(&lap).map(|(p, l)| p + a * l).collect();
    let diag_sum: f64 = (0..spec.dim()).map(|ax| 2.0 / (spec.spacing(ax) * spec.spacing(ax))).sum();
    let d = 1.0 + a * diag_sum;
    let scale = psi.max_abs().max(1e-300);
    let mut x = GridField { spec: spec.clone(), values: rhs.clone(), label: psi.label.clone() };
    let mut update = f64::INFINITY;
    let mut iterations = 0;
    while iterations < SE_MAX_ITERATIONS {
        iterations += 1;
        let lx = laplacian(&x);
        // (I − aΔ)x = rhs  ⇒  x = (rhs + a(Δx + diag_sum·x)) / d
        let next: Vec<Complex64> = rhs
            .par_iter()
            .zip(&lx)
            .zip(&x.values)
            .map(|((r, l), xv)| (r + a * (l + diag_sum * xv)) / d)
            .collect();
        update = next.iter().zip(&x.values).fold(0.0f64, |m, (p, q)| m.max((p - q).norm())) / scale;
        x.values = next;
        if update <= SE_TARGET {
            break;
        }
    }
    if update > SE_TOLERANCE {
        return Err(SolverError::NonConvergence { update, iterations });
    }
    Ok((x, update))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub l2_norm: f64,
    pub energy: f64,
    /// Klein-Gordon: largest `|u⁺ − 2u + u⁻ + dt²·A u|` (rounding level). Schrödinger: last
    /// relative Jacobi update.
    pub max_residual: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub kind: &'static str,
    pub regime: Option<&'static str>,
    pub records: Vec<StepRecord>,
    pub final_field: GridField,
}

impl Trajectory {
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("record serializes"));
            s.push('\n');
        }
        s
    }

    /// `max |q_k − q_0| / |q_0|` over the records for the chosen quantity.
    pub fn relative_drift(&self, quantity: impl Fn(&StepRecord) -> f64) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        let q0 = quantity(first);
        let denom = if q0 == 0.0 { 1.0 } else { q0.abs() };
        self.records.iter().map(|r| (quantity(r) - q0).abs() / denom).fold(0.0, f64::max)
    }
}

/// Runs `problem.steps` steps, recording diagnostics after each (and once for the initial data).
pub fn evolve(problem: &EvolutionProblem) -> Result<Trajectory, SolverError> {
    problem.validate()?;
    match &problem.initial {
        Initial::Schroedinger { psi0 } => {
            let mut records = vec![StepRecord { step: 0, time: 0.0, l2_norm: psi0.l2(), energy: se_energy(psi0), max_residual: 0.0 }];
            let mut psi = psi0.clone();
            for n in 1..=problem.steps {
                let (next, update) = step_se(problem, &psi)?;
                psi = next;
                records.push(StepRecord {
                    step: n,
                    time: n as f64 * problem.dt,
                    l2_norm: psi.l2(),
                    energy: se_energy(&psi),
                    max_residual: update,
                });
            }
            Ok(Trajectory { kind: problem.kind(), regime: None, records, final_field: psi })
        }
        Initial::KleinGordon { u0, .. } => {
            let mut records = vec![StepRecord { step: 0, time: 0.0, l2_norm: u0.l2(), energy: f64::NAN, max_residual: 0.0 }];
            if problem.steps == 0 {
                return Ok(Trajectory { kind: problem.kind(), regime: Some(problem.kg_sign.regime()), records, final_field: u0.clone() });
            }
            let mut state = start_kg(problem)?;
            records[0].energy = kg_energy(problem, &state);
            records.push(StepRecord { step: 1, time: state.time, l2_norm: state.curr.l2(), energy: records[0].energy, max_residual: 0.0 });
            while state.step < problem.steps {
                let next = step_kg(problem, &state)?;
                let residual = kg_update_residual(problem, &state, &next);
                state = next;
                records.push(StepRecord {
                    step: state.step,
                    time: state.time,
                    l2_norm: state.curr.l2(),
                    energy: kg_energy(problem, &state),
                    max_residual: residual,
                });
            }
            Ok(Trajectory { kind: problem.kind(), regime: Some(problem.kg_sign.regime()), records, final_field: state.curr })
        }
    }
}

fn kg_update_residual(problem: &EvolutionProblem, before: &KgState, after: &KgState) -> f64 {
    let au = apply_a(&before.curr, problem.kg_sign.s() * problem.mass * problem.mass);
    let dt2 = problem.dt * problem.dt;
    after
        .curr
        .values
        .iter()
        .zip(&before.curr.values)
        .zip(&before.prev.values)
        .zip(&au)
        .map(|(((up, u), um), a)| (up - 2.0 * u + um + dt2 * a).norm())
        .fold(0.0, f64::max)
}

/// `⟨ψ, −Δ_h ψ⟩ · cell volume`, conserved by Crank-Nicolson.
pub fn se_energy(psi: &GridField) -> f64 {
    let lap = laplacian(psi);
    -inner(&psi.values, &lap).re * psi.spec.cell_volume()
}

/// Periodic grid with `n` points on `[0, length)` per axis.
pub fn periodic_spec(names: &[&str], length: f64, n: usize) -> Result<GridSpec, FieldError> {
    let mut spec = GridSpec::uniform(names, (0.0, length), n)?;
    for a in 0..names.len() {
        spec = spec.with_periodic(a, true);
    }
    Ok(spec)
}
