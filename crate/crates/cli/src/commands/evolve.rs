use std::f64::consts::TAU;

use anyhow::{anyhow, Context};
use num_complex::Complex64;
use serde::Serialize;
use unfold_core::fields::GridField;
use unfold_core::geometry::lightcone5;
use unfold_core::oracle::{certify_reduction, se_candidates};
use unfold_core::scalar::rat_to_f64;
use unfold_core::solver::{evolve, periodic_spec, EvolutionProblem, Initial, KgSign, StepRecord, Trajectory};
use unfold_core::{Orientation, ReductionAnsatz, ReductionKind};

use super::{pretty, Outcome};
use crate::config::EvolveConfig;
use crate::output::OutDir;

type C64 = Complex64;

pub const SE_NORM_DRIFT: f64 = 1e-10;
pub const KG_ENERGY_DRIFT: f64 = 1e-6;
const WINDOW: usize = 100;

#[derive(Serialize)]
struct EvolveReport {
    kind: &'static str,
    regime: Option<&'static str>,
    se_coefficient: Option<f64>,
    mass: f64,
    grid: Vec<usize>,
    dt: f64,
    steps: usize,
    max_norm_drift_per_100: f64,
    max_energy_drift_per_100: f64,
    check: String,
    pass: bool,
}

/// Largest relative drift of `q` inside any window of 100 consecutive steps.
fn windowed_drift(t: &Trajectory, q: impl Fn(&StepRecord) -> f64) -> f64 {
    let n = t.records.len();
    let mut worst = 0.0f64;
    for start in (0..n).step_by(WINDOW) {
        let end = (start + WINDOW).min(n - 1);
        let q0 = q(&t.records[start]);
        let denom = if q0 == 0.0 { 1.0 } else { q0.abs() };
        for r in &t.records[start..=end] {
            worst = worst.max((q(r) - q0).abs() / denom);
        }
    }
    worst
}

/// `c` in `c·i·m·∂ₜψ = −Δψ`, read from the certified light-like reduction.
fn se_coefficient(cfg: &EvolveConfig, orientation: Orientation) -> anyhow::Result<f64> {
    let m = cfg.mass()?;
    let ansatz = ReductionAnsatz::standard(ReductionKind::Schroedinger, orientation, &m)?;
    let cert = certify_reduction(&lightcone5(cfg.convention()?), &ansatz, &se_candidates(&m))?;
    let winner = cert.winner.ok_or_else(|| anyhow!("the light-like reduction has no certified Schrödinger form"))?;
    let c = winner.split('*').next().unwrap_or_default();
    c.parse::<f64>().with_context(|| format!("reading the coefficient of `{winner}`"))
}

pub fn run(cfg: &EvolveConfig, out: &mut OutDir) -> anyhow::Result<Outcome> {
    let mass = rat_to_f64(&cfg.mass()?);
    let orientation = cfg.orientation()?;
    let names = ["x1", "x2", "x3"];
    let spec = periodic_spec(&names[..cfg.dims], TAU, cfg.grid)?;
    let (initial, se_coefficient, kg_sign) = match cfg.ansatz.kind() {
        ReductionKind::KleinGordon => {
            let u0 = GridField::from_fn(&spec, "u0", |x| {
                C64::new(x[0].sin() * x.get(1).map_or(1.0, |y| (2.0 * y).cos()) + 0.3, 0.0)
            });
            let v0 = GridField::from_fn(&spec, "v0", |x| C64::new(0.2 * x[x.len() - 1].sin(), 0.0));
            let sign = match orientation {
                Orientation::Paper => KgSign::Printed,
                Orientation::Oscillatory => KgSign::Standard,
            };
            (Initial::KleinGordon { u0, v0 }, None, sign)
        }
        ReductionKind::Schroedinger => {
            let psi0 = GridField::from_fn(&spec, "psi0", |x| {
                let r: f64 = x.iter().map(|v| (v - 0.5 * TAU).powi(2)).sum();
                C64::from_polar((-r).exp(), x[0] + 2.0 * x.get(1).copied().unwrap_or(0.0))
            });
            (Initial::Schroedinger { psi0 }, Some(se_coefficient(cfg, orientation)?), KgSign::Standard)
        }
    };
    let mut problem = EvolutionProblem {
        mass,
        dt: 1.0,
        steps: cfg.steps,
        initial,
        kg_sign,
        se_coefficient: se_coefficient.unwrap_or(2.0),
    };
    problem.dt = cfg.cfl * problem.cfl_bound();
    let t = evolve(&problem)?;

    let norm_drift = windowed_drift(&t, |r| r.l2_norm);
    let energy_drift = windowed_drift(&t, |r| r.energy);
    let (check, pass) = match (cfg.ansatz.kind(), kg_sign) {
        (ReductionKind::Schroedinger, _) => (format!("norm drift per 100 steps <= {SE_NORM_DRIFT:e}"), norm_drift <= SE_NORM_DRIFT),
        (ReductionKind::KleinGordon, KgSign::Standard) => {
            (format!("energy drift per 100 steps <= {KG_ENERGY_DRIFT:e}"), energy_drift <= KG_ENERGY_DRIFT)
        }
        (ReductionKind::KleinGordon, KgSign::Printed) => ("none (growing-mode regime)".to_string(), true),
    };
    out.write("evolve.jsonl", t.to_json_lines().as_bytes())?;
    let report = EvolveReport {
        kind: t.kind,
        regime: t.regime,
        se_coefficient,
        mass,
        grid: spec.points.clone(),
        dt: problem.dt,
        steps: cfg.steps,
        max_norm_drift_per_100: norm_drift,
        max_energy_drift_per_100: energy_drift,
        check: check.clone(),
        pass,
    };
    out.write("evolve-report.json", pretty(&report).as_bytes())?;
    println!("{} on {:?}, dt {:e}, {} steps", t.kind, spec.points, problem.dt, cfg.steps);
    println!("norm drift {norm_drift:e}, energy drift {energy_drift:e}; check: {check}");

    let mut outcome = Outcome::default();
    outcome.check(pass, || format!("drift check failed: {check}"));
    Ok(outcome)
}
