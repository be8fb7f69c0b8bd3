use serde::Serialize;
use unfold_core::symbol::{describe_constraints, reduce_shell, sample_shell, shell_violation, write_samples_csv, ShellSpec};
use unfold_core::ReductionKind;

use super::{pretty, Outcome};
use crate::config::ShellConfig;
use crate::output::OutDir;

pub const SHELL_TOLERANCE: f64 = 1e-12;

#[derive(Serialize)]
struct ShellReport {
    chart: String,
    constraints: String,
    reduced_relation: String,
    samples: usize,
    seed: u64,
    max_sigma: f64,
    max_constraint: f64,
    max_reduced_relation: f64,
    tolerance: f64,
    pass: bool,
}

pub fn run(cfg: &ShellConfig, out: &mut OutDir) -> anyhow::Result<Outcome> {
    let m = cfg.mass()?;
    let spec = match cfg.ansatz.kind() {
        ReductionKind::KleinGordon => ShellSpec::spacelike(&m),
        ReductionKind::Schroedinger => ShellSpec::lightlike(&m, cfg.convention()?),
    };
    let samples = sample_shell(&spec, cfg.samples, cfg.seed)?;
    let reduced = reduce_shell(&spec)?;
    let (max_sigma, max_constraint) = shell_violation(&spec, &samples);
    let mut max_reduced = 0.0f64;
    for p in &samples {
        let q: Vec<f64> = reduced.retained_axes.iter().map(|&a| p[a]).collect();
        max_reduced = max_reduced.max(reduced.eval(&q).abs());
    }
    let tolerance = SHELL_TOLERANCE;
    let pass = max_sigma <= tolerance && max_constraint <= tolerance && max_reduced <= tolerance;

    let mut csv = Vec::new();
    write_samples_csv(&mut csv, &spec, &samples)?;
    out.write("shell.csv", &csv)?;
    let report = ShellReport {
        chart: spec.chart.name().to_string(),
        constraints: describe_constraints(&spec),
        reduced_relation: reduced.to_string(),
        samples: samples.len(),
        seed: cfg.seed,
        max_sigma,
        max_constraint,
        max_reduced_relation: max_reduced,
        tolerance,
        pass,
    };
    out.write("shell-report.json", pretty(&report).as_bytes())?;
    println!("{} with {}: {}", report.chart, report.constraints, report.reduced_relation);
    println!("{} samples, max |sigma| {max_sigma:e}, max reduced relation {max_reduced:e}", samples.len());

    let mut outcome = Outcome::default();
    outcome.check(pass, || format!("shell violation exceeds {tolerance:e}"));
    Ok(outcome)
}
