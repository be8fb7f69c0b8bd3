use anyhow::{bail, Context};
use num_complex::Complex64;
use serde_json::json;
use unfold_core::dedonder::{ddw_residuals, default_null_momentum, CovariantField, DdwResiduals, FirstOrderSystem, ReducedCovariantField};
use unfold_core::fields::{
    apply_ansatz, apply_operator_grid, full_spec, observed_orders, residual, synthesize, GridField, GridSpec, PlaneWaveSum,
    StencilOperator,
};
use unfold_core::geometry::{laplace_beltrami_coeffs, lightcone5, minkowski5};
use unfold_core::oracle::reduced_operator;
use unfold_core::{Metric, ReductionAnsatz, ReductionKind};

use super::{json_line, Outcome};
use crate::config::ResidualConfig;
use crate::output::OutDir;

type C64 = Complex64;

pub const ORDER_RANGE: (f64, f64) = (1.9, 2.1);
const OFF_SHELL_SHIFT: f64 = 0.25;

/// A real frequency `p0` with `symbol(p0, k) = 0`, scaling `k` up until the root is real.
fn reduced_plane_wave(op: &StencilOperator, base: [f64; 3]) -> anyhow::Result<Vec<f64>> {
    for step in 0..40 {
        let lambda = 1.0 + 0.25 * step as f64;
        let k: Vec<f64> = base.iter().map(|c| c * lambda).collect();
        let at = |p0: f64| {
            let mut p = vec![p0];
            p.extend(&k);
            op.symbol(&p)
        };
        let (s0, s1, sm) = (at(0.0), at(1.0), at(-1.0));
        let (c, b, a) = (s0, 0.5 * (s1 - sm), 0.5 * (s1 + sm) - s0);
        let scale = 1.0 + s0.norm() + s1.norm() + sm.norm();
        if [a, b, c].iter().any(|z| z.im.abs() > 1e-12 * scale) {
            bail!("the reduced symbol is not real on real momenta");
        }
        let (a, b, c) = (a.re, b.re, c.re);
        let root = if a.abs() <= 1e-14 * scale {
            (b.abs() > 1e-14 * scale).then(|| -c / b)
        } else {
            let disc = b * b - 4.0 * a * c;
            (disc >= 0.0).then(|| {
                let (r1, r2) = ((-b + disc.sqrt()) / (2.0 * a), (-b - disc.sqrt()) / (2.0 * a));
                if r1.abs() <= r2.abs() { r1 } else { r2 }
            })
        };
        if let Some(p0) = root {
            let mut p = vec![p0];
            p.extend(k);
            return Ok(p);
        }
    }
    bail!("no real plane wave found on the reduced shell")
}

struct Study {
    name: &'static str,
    errors: Vec<f64>,
    spacings: Vec<f64>,
}

fn level_record(out: &mut String, study: &str, level: usize, n: usize, h: f64, max: f64, common: f64) {
    out.push_str(&json_line(&json!({
        "record": "level", "study": study, "level": level, "n": n, "h": h, "max": max, "common_max": common,
    })));
}

fn ddw_common(r: &DdwResiduals, coarse: &GridSpec) -> f64 {
    r.equations
        .iter()
        .map(|(_, rep)| rep.field.max_on_interior_of(coarse).unwrap_or(rep.max))
        .fold(0.0, f64::max)
}

pub fn run(cfg: &ResidualConfig, out: &mut OutDir) -> anyhow::Result<Outcome> {
    let m = cfg.mass()?;
    let kind = cfg.ansatz.kind();
    let orientation = cfg.orientation()?;
    let convention = cfg.convention()?;
    let sizes = cfg.sizes()?;
    let metric: Metric = match kind {
        ReductionKind::KleinGordon => minkowski5(),
        ReductionKind::Schroedinger => lightcone5(convention),
    };
    let ansatz = ReductionAnsatz::standard(kind, orientation, &m)?;
    let reduced = reduced_operator(&metric, &ansatz).context("extracting the reduced operator")?;
    let stencil = StencilOperator::from_exact(&reduced);
    let shift = if cfg.off_shell { OFF_SHELL_SHIFT } else { 0.0 };

    let mut p = reduced_plane_wave(&stencil, [0.6, 0.4, 0.2])?;
    p[0] += shift;
    let psi = PlaneWaveSum::single(p.clone(), C64::new(1.0, 0.0));
    let mut null_p = default_null_momentum(&metric);
    null_p[0] += shift;
    let chi_wave = PlaneWaveSum::single(null_p.clone(), C64::new(0.8, 0.3));
    let system = FirstOrderSystem::derived(&metric, &ansatz)?;
    let coeffs = laplace_beltrami_coeffs(&metric)?;

    let rnames = ansatz.reduced_axis_names();
    let rspec = |n: usize| GridSpec::uniform(&rnames, (0.0, 1.0), n);
    let fspec = |n: usize| -> anyhow::Result<GridSpec> { Ok(full_spec(&rspec(n)?, &ansatz, (0.0, 1.0), n)) };
    let coarse_r = rspec(sizes[0])?;
    let coarse_f = fspec(sizes[0])?;

    let mut studies = vec![
        Study { name: "reduced-operator", errors: vec![], spacings: vec![] },
        Study { name: "full-operator", errors: vec![], spacings: vec![] },
        Study { name: "reduced-first-order", errors: vec![], spacings: vec![] },
        Study { name: "full-first-order", errors: vec![], spacings: vec![] },
    ];
    let mut text = String::new();
    text.push_str(&json_line(&json!({
        "record": "setup",
        "metric_convention": metric.convention_label(),
        "ansatz": ansatz.describe(),
        "reduced_operator": reduced.format_with(&rnames),
        "first_order_system": system.name,
        "reduced_momentum": p,
        "null_momentum": null_p,
        "off_shell": cfg.off_shell,
        "grid": sizes,
    })));

    for (level, &n) in sizes.iter().enumerate() {
        let rs = rspec(n)?;
        let h = rs.spacing(0);
        let u = synthesize(&rs, &psi)?;

        let r = apply_operator_grid(&u, &stencil)?;
        let common = r.field.max_on_interior_of(&coarse_r).unwrap_or(r.max);
        level_record(&mut text, studies[0].name, level, n, h, r.max, common);
        studies[0].errors.push(common);

        let fs = fspec(n)?;
        let phi: GridField = apply_ansatz(&u, &ansatz, &fs)?;
        let r = residual(&phi, &coeffs, C64::new(0.0, 0.0))?;
        let common = r.field.max_on_interior_of(&coarse_f).unwrap_or(r.max);
        level_record(&mut text, studies[1].name, level, n, h, r.max, common);
        studies[1].errors.push(common);

        let section = ReducedCovariantField::from_waves(&system, &ansatz, &rs, &psi)?;
        let r = system.residuals(&section)?;
        let common = ddw_common(&r, &coarse_r);
        level_record(&mut text, studies[2].name, level, n, h, r.max(), common);
        studies[2].errors.push(common);

        let full = GridSpec::uniform(metric.chart().axis_names(), (0.0, 1.0), n)?;
        let r = ddw_residuals(&CovariantField::from_waves(&metric, &full, &chi_wave)?, &metric)?;
        let coarse = GridSpec::uniform(metric.chart().axis_names(), (0.0, 1.0), sizes[0])?;
        let common = ddw_common(&r, &coarse);
        level_record(&mut text, studies[3].name, level, n, h, r.max(), common);
        studies[3].errors.push(common);

        for s in &mut studies {
            s.spacings.push(h);
        }
    }

    let mut outcome = Outcome::default();
    if sizes.len() < 2 {
        text.push_str(&json_line(&json!({
            "record": "warning",
            "message": "a single refinement level was requested; convergence orders are omitted",
        })));
        println!("warning: single refinement level, orders omitted");
    } else {
        for s in &studies {
            let orders = observed_orders(&s.spacings, &s.errors);
            let pass = orders.iter().all(|o| (ORDER_RANGE.0..=ORDER_RANGE.1).contains(o));
            text.push_str(&json_line(&json!({ "record": "orders", "study": s.name, "orders": orders, "pass": pass })));
            let shown: Vec<String> = orders.iter().map(|o| format!("{o:.4}")).collect();
            println!("{:20}  {}  orders [{}]", s.name, if pass { "pass" } else { "FAIL" }, shown.join(", "));
            outcome.check(pass, || format!("{}: orders {orders:?} outside [{}, {}]", s.name, ORDER_RANGE.0, ORDER_RANGE.1));
        }
    }
    text.push_str(&json_line(&json!({ "record": "summary", "pass": outcome.passed() })));
    out.write("residual.jsonl", text.as_bytes())?;
    Ok(outcome)
}
