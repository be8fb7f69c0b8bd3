use num_complex::Complex64;
use serde::Serialize;
use unfold_core::dedonder::{
    ddw_residuals, default_null_momentum, schwinger_weiss_gradient, CovariantField, DedonderReport,
};
use unfold_core::fields::{GridSpec, PlaneWaveSum};
use unfold_core::geometry::{lightcone5, minkowski5};

use super::{pretty, Outcome};
use crate::config::{ActionConfig, ChartChoice};
use crate::output::OutDir;

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MIN_CONTRAST: f64 = 1e3;

#[derive(Serialize)]
struct ActionReport {
    on_shell: DedonderReport,
    on_shell_per_probe: Vec<f64>,
    random_gradient_max: f64,
    random_per_probe: Vec<f64>,
    epsilon: f64,
    probes: usize,
    seed: u64,
    pass: bool,
}

pub fn run(cfg: &ActionConfig, out: &mut OutDir) -> anyhow::Result<Outcome> {
    let metric = match cfg.chart {
        ChartChoice::Cartesian => minkowski5(),
        ChartChoice::Lightcone => lightcone5(cfg.convention()?),
    };
    let spec = GridSpec::uniform(metric.chart().axis_names(), (0.0, 1.0), cfg.grid)?;
    let wave = PlaneWaveSum::single(default_null_momentum(&metric), Complex64::new(0.8, 0.3));
    let on = CovariantField::from_waves(&metric, &spec, &wave)?;
    let g_on = schwinger_weiss_gradient(&on, &metric, cfg.probes, cfg.seed)?;
    let off = CovariantField::random_smooth(metric.chart(), &spec, cfg.modes, cfg.seed)?;
    let g_off = schwinger_weiss_gradient(&off, &metric, cfg.probes, cfg.seed)?;
    let contrast = if g_on.max > 0.0 { g_off.max / g_on.max } else { f64::MAX };

    let mut report = DedonderReport::new(&metric, &spec, ddw_residuals(&on, &metric)?.norms());
    report.gradient_max = Some(g_on.max);
    report.contrast_ratio = Some(contrast);
    let pass = g_on.max <= GRADIENT_TOLERANCE && contrast >= MIN_CONTRAST;
    let full = ActionReport {
        on_shell: report,
        on_shell_per_probe: g_on.per_probe,
        random_gradient_max: g_off.max,
        random_per_probe: g_off.per_probe,
        epsilon: g_on.epsilon,
        probes: cfg.probes,
        seed: cfg.seed,
        pass,
    };
    out.write("action-report.json", pretty(&full).as_bytes())?;
    println!("{} grid {:?}", metric.convention_label(), spec.points);
    println!("gradient on shell {:e}, random {:e}, contrast {contrast:e}", g_on.max, g_off.max);

    let mut outcome = Outcome::default();
    outcome.check(g_on.max <= GRADIENT_TOLERANCE, || format!("on-shell gradient {:e} exceeds {GRADIENT_TOLERANCE:e}", g_on.max));
    outcome.check(contrast >= MIN_CONTRAST, || format!("contrast ratio {contrast:e} below {MIN_CONTRAST:e}"));
    Ok(outcome)
}
