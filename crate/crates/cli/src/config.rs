use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unfold_core::dirac::Normalization;
use unfold_core::scalar::parse_rational;
use unfold_core::{LightconeConvention, Orientation, Rational, ReductionKind};

/// Usage or configuration problem; maps to exit code 1.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "unfold", version, about = "Exact and numerical checks of dimensional reductions of the 5-D wave equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact identity certificates for the scalar and Dirac reductions.
    Certify(CertifyArgs),
    /// Refinement study of grid residuals for the reduced, full and first-order systems.
    Residual(ResidualArgs),
    /// Deterministic samples of a constrained mass shell (CSV).
    Shell(ShellArgs),
    /// Time evolution of the reduced Klein-Gordon or Schrödinger equation (JSON lines).
    Evolve(EvolveArgs),
    /// Discrete action gradient at an on-shell section versus a random one.
    Action(ActionArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// Output directory [default: unfold-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Re-run from a `config.json` written by an earlier run; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionChoice {
    Prose,
    Eq6Exact,
    All,
}

impl ConventionChoice {
    pub fn expand(self) -> Vec<LightconeConvention> {
        match self {
            ConventionChoice::Prose => vec![LightconeConvention::Prose],
            ConventionChoice::Eq6Exact => vec![LightconeConvention::Eq6Exact],
            ConventionChoice::All => LightconeConvention::ALL.to_vec(),
        }
    }

    fn single(self, flag: &str) -> anyhow::Result<LightconeConvention> {
        match self.expand().as_slice() {
            [one] => Ok(*one),
            _ => Err(bad(format!("--{flag} all is only accepted by `certify`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationChoice {
    Paper,
    Oscillatory,
    All,
}

impl OrientationChoice {
    pub fn expand(self) -> Vec<Orientation> {
        match self {
            OrientationChoice::Paper => vec![Orientation::Paper],
            OrientationChoice::Oscillatory => vec![Orientation::Oscillatory],
            OrientationChoice::All => Orientation::ALL.to_vec(),
        }
    }

    fn single(self) -> anyhow::Result<Orientation> {
        match self.expand().as_slice() {
            [one] => Ok(*one),
            _ => Err(bad("--orientation all is only accepted by `certify`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationChoice {
    Standard,
    Paper,
    All,
}

impl NormalizationChoice {
    pub fn expand(self) -> Vec<Normalization> {
        match self {
            NormalizationChoice::Standard => vec![Normalization::Standard],
            NormalizationChoice::Paper => vec![Normalization::Paper],
            NormalizationChoice::All => vec![Normalization::Standard, Normalization::Paper],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertifyAnsatz {
    Kg,
    Se,
    Dirac,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarAnsatz {
    Kg,
    Se,
}

impl ScalarAnsatz {
    pub fn kind(self) -> ReductionKind {
        match self {
            ScalarAnsatz::Kg => ReductionKind::KleinGordon,
            ScalarAnsatz::Se => ReductionKind::Schroedinger,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartChoice {
    Cartesian,
    Lightcone,
}

fn parse_mass(s: &str) -> anyhow::Result<Rational> {
    let m = parse_rational(s).map_err(|e| bad(format!("--mass: {}", e.0)))?;
    if m <= Rational::from_integer(0.into()) {
        return Err(bad(format!("--mass must be positive, got {s}")));
    }
    Ok(m)
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// Which reductions to certify [default: all]
    #[arg(long, value_enum)]
    pub ansatz: Option<CertifyAnsatz>,
    /// Ansatz orientation [default: paper]
    #[arg(long, value_enum)]
    pub orientation: Option<OrientationChoice>,
    /// Light-cone metric convention for the Schrödinger reduction [default: prose]
    #[arg(long, value_enum)]
    pub convention: Option<ConventionChoice>,
    /// Gamma-matrix normalization for the Dirac reduction [default: standard]
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationChoice>,
    /// Mass, an integer or fraction such as 3/2 [default: 1]
    #[arg(long)]
    pub mass: Option<String>,
    /// Axis the profile depends on [default: x4 (kg) or s (se)]
    #[arg(long)]
    pub direction: Option<String>,
    /// Taylor-jet order of the off-slice Dirac factorization check [default: 3]
    #[arg(long)]
    pub jet_order: Option<u32>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub ansatz: CertifyAnsatz,
    pub orientation: OrientationChoice,
    pub convention: ConventionChoice,
    pub normalization: NormalizationChoice,
    pub mass: String,
    pub direction: Option<String>,
    pub jet_order: u32,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            ansatz: CertifyAnsatz::All,
            orientation: OrientationChoice::Paper,
            convention: ConventionChoice::Prose,
            normalization: NormalizationChoice::Standard,
            mass: "1".into(),
            direction: None,
            jet_order: 3,
        }
    }
}

impl CertifyConfig {
    fn merge(mut self, a: &CertifyArgs) -> Self {
        set(&mut self.ansatz, a.ansatz);
        set(&mut self.orientation, a.orientation);
        set(&mut self.convention, a.convention);
        set(&mut self.normalization, a.normalization);
        set(&mut self.mass, a.mass.clone());
        if a.direction.is_some() {
            self.direction = a.direction.clone();
        }
        set(&mut self.jet_order, a.jet_order);
        self
    }

    pub fn mass(&self) -> anyhow::Result<Rational> {
        parse_mass(&self.mass)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.mass()?;
        if self.jet_order == 0 {
            return Err(bad("--jet-order must be at least 1"));
        }
        if let Some(dir) = &self.direction {
            let kinds: Vec<ReductionKind> = match self.ansatz {
                CertifyAnsatz::Kg => vec![ReductionKind::KleinGordon],
                CertifyAnsatz::Se => vec![ReductionKind::Schroedinger],
                CertifyAnsatz::Dirac => return Err(bad("--direction does not apply to the Dirac reduction")),
                CertifyAnsatz::All => vec![ReductionKind::KleinGordon, ReductionKind::Schroedinger],
            };
            for kind in kinds {
                axis_index(kind, dir)?;
            }
        }
        Ok(())
    }
}

/// Index of `name` among the axes of the chart `kind` reduces in.
pub fn axis_index(kind: ReductionKind, name: &str) -> anyhow::Result<usize> {
    let names = kind.chart().axis_names();
    names
        .iter()
        .position(|a| *a == name)
        .ok_or_else(|| bad(format!("unknown axis `{name}` for the {kind} chart (expected one of {})", names.join(", "))))
}

#[derive(Args, Debug)]
pub struct ResidualArgs {
    /// Reduction to study [default: kg]
    #[arg(long, value_enum)]
    pub ansatz: Option<ScalarAnsatz>,
    /// Ansatz orientation [default: paper]
    #[arg(long, value_enum)]
    pub orientation: Option<OrientationChoice>,
    /// Light-cone metric convention [default: prose]
    #[arg(long, value_enum)]
    pub convention: Option<ConventionChoice>,
    /// Mass [default: 1]
    #[arg(long)]
    pub mass: Option<String>,
    /// Grid sizes; a single size is refined by `--levels` [default: 5]
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Refinement levels generated from a single grid size: n, 2n-1, 3n-2, ... [default: 3]
    #[arg(long)]
    pub levels: Option<usize>,
    /// Perturb the plane-wave frequencies off the shell (the study should then fail)
    #[arg(long)]
    pub off_shell: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualConfig {
    pub ansatz: ScalarAnsatz,
    pub orientation: OrientationChoice,
    pub convention: ConventionChoice,
    pub mass: String,
    pub grid: Vec<usize>,
    pub levels: usize,
    pub off_shell: bool,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        ResidualConfig {
            ansatz: ScalarAnsatz::Kg,
            orientation: OrientationChoice::Paper,
            convention: ConventionChoice::Prose,
            mass: "1".into(),
            grid: vec![5],
            levels: 3,
            off_shell: false,
        }
    }
}

impl ResidualConfig {
    fn merge(mut self, a: &ResidualArgs) -> Self {
        set(&mut self.ansatz, a.ansatz);
        set(&mut self.orientation, a.orientation);
        set(&mut self.convention, a.convention);
        set(&mut self.mass, a.mass.clone());
        set(&mut self.grid, a.grid.clone());
        set(&mut self.levels, a.levels);
        self.off_shell |= a.off_shell;
        self
    }

    pub fn mass(&self) -> anyhow::Result<Rational> {
        parse_mass(&self.mass)
    }

    pub fn orientation(&self) -> anyhow::Result<Orientation> {
        self.orientation.single()
    }

    pub fn convention(&self) -> anyhow::Result<LightconeConvention> {
        self.convention.single("convention")
    }

    /// The grid sizes of the study, coarse to fine.
    pub fn sizes(&self) -> anyhow::Result<Vec<usize>> {
        let sizes = match self.grid.as_slice() {
            [] => return Err(bad("--grid needs at least one size")),
            [n] => {
                if self.levels == 0 {
                    return Err(bad("--levels must be at least 1"));
                }
                (0..self.levels).map(|j| (n.saturating_sub(1)) * (j + 1) + 1).collect()
            }
            many => many.to_vec(),
        };
        if let Some(n) = sizes.iter().find(|&&n| n < 4) {
            return Err(bad(format!("grid size {n} is too small (need at least 4 points per axis)")));
        }
        if sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("grid sizes must increase"));
        }
        Ok(sizes)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.mass()?;
        self.orientation()?;
        self.convention()?;
        self.sizes()?;
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct ShellArgs {
    /// Shell to sample: kg (space-like p_x4 = m) or se (light-like p_s = m) [default: kg]
    #[arg(long, value_enum)]
    pub ansatz: Option<ScalarAnsatz>,
    /// Light-cone metric convention [default: prose]
    #[arg(long, value_enum)]
    pub convention: Option<ConventionChoice>,
    /// Mass [default: 1]
    #[arg(long)]
    pub mass: Option<String>,
    /// Number of samples [default: 100]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sampler seed [default: 7]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellConfig {
    pub ansatz: ScalarAnsatz,
    pub convention: ConventionChoice,
    pub mass: String,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ShellConfig {
    fn default() -> Self {
        ShellConfig { ansatz: ScalarAnsatz::Kg, convention: ConventionChoice::Prose, mass: "1".into(), samples: 100, seed: 7 }
    }
}

impl ShellConfig {
    fn merge(mut self, a: &ShellArgs) -> Self {
        set(&mut self.ansatz, a.ansatz);
        set(&mut self.convention, a.convention);
        set(&mut self.mass, a.mass.clone());
        set(&mut self.samples, a.samples);
        set(&mut self.seed, a.seed);
        self
    }

    pub fn mass(&self) -> anyhow::Result<Rational> {
        parse_mass(&self.mass)
    }

    pub fn convention(&self) -> anyhow::Result<LightconeConvention> {
        self.convention.single("convention")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.mass()?;
        self.convention()?;
        if self.samples == 0 {
            return Err(bad("--samples must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    /// Equation to evolve [default: se]
    #[arg(long, value_enum)]
    pub ansatz: Option<ScalarAnsatz>,
    /// Ansatz orientation; for kg, paper selects the printed (growing-mode) sign [default: oscillatory]
    #[arg(long, value_enum)]
    pub orientation: Option<OrientationChoice>,
    /// Light-cone metric convention fixing the Schrödinger coefficient [default: prose]
    #[arg(long, value_enum)]
    pub convention: Option<ConventionChoice>,
    /// Mass [default: 1]
    #[arg(long)]
    pub mass: Option<String>,
    /// Points per periodic axis on [0, 2π) [default: 32]
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of spatial axes, 1 to 3 [default: 2]
    #[arg(long)]
    pub dims: Option<usize>,
    /// Time steps [default: 100]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Time step as a fraction of the stability bound [default: 0.5]
    #[arg(long)]
    pub cfl: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub ansatz: ScalarAnsatz,
    pub orientation: OrientationChoice,
    pub convention: ConventionChoice,
    pub mass: String,
    pub grid: usize,
    pub dims: usize,
    pub steps: usize,
    pub cfl: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            ansatz: ScalarAnsatz::Se,
            orientation: OrientationChoice::Oscillatory,
            convention: ConventionChoice::Prose,
            mass: "1".into(),
            grid: 32,
            dims: 2,
            steps: 100,
            cfl: 0.5,
        }
    }
}

impl EvolveConfig {
    fn merge(mut self, a: &EvolveArgs) -> Self {
        set(&mut self.ansatz, a.ansatz);
        set(&mut self.orientation, a.orientation);
        set(&mut self.convention, a.convention);
        set(&mut self.mass, a.mass.clone());
        set(&mut self.grid, a.grid);
        set(&mut self.dims, a.dims);
        set(&mut self.steps, a.steps);
        set(&mut self.cfl, a.cfl);
        self
    }

    pub fn mass(&self) -> anyhow::Result<Rational> {
        parse_mass(&self.mass)
    }

    pub fn orientation(&self) -> anyhow::Result<Orientation> {
        self.orientation.single()
    }

    pub fn convention(&self) -> anyhow::Result<LightconeConvention> {
        self.convention.single("convention")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.mass()?;
        self.orientation()?;
        self.convention()?;
        if !(1..=3).contains(&self.dims) {
            return Err(bad("--dims must be 1, 2 or 3"));
        }
        if self.grid < 4 {
            return Err(bad("--grid must be at least 4"));
        }
        if self.steps == 0 {
            return Err(bad("--steps must be at least 1"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(bad("--cfl must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct ActionArgs {
    /// Chart of the 5-D section [default: cartesian]
    #[arg(long, value_enum)]
    pub chart: Option<ChartChoice>,
    /// Light-cone metric convention when --chart lightcone [default: prose]
    #[arg(long, value_enum)]
    pub convention: Option<ConventionChoice>,
    /// Points per axis on [0, 1] [default: 9]
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of seeded variation probes [default: 8]
    #[arg(long)]
    pub probes: Option<usize>,
    /// Seed for the probes and the random comparison section [default: 5]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fourier modes in the random comparison section [default: 3]
    #[arg(long)]
    pub modes: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    pub chart: ChartChoice,
    pub convention: ConventionChoice,
    pub grid: usize,
    pub probes: usize,
    pub seed: u64,
    pub modes: usize,
}

impl Default for ActionConfig {
    fn default() -> Self {
        ActionConfig { chart: ChartChoice::Cartesian, convention: ConventionChoice::Prose, grid: 9, probes: 8, seed: 5, modes: 3 }
    }
}

impl ActionConfig {
    fn merge(mut self, a: &ActionArgs) -> Self {
        set(&mut self.chart, a.chart);
        set(&mut self.convention, a.convention);
        set(&mut self.grid, a.grid);
        set(&mut self.probes, a.probes);
        set(&mut self.seed, a.seed);
        set(&mut self.modes, a.modes);
        self
    }

    pub fn convention(&self) -> anyhow::Result<LightconeConvention> {
        self.convention.single("convention")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.convention()?;
        if self.grid < 4 {
            return Err(bad("--grid must be at least 4"));
        }
        if self.probes == 0 || self.modes == 0 {
            return Err(bad("--probes and --modes must be at least 1"));
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// The fully resolved parameters of one run; written to `config.json` and accepted by `--config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Certify(CertifyConfig),
    Residual(ResidualConfig),
    Shell(ShellConfig),
    Evolve(EvolveConfig),
    Action(ActionConfig),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Certify(_) => "certify",
            RunConfig::Residual(_) => "residual",
            RunConfig::Shell(_) => "shell",
            RunConfig::Evolve(_) => "evolve",
            RunConfig::Action(_) => "action",
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        match self {
            RunConfig::Certify(c) => c.validate(),
            RunConfig::Residual(c) => c.validate(),
            RunConfig::Shell(c) => c.validate(),
            RunConfig::Evolve(c) => c.validate(),
            RunConfig::Action(c) => c.validate(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("invalid config {}: {e}", path.display())))
    }
}

/// Resolves defaults, `--config` and explicit flags into a validated config and output directory.
pub fn resolve(command: &Command) -> anyhow::Result<(RunConfig, PathBuf)> {
    let common = match command {
        Command::Certify(a) => &a.common,
        Command::Residual(a) => &a.common,
        Command::Shell(a) => &a.common,
        Command::Evolve(a) => &a.common,
        Command::Action(a) => &a.common,
    };
    let loaded = common.config.as_deref().map(RunConfig::load).transpose()?;
    let mismatch = |found: &RunConfig, want: &str| bad(format!("config is for `{}`, not `{want}`", found.name()));
    let config = match (command, loaded) {
        (Command::Certify(a), None) => RunConfig::Certify(CertifyConfig::default().merge(a)),
        (Command::Certify(a), Some(RunConfig::Certify(c))) => RunConfig::Certify(c.merge(a)),
        (Command::Residual(a), None) => RunConfig::Residual(ResidualConfig::default().merge(a)),
        (Command::Residual(a), Some(RunConfig::Residual(c))) => RunConfig::Residual(c.merge(a)),
        (Command::Shell(a), None) => RunConfig::Shell(ShellConfig::default().merge(a)),
        (Command::Shell(a), Some(RunConfig::Shell(c))) => RunConfig::Shell(c.merge(a)),
        (Command::Evolve(a), None) => RunConfig::Evolve(EvolveConfig::default().merge(a)),
        (Command::Evolve(a), Some(RunConfig::Evolve(c))) => RunConfig::Evolve(c.merge(a)),
        (Command::Action(a), None) => RunConfig::Action(ActionConfig::default().merge(a)),
        (Command::Action(a), Some(RunConfig::Action(c))) => RunConfig::Action(c.merge(a)),
        (cmd, Some(other)) => {
            let want = match cmd {
                Command::Certify(_) => "certify",
                Command::Residual(_) => "residual",
                Command::Shell(_) => "shell",
                Command::Evolve(_) => "evolve",
                Command::Action(_) => "action",
            };
            return Err(mismatch(&other, want));
        }
    };
    config.validate()?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("unfold-out"));
    Ok((config, out))
}
