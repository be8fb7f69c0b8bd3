//! Reduction ansätze `φ = exp(rate · x^dir) · u(x_retained)`.

use std::fmt;

use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Chart;
use crate::scalar::{Gq, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("profile rate must be nonzero")]
    ZeroRate,
    #[error("mass must be positive")]
    NonPositiveMass,
    #[error("direction axis {0} is also listed as a retained axis")]
    DirectionRetained(usize),
    #[error("axis {axis} out of range for a {dim}-dimensional chart")]
    AxisOutOfRange { axis: usize, dim: usize },
}

/// Which profile sign is used along the reduction direction.
///
/// `Paper` is the profile as printed (`e^{−m x⁴}` for Klein-Gordon, `e^{−i m s}` for
/// Schrödinger); `Oscillatory` is `e^{+i m x⁴}` / `e^{+i m s}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Paper,
    Oscillatory,
}

impl Orientation {
    pub const ALL: [Orientation; 2] = [Orientation::Paper, Orientation::Oscillatory];

    pub fn name(self) -> &'static str {
        match self {
            Orientation::Paper => "paper",
            Orientation::Oscillatory => "oscillatory",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Orientation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Orientation::Paper),
            "oscillatory" => Ok(Orientation::Oscillatory),
            other => Err(format!("unknown orientation `{other}` (expected `paper` or `oscillatory`)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionKind {
    /// Space-like direction `x⁴` in the Cartesian chart.
    KleinGordon,
    /// Light-like direction `s` in the light-cone chart.
    Schroedinger,
}

impl ReductionKind {
    pub fn name(self) -> &'static str {
        match self {
            ReductionKind::KleinGordon => "kg",
            ReductionKind::Schroedinger => "se",
        }
    }

    pub fn chart(self) -> Chart {
        match self {
            ReductionKind::KleinGordon => Chart::Cartesian5d,
            ReductionKind::Schroedinger => Chart::Lightcone5d,
        }
    }
}

impl fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ReductionKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kg" | "klein-gordon" => Ok(ReductionKind::KleinGordon),
            "se" | "schroedinger" => Ok(ReductionKind::Schroedinger),
            other => Err(format!("unknown ansatz `{other}` (expected `kg` or `se`)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReductionAnsatz {
    pub chart: Chart,
    pub direction_axis: usize,
    /// Exponent coefficient: the profile is `exp(rate · x^direction)`.
    pub rate: Gq,
    pub reduced_axes: Vec<usize>,
}

impl ReductionAnsatz {
    pub fn new(chart: Chart, direction_axis: usize, rate: Gq, reduced_axes: Vec<usize>) -> Result<Self, AnsatzError> {
        let dim = chart.axis_names().len();
        if rate.is_zero() {
            return Err(AnsatzError::ZeroRate);
        }
        for &a in reduced_axes.iter().chain(std::iter::once(&direction_axis)) {
            if a >= dim {
                return Err(AnsatzError::AxisOutOfRange { axis: a, dim });
            }
        }
        if reduced_axes.contains(&direction_axis) {
            return Err(AnsatzError::DirectionRetained(direction_axis));
        }
        Ok(ReductionAnsatz { chart, direction_axis, rate, reduced_axes })
    }

    /// The standard ansatz for `kind` with mass `m`: rate `−m` / `+i m` (KG) or `−i m` / `+i m` (SE).
    pub fn standard(kind: ReductionKind, orientation: Orientation, mass: &Rational) -> Result<Self, AnsatzError> {
        if !mass.is_positive() {
            return Err(AnsatzError::NonPositiveMass);
        }
        let rate = match (kind, orientation) {
            (ReductionKind::KleinGordon, Orientation::Paper) => Gq::real(-mass.clone()),
            (ReductionKind::Schroedinger, Orientation::Paper) => Gq::imag(-mass.clone()),
            (_, Orientation::Oscillatory) => Gq::imag(mass.clone()),
        };
        Self::new(kind.chart(), 4, rate, vec![0, 1, 2, 3])
    }

    pub fn dim(&self) -> usize {
        self.chart.axis_names().len()
    }

    pub fn direction_name(&self) -> &'static str {
        self.chart.axis_names()[self.direction_axis]
    }

    pub fn reduced_axis_names(&self) -> Vec<&'static str> {
        self.reduced_axes.iter().map(|&a| self.chart.axis_names()[a]).collect()
    }

    pub fn profile(&self, coord: f64) -> Complex64 {
        (self.rate.to_c64() * coord).exp()
    }

    /// Rate vector in the full chart (zero except along the direction axis).
    pub fn rate_vector(&self) -> Vec<Gq> {
        let mut r = vec![Gq::zero(); self.dim()];
        r[self.direction_axis] = self.rate.clone();
        r
    }

    pub fn describe(&self) -> String {
        format!("exp({}*{}) * u({})", self.rate, self.direction_name(), self.reduced_axis_names().join(","))
    }
}

impl fmt::Display for ReductionAnsatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}
