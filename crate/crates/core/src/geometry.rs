//! Flat spacetimes, their metrics, and the linear charts relating them.
//!
//! Everything here is exact rational arithmetic. Axis order is fixed per chart:
//!
//! | chart                  | axes                                  |
//! |------------------------|---------------------------------------|
//! | `cartesian-5d`         | `x0 x1 x2 x3 x4`                      |
//! | `lightcone-5d`         | `t x1 x2 x3 s`                        |
//! | `doubled-8d-cartesian` | `y0 y1 y2 y3 yb0 yb1 yb2 yb3`         |
//! | `doubled-8d-lightcone` | `x0 x1 x2 x3 s xi1 xi2 xi3`           |
//! | `reduced-4d`           | `x0 x1 x2 x3` (or `t x1 x2 x3`)       |

use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::RatMatrix;
use crate::scalar::{int, rat, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("metric is singular (determinant 0)")]
    SingularMetric,
    #[error("metric components are not symmetric")]
    NotSymmetric,
    #[error("chart map is not invertible")]
    SingularChart,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("chart mismatch: map expects `{expected}`, metric is in `{found}`")]
    ChartMismatch { expected: Chart, found: Chart },
    #[error("invalid metric record: {0}")]
    Record(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chart {
    #[serde(rename = "cartesian-5d")]
    Cartesian5d,
    #[serde(rename = "lightcone-5d")]
    Lightcone5d,
    #[serde(rename = "doubled-8d-cartesian")]
    Doubled8dCartesian,
    #[serde(rename = "doubled-8d-lightcone")]
    Doubled8dLightcone,
    #[serde(rename = "reduced-4d")]
    Reduced4d,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::Cartesian5d => "cartesian-5d",
            Chart::Lightcone5d => "lightcone-5d",
            Chart::Doubled8dCartesian => "doubled-8d-cartesian",
            Chart::Doubled8dLightcone => "doubled-8d-lightcone",
            Chart::Reduced4d => "reduced-4d",
        }
    }

    pub fn axis_names(self) -> &'static [&'static str] {
        match self {
            Chart::Cartesian5d => &["x0", "x1", "x2", "x3", "x4"],
            Chart::Lightcone5d => &["t", "x1", "x2", "x3", "s"],
            Chart::Doubled8dCartesian => &["y0", "y1", "y2", "y3", "yb0", "yb1", "yb2", "yb3"],
            Chart::Doubled8dLightcone => &["x0", "x1", "x2", "x3", "s", "xi1", "xi2", "xi3"],
            Chart::Reduced4d => &["x0", "x1", "x2", "x3"],
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which light-cone normalization to use.
///
/// `Eq6Exact` is the exact pushforward of the Cartesian metric (`η_ts = 1/2`, hence `η^ts = 2`).
/// `Prose` is the normalization under which the principal symbol reads `2 p_t p_s - |p|²`
/// (`η_ts = η^ts = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LightconeConvention {
    Prose,
    Eq6Exact,
}

impl LightconeConvention {
    pub const ALL: [LightconeConvention; 2] = [LightconeConvention::Prose, LightconeConvention::Eq6Exact];

    pub fn name(self) -> &'static str {
        match self {
            LightconeConvention::Prose => "prose",
            LightconeConvention::Eq6Exact => "eq6-exact",
        }
    }

    /// The inverse-metric entry `η^{ts}` this convention produces.
    pub fn eta_upper_ts(self) -> Rational {
        match self {
            LightconeConvention::Prose => int(1),
            LightconeConvention::Eq6Exact => int(2),
        }
    }
}

impl fmt::Display for LightconeConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LightconeConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "prose" => Ok(LightconeConvention::Prose),
            "eq6-exact" => Ok(LightconeConvention::Eq6Exact),
            other => Err(format!("unknown convention `{other}` (expected `prose` or `eq6-exact`)")),
        }
    }
}

/// A constant, symmetric, non-degenerate bilinear form tagged with its chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metric {
    components: RatMatrix,
    chart: Chart,
}

impl Metric {
    pub fn new(components: RatMatrix, chart: Chart) -> Result<Self, GeometryError> {
        if !components.is_square() {
            return Err(GeometryError::DimensionMismatch {
                expected: components.rows(),
                found: components.cols(),
            });
        }
        if !components.is_symmetric() {
            return Err(GeometryError::NotSymmetric);
        }
        if components.determinant().is_zero() {
            return Err(GeometryError::SingularMetric);
        }
        Ok(Metric { components, chart })
    }

    pub fn dim(&self) -> usize {
        self.components.rows()
    }

    pub fn components(&self) -> &RatMatrix {
        &self.components
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn determinant(&self) -> Rational {
        self.components.determinant()
    }

    pub fn inverse(&self) -> RatMatrix {
        self.components.inverse().expect("metric non-degenerate by construction")
    }

    /// `(positive, negative)` counts, from an exact congruence diagonalization.
    pub fn signature(&self) -> (usize, usize) {
        let pivots = congruence_pivots(&self.components);
        let pos = pivots.iter().filter(|p| p.is_positive()).count();
        (pos, pivots.len() - pos)
    }

    /// The light-cone normalization this metric realizes, if it is one of the two known ones.
    pub fn lightcone_convention(&self) -> Option<LightconeConvention> {
        if self.chart != Chart::Lightcone5d {
            return None;
        }
        LightconeConvention::ALL.into_iter().find(|c| lightcone5(*c) == *self)
    }

    /// Chart name, suffixed with the light-cone normalization where one applies.
    pub fn convention_label(&self) -> String {
        match (self.chart, self.lightcone_convention()) {
            (Chart::Lightcone5d, Some(c)) => format!("{}/{}", self.chart, c),
            (Chart::Lightcone5d, None) => format!("{}/custom", self.chart),
            (chart, _) => chart.name().to_string(),
        }
    }

    pub fn to_record(&self) -> Result<MetricRecord, GeometryError> {
        let components = self
            .components
            .to_rows()
            .into_iter()
            .map(|row| row.iter().map(rational_pair).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MetricRecord { dim: self.dim(), chart: self.chart, components })
    }

    pub fn from_record(rec: &MetricRecord) -> Result<Self, GeometryError> {
        if rec.components.len() != rec.dim || rec.components.iter().any(|r| r.len() != rec.dim) {
            return Err(GeometryError::Record(format!("components must be {0}x{0}", rec.dim)));
        }
        let rows = rec
            .components
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&[n, d]| {
                        if d == 0 {
                            Err(GeometryError::Record("zero denominator".into()))
                        } else {
                            Ok(rat(n, d))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Metric::new(RatMatrix::from_rows(rows), rec.chart)
    }
}

fn rational_pair(r: &Rational) -> Result<[i64; 2], GeometryError> {
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) => Ok([n, d]),
        _ => Err(GeometryError::Record(format!("component {r} does not fit in i64"))),
    }
}

/// JSON form of a [`Metric`]: `{dim, chart, components: [[[num, den], ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub dim: usize,
    pub chart: Chart,
    pub components: Vec<Vec<[i64; 2]>>,
}

/// Diagonal pivots of a symmetric matrix under exact congruence (`Pᵀ A P`).
fn congruence_pivots(a: &RatMatrix) -> Vec<Rational> {
    let n = a.rows();
    let mut m = a.clone();
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        if m[(k, k)].is_zero() {
            if let Some(j) = (k + 1..n).find(|&j| !m[(j, j)].is_zero()) {
                for c in 0..n {
                    let tmp = m[(k, c)].clone();
                    m[(k, c)] = m[(j, c)].clone();
                    m[(j, c)] = tmp;
                }
                for r in 0..n {
                    let tmp = m[(r, k)].clone();
                    m[(r, k)] = m[(r, j)].clone();
                    m[(r, j)] = tmp;
                }
            } else if let Some(j) = (k + 1..n).find(|&j| !m[(k, j)].is_zero()) {
                // e_k -> e_k + e_j makes the pivot 2 m[k][j].
                for c in 0..n {
                    let v = &m[(k, c)] + &m[(j, c)];
                    m[(k, c)] = v;
                }
                for r in 0..n {
                    let v = &m[(r, k)] + &m[(r, j)];
                    m[(r, k)] = v;
                }
            } else {
                pivots.push(Rational::zero());
                continue;
            }
        }
        let p = m[(k, k)].clone();
        for r in k + 1..n {
            let f = &m[(r, k)] / &p;
            if f.is_zero() {
                continue;
            }
            for c in 0..n {
                let v = &m[(r, c)] - &(&f * &m[(k, c)]);
                m[(r, c)] = v;
            }
            for c in 0..n {
                let v = &m[(c, r)] - &(&f * &m[(c, k)]);
                m[(c, r)] = v;
            }
        }
        pivots.push(p);
    }
    pivots
}

/// A linear change of coordinates `x_new = forward · x_old`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartMap {
    name: String,
    source: Chart,
    target: Chart,
    forward: RatMatrix,
    inverse: RatMatrix,
}

impl ChartMap {
    pub fn new(
        name: impl Into<String>,
        source: Chart,
        target: Chart,
        forward: RatMatrix,
    ) -> Result<Self, GeometryError> {
        if !forward.is_square() {
            return Err(GeometryError::SingularChart);
        }
        let inverse = forward.inverse().ok_or(GeometryError::SingularChart)?;
        Ok(ChartMap { name: name.into(), source, target, forward, inverse })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> Chart {
        self.source
    }

    pub fn target(&self) -> Chart {
        self.target
    }

    pub fn dim(&self) -> usize {
        self.forward.rows()
    }

    pub fn forward(&self) -> &RatMatrix {
        &self.forward
    }

    pub fn inverse_matrix(&self) -> &RatMatrix {
        &self.inverse
    }

    pub fn inverse_map(&self) -> ChartMap {
        ChartMap {
            name: format!("{}^-1", self.name),
            source: self.target,
            target: self.source,
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &ChartMap) -> Result<ChartMap, GeometryError> {
        if next.source != self.target {
            return Err(GeometryError::ChartMismatch { expected: next.source, found: self.target });
        }
        Ok(ChartMap {
            name: format!("{}.{}", next.name, self.name),
            source: self.source,
            target: next.target,
            forward: next.forward.mul(&self.forward),
            inverse: self.inverse.mul(&next.inverse),
        })
    }

    pub fn apply(&self, point: &[Rational]) -> Vec<Rational> {
        self.forward.mul_vec(point)
    }

    pub fn apply_f64(&self, point: &[f64]) -> Vec<f64> {
        let f = self.forward.to_f64();
        f.iter().map(|row| row.iter().zip(point).map(|(a, b)| a * b).sum()).collect()
    }

    /// Covector components in the target chart: `p_new = F^{-T} p_old`.
    pub fn covector(&self, p: &[Rational]) -> Vec<Rational> {
        self.inverse.transpose().mul_vec(p)
    }

    /// Metric components in the target chart: `g_new = F^{-T} g F^{-1}`.
    pub fn pushforward(&self, metric: &Metric) -> Result<Metric, GeometryError> {
        if metric.chart != self.source {
            return Err(GeometryError::ChartMismatch { expected: self.source, found: metric.chart });
        }
        if metric.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), found: metric.dim() });
        }
        let g = self.inverse.transpose().mul(&metric.components).mul(&self.inverse);
        Metric::new(g, self.target)
    }
}

fn diag(entries: &[i64]) -> RatMatrix {
    RatMatrix::diagonal(&entries.iter().map(|&e| int(e)).collect::<Vec<_>>())
}

/// `diag(+1, −1, −1, −1, −1)` on `(x0, …, x4)`.
pub fn minkowski5() -> Metric {
    Metric::new(diag(&[1, -1, -1, -1, -1]), Chart::Cartesian5d).expect("valid metric")
}

/// `diag(+1, −1, −1, −1)` on the retained axes after a reduction.
pub fn minkowski4() -> Metric {
    Metric::new(diag(&[1, -1, -1, -1]), Chart::Reduced4d).expect("valid metric")
}

/// `η ⊕ η̄ = diag(+1, −1, −1, −1, −1, +1, +1, +1)` on `(y, ȳ)`.
pub fn doubled8() -> Metric {
    Metric::new(diag(&[1, -1, -1, -1, -1, 1, 1, 1]), Chart::Doubled8dCartesian).expect("valid metric")
}

/// `t = x0 − x4`, `s = x0 + x4`, spatial axes unchanged; target order `(t, x1, x2, x3, s)`.
pub fn lightcone_chart() -> ChartMap {
    let mut f = RatMatrix::zeros(5, 5);
    f[(0, 0)] = int(1);
    f[(0, 4)] = int(-1);
    for k in 1..4 {
        f[(k, k)] = int(1);
    }
    f[(4, 0)] = int(1);
    f[(4, 4)] = int(1);
    ChartMap::new("lightcone", Chart::Cartesian5d, Chart::Lightcone5d, f).expect("invertible")
}

/// Light-cone metric on `(t, x1, x2, x3, s)` under the chosen normalization.
pub fn lightcone5(convention: LightconeConvention) -> Metric {
    match convention {
        LightconeConvention::Eq6Exact => lightcone_chart().pushforward(&minkowski5()).expect("charts agree"),
        LightconeConvention::Prose => {
            let mut g = diag(&[0, -1, -1, -1, 0]);
            g[(0, 4)] = Rational::one();
            g[(4, 0)] = Rational::one();
            Metric::new(g, Chart::Lightcone5d).expect("valid metric")
        }
    }
}

/// `x^a = y^a − ȳ^a`, `s = y^0 + ȳ^0`, `ξ^k = y^k + ȳ^k`; target order `(x0, x1, x2, x3, s, ξ1, ξ2, ξ3)`.
pub fn doubled8_lightcone_chart() -> ChartMap {
    let mut f = RatMatrix::zeros(8, 8);
    for a in 0..4 {
        f[(a, a)] = int(1);
        f[(a, a + 4)] = int(-1);
        f[(a + 4, a)] = int(1);
        f[(a + 4, a + 4)] = int(1);
    }
    ChartMap::new("doubled-lightcone", Chart::Doubled8dCartesian, Chart::Doubled8dLightcone, f)
        .expect("invertible")
}

/// Coefficients `η^{μν}` of the operator `Σ η^{μν} ∂_μ ∂_ν`.
pub fn laplace_beltrami_coeffs(metric: &Metric) -> Result<RatMatrix, GeometryError> {
    metric.components.inverse().ok_or(GeometryError::SingularMetric)
}

/// Coefficient matrix of the operator `−∂x0 ∂s + Σ ∂xk ∂ξk` written in the doubled light-cone chart.
pub fn doubled8_printed_operator() -> RatMatrix {
    let mut c = RatMatrix::zeros(8, 8);
    c[(0, 4)] = rat(-1, 2);
    c[(4, 0)] = rat(-1, 2);
    for k in 1..4 {
        c[(k, k + 4)] = rat(1, 2);
        c[(k + 4, k)] = rat(1, 2);
    }
    c
}
