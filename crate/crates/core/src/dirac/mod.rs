//! The Clifford-exponential unfolding of the 8-D complex Klein-Gordon equation and the 4-D Dirac
//! operator it is meant to produce.
//!
//! The four stored matrices `G_0..G_3` are the ones that appear in the exponent
//! `E(s, ξ) = exp(i m (s G_0 − ξ^k G_k))`. The Dirac operator built from them is
//! `i G_μ ∂_μ − m` (each stored matrix paired with its own coordinate derivative); the reading
//! with a spatial sign flip is tracked separately by the certificate.

use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::FieldError;
use crate::matrix::GqMatrix;
use crate::oracle::{ExpPolyField, OracleError};
use crate::scalar::{int, rat, Gq, Rational};

mod grid;
mod reduce;

pub use grid::{apply_dirac_grid, dirac_residual, SpinorField, SpinorResidual};
pub use reduce::{
    apply_dirac_exact, compare_normalizations, dirac_square_factor, reduce_to_dirac, DiracCertificate,
    DiracOperator, Factorization, NormalizationReport,
};

type C64 = Complex64;

/// 4×4 complex matrix in row-major order.
pub type CMat4 = [[C64; 4]; 4];

#[derive(Debug, Error)]
pub enum DiracError {
    #[error("expected a 4-component spinor over 4 coordinates, found {found}")]
    DimensionMismatch { found: usize },
    #[error("spinor components live on different grids")]
    SpecMismatch,
    #[error("p-slash + m has no nonzero column; no spinor can be built")]
    ZeroSpinor,
    #[error("the Clifford exponential does not factor out of the 8-D operator")]
    NonCommutingRemainder(Box<DiracCertificate>),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Right-hand side of the Clifford relation: `{G_μ, G_ν} = 2 η_{μν}` (standard) or `η_{μν}` (paper).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Standard,
    Paper,
}

impl Normalization {
    /// `f` in `{G_μ, G_ν} = f η_{μν}`.
    pub fn factor(self) -> Rational {
        match self {
            Normalization::Standard => int(2),
            Normalization::Paper => int(1),
        }
    }

    /// `c` in `M² = m²(s² − |ξ|²) c · I`.
    pub fn square_constant(self) -> f64 {
        match self {
            Normalization::Standard => 1.0,
            Normalization::Paper => 0.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Standard => "standard",
            Normalization::Paper => "paper",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Normalization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(Normalization::Standard),
            "paper" => Ok(Normalization::Paper),
            other => Err(format!("unknown normalization `{other}` (expected `standard` or `paper`)")),
        }
    }
}

/// `η = diag(+1, −1, −1, −1)`.
pub fn eta(mu: usize) -> i64 {
    if mu == 0 {
        1
    } else {
        -1
    }
}

fn pauli(k: usize) -> [[Gq; 2]; 2] {
    let (z, o, i) = (Gq::zero(), Gq::one(), Gq::i());
    match k {
        0 => [[o.clone(), z.clone()], [z, o]],
        1 => [[z.clone(), o.clone()], [o, z]],
        2 => [[z, -&i], [i, Gq::zero()]],
        3 => [[o.clone(), z.clone()], [z, -o]],
        _ => unreachable!("pauli index"),
    }
}

/// Places 2×2 blocks `[[a, b], [c, d]]` into a 4×4 matrix.
fn blocks(a: &[[Gq; 2]; 2], b: &[[Gq; 2]; 2], c: &[[Gq; 2]; 2], d: &[[Gq; 2]; 2]) -> GqMatrix {
    GqMatrix::from_fn(4, 4, |i, j| {
        let blk = match (i / 2, j / 2) {
            (0, 0) => a,
            (0, 1) => b,
            (1, 0) => c,
            _ => d,
        };
        blk[i % 2][j % 2].clone()
    })
}

fn scale2(k: &Gq, m: &[[Gq; 2]; 2]) -> [[Gq; 2]; 2] {
    [[k * &m[0][0], k * &m[0][1]], [k * &m[1][0], k * &m[1][1]]]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaSet {
    pub normalization: Normalization,
    pub gammas: [GqMatrix; 4],
}

impl GammaSet {
    /// Dirac representation: `G_0 = diag(1, 1, −1, −1)`, `G_k = [[0, σ_k], [−σ_k, 0]]`.
    pub fn standard() -> Self {
        let zero = [[Gq::zero(), Gq::zero()], [Gq::zero(), Gq::zero()]];
        let id = pauli(0);
        let g0 = blocks(&id, &zero, &zero, &scale2(&Gq::from_int(-1), &id));
        let gk = |k| {
            let s = pauli(k);
            blocks(&zero, &s, &scale2(&Gq::from_int(-1), &s), &zero)
        };
        GammaSet { normalization: Normalization::Standard, gammas: [g0, gk(1), gk(2), gk(3)] }
    }

    /// `{G_μ, G_ν} = η_{μν}` needs entries of modulus `1/√2` in the Dirac representation, so the
    /// exact set uses the chiral blocks `G_μ = [[0, σ_μ / 2], [σ̄_μ, 0]]` with `σ̄ = (1, −σ_k)`.
    pub fn paper() -> Self {
        let zero = [[Gq::zero(), Gq::zero()], [Gq::zero(), Gq::zero()]];
        let half = Gq::real(rat(1, 2));
        let g = |mu: usize| {
            let s = pauli(mu);
            let sbar = if mu == 0 { s.clone() } else { scale2(&Gq::from_int(-1), &s) };
            blocks(&zero, &scale2(&half, &s), &sbar, &zero)
        };
        GammaSet { normalization: Normalization::Paper, gammas: [g(0), g(1), g(2), g(3)] }
    }

    pub fn new(normalization: Normalization) -> Self {
        match normalization {
            Normalization::Standard => Self::standard(),
            Normalization::Paper => Self::paper(),
        }
    }

    pub fn anticommutator(&self, mu: usize, nu: usize) -> GqMatrix {
        let (a, b) = (&self.gammas[mu], &self.gammas[nu]);
        a.mul(b).add(&b.mul(a))
    }

    /// Pairs `(μ, ν)` whose anticommutator differs from `f η_{μν} I`; empty when the set is valid.
    pub fn clifford_violations(&self) -> Vec<(usize, usize)> {
        let f = self.normalization.factor();
        let mut bad = Vec::new();
        for mu in 0..4 {
            for nu in 0..4 {
                let expected = if mu == nu { Gq::real(&f * int(eta(mu))) } else { Gq::zero() };
                if self.anticommutator(mu, nu) != GqMatrix::identity(4).scale(&expected) {
                    bad.push((mu, nu));
                }
            }
        }
        bad
    }

    /// `p̸ = G_0 p^0 − G_k p^k` for contravariant `p`.
    pub fn slash(&self, p: &[Gq; 4]) -> GqMatrix {
        (0..4).fold(GqMatrix::zeros(4, 4), |acc, mu| {
            acc.add(&self.gammas[mu].scale(&(&p[mu] * &Gq::from_int(eta(mu)))))
        })
    }

    pub fn to_c64(&self) -> [CMat4; 4] {
        let conv = |g: &GqMatrix| {
            let mut out = [[C64::new(0.0, 0.0); 4]; 4];
            for (i, row) in out.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = g[(i, j)].to_c64();
                }
            }
            out
        };
        [conv(&self.gammas[0]), conv(&self.gammas[1]), conv(&self.gammas[2]), conv(&self.gammas[3])]
    }

    /// `{"normalization": …, "gammas": [G_0, …, G_3]}` with each entry a `[re, im]` pair.
    pub fn to_json(&self) -> String {
        let gammas: Vec<Vec<Vec<[f64; 2]>>> = self
            .to_c64()
            .iter()
            .map(|g| g.iter().map(|row| row.iter().map(|c| [c.re, c.im]).collect()).collect())
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "normalization": self.normalization.as_str(),
            "gammas": gammas,
        }))
        .expect("gamma set serializes")
    }
}

fn matmul(a: &CMat4, b: &CMat4) -> CMat4 {
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// `M = m (s G_0 − ξ^k G_k)`.
pub fn clifford_generator(s: f64, xi: [f64; 3], m: f64, gammas: &GammaSet) -> CMat4 {
    let g = gammas.to_c64();
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m * (s * g[0][i][j] - xi[0] * g[1][i][j] - xi[1] * g[2][i][j] - xi[2] * g[3][i][j]);
        }
    }
    out
}

/// `E(s, ξ) = exp(iM)` from `M² = q I`, `q = m²(s² − |ξ|²) c`.
pub fn clifford_exponential(s: f64, xi: [f64; 3], m: f64, gammas: &GammaSet) -> CMat4 {
    let mm = clifford_generator(s, xi, m, gammas);
    let q = m * m * (s * s - xi.iter().map(|x| x * x).sum::<f64>()) * gammas.normalization.square_constant();
    let (c, sinc) = if q > 0.0 {
        let r = q.sqrt();
        (r.cos(), r.sin() / r)
    } else if q < 0.0 {
        let r = (-q).sqrt();
        (r.cosh(), r.sinh() / r)
    } else {
        (1.0, 1.0)
    };
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let id = if i == j { c } else { 0.0 };
            out[i][j] = C64::new(id, 0.0) + C64::new(0.0, sinc) * mm[i][j];
        }
    }
    out
}

/// `Σ_{n<terms} (iM)^n / n!`.
pub fn clifford_exponential_series(s: f64, xi: [f64; 3], m: f64, gammas: &GammaSet, terms: usize) -> CMat4 {
    let mm = clifford_generator(s, xi, m, gammas);
    let im = mm.map(|row| row.map(|v| C64::new(0.0, 1.0) * v));
    let mut term = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in term.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    let mut sum = term;
    for n in 1..terms {
        term = matmul(&term, &im).map(|row| row.map(|v| v / n as f64));
        for i in 0..4 {
            for j in 0..4 {
                sum[i][j] += term[i][j];
            }
        }
    }
    sum
}

pub fn cmat_product(a: &CMat4, b: &CMat4) -> CMat4 {
    matmul(a, b)
}

/// A column of `p̸ + m` (the first nonzero one), which `p̸ − m` annihilates when the set is
/// standard and `p² = m²`.
pub fn positive_energy_spinor(p: &[Rational; 4], m: &Rational, gammas: &GammaSet) -> Result<[Gq; 4], DiracError> {
    let pg: [Gq; 4] = [0, 1, 2, 3].map(|mu| Gq::real(p[mu].clone()));
    let proj = gammas.slash(&pg).add(&GqMatrix::identity(4).scale(&Gq::real(m.clone())));
    (0..4)
        .map(|j| [0, 1, 2, 3].map(|i| proj[(i, j)].clone()))
        .find(|col| col.iter().any(|c| !c.is_zero()))
        .ok_or(DiracError::ZeroSpinor)
}

/// `u e^{−i p·x}` with `p·x = p^0 x^0 − p^k x^k`, as exact fields over `(x0, x1, x2, x3)`.
pub fn plane_wave_spinor(u: &[Gq; 4], p: &[Rational; 4]) -> [ExpPolyField; 4] {
    let rate: Vec<Gq> = (0..4).map(|mu| Gq::imag(-(&p[mu] * int(eta(mu))))).collect();
    u.clone().map(|c| ExpPolyField::exp(rate.clone()).scale(&c))
}

/// `Σ_μ η_{μμ} p^μ p^μ`.
pub fn minkowski_square(p: &[Rational; 4]) -> Rational {
    (0..4).fold(Rational::zero(), |acc, mu| acc + &p[mu] * &p[mu] * int(eta(mu)))
}

#[cfg(test)]
mod tests;
