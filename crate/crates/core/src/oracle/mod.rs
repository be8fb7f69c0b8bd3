//! Exact symbolic calculus used to certify every reduction identity before numerics are trusted.
//!
//! A constant-coefficient operator of order ≤ 2 is determined by its action on monomials of
//! degree ≤ 2: the constant term of `L(1)`, `L(x_a)` and `L(x_a x_b)` recovers the zeroth-order
//! coefficient, the first-order coefficients and the symmetrized second-order coefficients.
//! [`probe_basis`] multiplies those monomials by at least two exponentials so the family also
//! exercises the rate-dependent part of an operator.

mod certificate;
mod field;

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::matrix::{GqMatrix, RatMatrix};
use crate::scalar::Gq;

pub use certificate::{
    certify_reduction, kg_candidates, reduced_operator, se_candidates, Candidate, CandidateReport, IdentityCertificate,
};
pub use field::{ExpPolyField, Poly};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("axis {axis} out of range for a {dim}-dimensional field")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("probe family cannot separate order-2 operators: {0}")]
    InsufficientProbes(String),
    #[error("no candidate operator matches the reduced operator")]
    NoCandidateMatches(Box<IdentityCertificate>),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// `Σ_{μν} coeffs[μ][ν] ∂_μ ∂_ν f`, exactly.
pub fn apply_operator(coeffs: &RatMatrix, f: &ExpPolyField) -> Result<ExpPolyField, OracleError> {
    if !coeffs.is_square() || coeffs.rows() != f.dim() {
        return Err(OracleError::DimensionMismatch { expected: f.dim(), found: coeffs.rows() });
    }
    ConstCoeffOperator::second_order(coeffs.to_gq()).apply(f)
}

/// `Σ A^{μν} ∂_μ∂_ν + Σ b^μ ∂_μ + c` with Gaussian-rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstCoeffOperator {
    /// Symmetric second-order coefficients.
    pub second: GqMatrix,
    pub first: Vec<Gq>,
    pub zeroth: Gq,
}

impl ConstCoeffOperator {
    pub fn new(second: GqMatrix, first: Vec<Gq>, zeroth: Gq) -> Self {
        assert!(second.is_square() && second.rows() == first.len(), "operator shape");
        let n = first.len();
        let half = Gq::real(crate::scalar::rat(1, 2));
        let sym = GqMatrix::from_fn(n, n, |i, j| &(&second[(i, j)] + &second[(j, i)]) * &half);
        ConstCoeffOperator { second: sym, first, zeroth }
    }

    pub fn second_order(second: GqMatrix) -> Self {
        let n = second.rows();
        Self::new(second, vec![Gq::zero(); n], Gq::zero())
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn apply(&self, f: &ExpPolyField) -> Result<ExpPolyField, OracleError> {
        let n = self.dim();
        if f.dim() != n {
            return Err(OracleError::DimensionMismatch { expected: n, found: f.dim() });
        }
        let mut out = f.scale(&self.zeroth);
        for mu in 0..n {
            let d = f.partial(mu)?;
            if !self.first[mu].is_zero() {
                out = out.add(&d.scale(&self.first[mu]));
            }
            for nu in 0..n {
                let c = &self.second[(mu, nu)];
                if !c.is_zero() {
                    out = out.add(&d.partial(nu)?.scale(c));
                }
            }
        }
        Ok(out)
    }

    /// Reads off a constant-coefficient order-≤2 operator from its action, given as a closure,
    /// on the monomials of degree ≤ 2.
    pub fn extract(
        dim: usize,
        mut act: impl FnMut(&ExpPolyField) -> Result<ExpPolyField, OracleError>,
    ) -> Result<Self, OracleError> {
        let constant_part = |f: &ExpPolyField| f.coefficient(&vec![Gq::zero(); dim], &vec![0; dim]);
        let zeroth = constant_part(&act(&ExpPolyField::constant(dim, Gq::one()))?);
        let mut first = vec![Gq::zero(); dim];
        for (a, slot) in first.iter_mut().enumerate() {
            *slot = constant_part(&act(&ExpPolyField::var(dim, a))?);
        }
        let half = Gq::real(crate::scalar::rat(1, 2));
        let mut second = GqMatrix::zeros(dim, dim);
        for a in 0..dim {
            for b in a..dim {
                let mono = ExpPolyField::var(dim, a).mul(&ExpPolyField::var(dim, b));
                let c = &constant_part(&act(&mono)?) * &half;
                second[(a, b)] = c.clone();
                second[(b, a)] = c;
            }
        }
        Ok(ConstCoeffOperator { second, first, zeroth })
    }

    /// `k` with `self = k · other`.
    pub fn proportionality(&self, other: &ConstCoeffOperator) -> Option<Gq> {
        if self.dim() != other.dim() {
            return None;
        }
        let flat = |op: &ConstCoeffOperator| -> Vec<Gq> {
            let mut v: Vec<Gq> = op.second.to_rows().into_iter().flatten().collect();
            v.extend(op.first.iter().cloned());
            v.push(op.zeroth.clone());
            v
        };
        let (a, b) = (flat(self), flat(other));
        let idx = b.iter().position(|x| !x.is_zero())?;
        let k = &a[idx] / &b[idx];
        a.iter().zip(&b).all(|(x, y)| *x == y * &k).then_some(k)
    }

    pub fn scale(&self, k: &Gq) -> Self {
        ConstCoeffOperator {
            second: self.second.scale(k),
            first: self.first.iter().map(|c| c * k).collect(),
            zeroth: &self.zeroth * k,
        }
    }

    pub fn format_with(&self, names: &[&str]) -> String {
        let mut parts = Vec::new();
        let n = self.dim();
        let name = |i: usize| names.get(i).map_or_else(|| format!("v{i}"), |s| s.to_string());
        let coef = |c: &Gq| if c.is_one() { String::new() } else if *c == -Gq::one() { "-".into() } else { format!("{c}*") };
        for a in 0..n {
            for b in a..n {
                let c = if a == b { self.second[(a, a)].clone() } else { &self.second[(a, b)] + &self.second[(b, a)] };
                if c.is_zero() {
                    continue;
                }
                let d = if a == b { format!("d{}^2", name(a)) } else { format!("d{} d{}", name(a), name(b)) };
                parts.push(format!("{}{}", coef(&c), d));
            }
        }
        for (a, c) in self.first.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("{}d{}", coef(c), name(a)));
            }
        }
        if !self.zeroth.is_zero() {
            parts.push(self.zeroth.to_string());
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

impl fmt::Display for ConstCoeffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.dim()).map(|i| format!("x{i}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        f.write_str(&self.format_with(&names))
    }
}

/// Monomials of total degree ≤ `degree` in `dim` variables, in graded lexicographic order.
pub fn monomial_exponents(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(dim, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut layer = Vec::new();
        let mut prefix = Vec::new();
        rec(dim, d, &mut prefix, &mut layer);
        out.extend(layer.into_iter().filter(|e| e.iter().sum::<u32>() == d));
    }
    out
}

/// Every monomial of degree ≤ `degree` times every `exp(rate · x)`.
pub fn probe_basis(dim: usize, degree: u32, rates: &[Vec<Gq>]) -> Result<Vec<ExpPolyField>, OracleError> {
    if degree < 2 {
        return Err(OracleError::InsufficientProbes(format!("degree {degree} < 2")));
    }
    if let Some(r) = rates.iter().find(|r| r.len() != dim) {
        return Err(OracleError::DimensionMismatch { expected: dim, found: r.len() });
    }
    let mut distinct: Vec<&Vec<Gq>> = rates.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(OracleError::InsufficientProbes(format!("{} distinct rate(s), need 2", distinct.len())));
    }
    let monos = monomial_exponents(dim, degree);
    let mut out = Vec::with_capacity(monos.len() * distinct.len());
    for r in &distinct {
        for e in &monos {
            out.push(ExpPolyField::term(Poly::monomial(dim, e.clone(), Gq::one()), (*r).clone()));
        }
    }
    Ok(out)
}

/// The default probe rates for 4-D reduced fields: zero and a generic complex rate.
pub fn default_probe_rates(dim: usize) -> Vec<Vec<Gq>> {
    use crate::scalar::rat;
    let generic = [
        Gq::new(rat(1, 2), rat(1, 3)),
        Gq::new(rat(-1, 5), rat(0, 1)),
        Gq::new(rat(0, 1), rat(2, 7)),
        Gq::new(rat(3, 4), rat(-1, 1)),
    ];
    let r = (0..dim).map(|i| generic[i % generic.len()].clone()).collect();
    vec![vec![Gq::zero(); dim], r]
}
