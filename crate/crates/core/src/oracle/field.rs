//! Exponential-polynomial fields: finite sums `Σ p_k(x) · exp(r_k · x)` with Gaussian-rational
//! polynomial coefficients and rate vectors. The class is closed under `∂_μ`, sums, products and
//! multiplication by `exp(linear form)`, so every identity below is decided exactly.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::OracleError;
use crate::scalar::Gq;

/// Multivariate polynomial over Gaussian rationals, keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Gq>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Gq) -> Self {
        Self::monomial(dim, vec![0; dim], c)
    }

    pub fn var(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        Self::monomial(dim, e, Gq::one())
    }

    pub fn monomial(dim: usize, exps: Vec<u32>, c: Gq) -> Self {
        assert_eq!(exps.len(), dim, "exponent vector length");
        let mut p = Poly::zero(dim);
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Gq)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Gq {
        self.terms.get(exps).cloned().unwrap_or_else(Gq::zero)
    }

    pub fn constant_term(&self) -> Gq {
        self.coefficient(&vec![0; self.dim])
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Gq) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        assert_eq!(self.dim, o.dim, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(&-Gq::one()))
    }

    pub fn scale(&self, k: &Gq) -> Poly {
        if k.is_zero() {
            return Poly::zero(self.dim);
        }
        Poly { dim: self.dim, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        assert_eq!(self.dim, o.dim, "polynomial dimension mismatch");
        let mut out = Poly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn partial(&self, axis: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[axis] -= 1;
            out.add_term(e2, c * &Gq::from_int(i64::from(e[axis])));
        }
        out
    }

    /// Replaces variable `axis` by the constant `value` (the variable stays in the index space).
    pub fn substitute(&self, axis: usize, value: &Gq) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let k = std::mem::replace(&mut e2[axis], 0);
            out.add_term(e2, c * &value.pow(k));
        }
        out
    }

    /// Re-indexes variable `i` as `axes[i]` in a `full_dim` space.
    pub fn embed(&self, full_dim: usize, axes: &[usize]) -> Poly {
        assert_eq!(axes.len(), self.dim);
        let mut out = Poly::zero(full_dim);
        for (e, c) in &self.terms {
            let mut e2 = vec![0; full_dim];
            for (i, &a) in axes.iter().enumerate() {
                e2[a] = e[i];
            }
            out.add_term(e2, c.clone());
        }
        out
    }

    /// Keeps only `axes` (in that order); `None` if any other variable actually occurs.
    pub fn restrict(&self, axes: &[usize]) -> Option<Poly> {
        let mut out = Poly::zero(axes.len());
        for (e, c) in &self.terms {
            let dropped_used = (0..self.dim).any(|a| !axes.contains(&a) && e[a] != 0);
            if dropped_used {
                return None;
            }
            out.add_term(axes.iter().map(|&a| e[a]).collect(), c.clone());
        }
        Some(out)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mono: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
                c.to_c64() * mono
            })
            .sum()
    }

    pub fn format_with(&self, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| {
                        let n = names.get(i).map_or_else(|| format!("v{i}"), |s| s.to_string());
                        if k == 1 {
                            n
                        } else {
                            format!("{n}^{k}")
                        }
                    })
                    .collect();
                if mono.is_empty() {
                    c.to_string()
                } else if c.is_one() {
                    mono.join("*")
                } else {
                    format!("{}*{}", c, mono.join("*"))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

/// Finite sum of `polynomial × exp(rate · x)` terms in canonical form: one entry per rate,
/// no zero polynomials.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExpPolyField {
    dim: usize,
    terms: BTreeMap<Vec<Gq>, Poly>,
}

impl ExpPolyField {
    pub fn zero(dim: usize) -> Self {
        ExpPolyField { dim, terms: BTreeMap::new() }
    }

    pub fn from_poly(p: Poly) -> Self {
        let dim = p.dim();
        Self::term(p, vec![Gq::zero(); dim])
    }

    /// `poly · exp(rate · x)`.
    pub fn term(poly: Poly, rate: Vec<Gq>) -> Self {
        let dim = poly.dim();
        let mut f = ExpPolyField::zero(dim);
        if !poly.is_zero() {
            f.terms.insert(rate, poly);
        }
        f
    }

    /// `exp(rate · x)`.
    pub fn exp(rate: Vec<Gq>) -> Self {
        let dim = rate.len();
        Self::term(Poly::constant(dim, Gq::one()), rate)
    }

    pub fn constant(dim: usize, c: Gq) -> Self {
        Self::term(Poly::constant(dim, c), vec![Gq::zero(); dim])
    }

    pub fn var(dim: usize, axis: usize) -> Self {
        Self::term(Poly::var(dim, axis), vec![Gq::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Gq>, &Poly)> {
        self.terms.iter()
    }

    fn add_term(&mut self, rate: Vec<Gq>, p: Poly) {
        if p.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(rate) {
            Entry::Vacant(v) => {
                v.insert(p);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().add(&p);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, o: &ExpPolyField) -> ExpPolyField {
        assert_eq!(self.dim, o.dim, "field dimension mismatch");
        let mut out = self.clone();
        for (r, p) in &o.terms {
            out.add_term(r.clone(), p.clone());
        }
        out
    }

    pub fn sub(&self, o: &ExpPolyField) -> ExpPolyField {
        self.add(&o.scale(&-Gq::one()))
    }

    pub fn scale(&self, k: &Gq) -> ExpPolyField {
        if k.is_zero() {
            return ExpPolyField::zero(self.dim);
        }
        ExpPolyField {
            dim: self.dim,
            terms: self.terms.iter().map(|(r, p)| (r.clone(), p.scale(k))).collect(),
        }
    }

    pub fn mul(&self, o: &ExpPolyField) -> ExpPolyField {
        assert_eq!(self.dim, o.dim, "field dimension mismatch");
        let mut out = ExpPolyField::zero(self.dim);
        for (ra, pa) in &self.terms {
            for (rb, pb) in &o.terms {
                let r = ra.iter().zip(rb).map(|(a, b)| a + b).collect();
                out.add_term(r, pa.mul(pb));
            }
        }
        out
    }

    /// Multiplies by `exp(rate · x)`.
    pub fn mul_exp(&self, rate: &[Gq]) -> ExpPolyField {
        assert_eq!(rate.len(), self.dim, "rate length");
        let mut out = ExpPolyField::zero(self.dim);
        for (r, p) in &self.terms {
            out.add_term(r.iter().zip(rate).map(|(a, b)| a + b).collect(), p.clone());
        }
        out
    }

    /// Exact `∂_axis` via the product rule on every term.
    pub fn partial(&self, axis: usize) -> Result<ExpPolyField, OracleError> {
        if axis >= self.dim {
            return Err(OracleError::AxisOutOfRange { axis, dim: self.dim });
        }
        let mut out = ExpPolyField::zero(self.dim);
        for (r, p) in &self.terms {
            out.add_term(r.clone(), p.scale(&r[axis]).add(&p.partial(axis)));
        }
        Ok(out)
    }

    pub fn conj(&self) -> ExpPolyField {
        let mut out = ExpPolyField::zero(self.dim);
        for (r, p) in &self.terms {
            let rc = r.iter().map(Gq::conj).collect();
            let mut pc = Poly::zero(p.dim());
            for (e, c) in p.terms() {
                pc.add_term(e.clone(), c.conj());
            }
            out.add_term(rc, pc);
        }
        out
    }

    /// Re-indexes variable `i` as `axes[i]` in a `full_dim` space.
    pub fn embed(&self, full_dim: usize, axes: &[usize]) -> ExpPolyField {
        let mut out = ExpPolyField::zero(full_dim);
        for (r, p) in &self.terms {
            let mut r2 = vec![Gq::zero(); full_dim];
            for (i, &a) in axes.iter().enumerate() {
                r2[a] = r[i].clone();
            }
            out.add_term(r2, p.embed(full_dim, axes));
        }
        out
    }

    /// Drops every variable outside `axes`; `None` if the field depends on one of them.
    pub fn restrict(&self, axes: &[usize]) -> Option<ExpPolyField> {
        let mut out = ExpPolyField::zero(axes.len());
        for (r, p) in &self.terms {
            if (0..self.dim).any(|a| !axes.contains(&a) && !r[a].is_zero()) {
                return None;
            }
            out.add_term(axes.iter().map(|&a| r[a].clone()).collect(), p.restrict(axes)?);
        }
        Some(out)
    }

    /// Replaces the variable `axis` by a constant (exact only for real-rational `value`s in the
    /// polynomial part; the exponential factor is left symbolic, so `value` must be zero when the
    /// field has a nonzero rate along `axis`).
    pub fn at_zero(&self, axis: usize) -> ExpPolyField {
        let mut out = ExpPolyField::zero(self.dim);
        for (r, p) in &self.terms {
            let mut r2 = r.clone();
            r2[axis] = Gq::zero();
            out.add_term(r2, p.substitute(axis, &Gq::zero()));
        }
        out
    }

    /// The rate of the single exponential term, if the field has exactly one.
    pub fn single_rate(&self) -> Option<&Vec<Gq>> {
        (self.terms.len() == 1).then(|| self.terms.keys().next()).flatten()
    }

    /// A nonzero coefficient to normalize against: the first term's first coefficient.
    pub fn leading(&self) -> Option<(Vec<Gq>, Vec<u32>, Gq)> {
        let (r, p) = self.terms.iter().next()?;
        let (e, c) = p.terms().next()?;
        Some((r.clone(), e.clone(), c.clone()))
    }

    pub fn coefficient(&self, rate: &[Gq], exps: &[u32]) -> Gq {
        self.terms.get(rate).map_or_else(Gq::zero, |p| p.coefficient(exps))
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.dim);
        self.terms
            .iter()
            .map(|(r, p)| {
                let phase: Complex64 = r.iter().zip(x).map(|(a, &xi)| a.to_c64() * xi).sum();
                p.eval(x) * phase.exp()
            })
            .sum()
    }

    /// One human-readable string per exponential term.
    pub fn term_strings(&self, names: &[&str]) -> Vec<String> {
        self.terms
            .iter()
            .map(|(r, p)| {
                let lin: Vec<String> = r
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| {
                        let n = names.get(i).map_or_else(|| format!("v{i}"), |s| s.to_string());
                        format!("{c}*{n}")
                    })
                    .collect();
                if lin.is_empty() {
                    format!("({})", p.format_with(names))
                } else {
                    format!("({})*exp({})", p.format_with(names), lin.join(" + "))
                }
            })
            .collect()
    }
}

impl fmt::Display for ExpPolyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let parts = self.term_strings(&names);
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}
