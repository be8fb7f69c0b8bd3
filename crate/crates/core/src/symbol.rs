//! Principal symbol, mass shells and their reduction by a fixed momentum component.

use std::fmt;
use std::io::Write;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{laplace_beltrami_coeffs, lightcone5, minkowski5, Chart, LightconeConvention};
use crate::matrix::RatMatrix;
use crate::oracle::Poly;
use crate::scalar::{fmt_rational, rat_to_f64, Gq, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("substituting the constraints leaves sigma independent of the remaining momenta")]
    DegenerateConstraint,
    #[error("expected exactly one constraint, found {0}")]
    ConstraintCount(usize),
    #[error("constraint axis {0} is out of range or repeated")]
    BadConstraintAxis(usize),
    #[error("the constrained shell has no real points")]
    EmptyShell,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("point is off the shell: p_t = {p_t}, |p|^2/(2m) = {expected}")]
    OffShell { p_t: f64, expected: f64 },
}

/// A point of `T*M`: base point and momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct CotangentPoint {
    pub base: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl CotangentPoint {
    /// Value of the momentum map generating translations along `axis`: the `p_axis` component.
    pub fn momentum_map(&self, axis: usize) -> f64 {
        self.momentum[axis]
    }
}

/// `σ(p) = Σ η^{μν} p_μ p_ν`.
pub fn sigma(symbol_coeffs: &RatMatrix, p: &[f64]) -> Result<f64, SymbolError> {
    let n = symbol_coeffs.rows();
    if p.len() != n {
        return Err(SymbolError::DimensionMismatch { expected: n, found: p.len() });
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let c = &symbol_coeffs[(i, j)];
            if !c.is_zero() {
                acc += rat_to_f64(c) * p[i] * p[j];
            }
        }
    }
    Ok(acc)
}

pub fn sigma_exact(symbol_coeffs: &RatMatrix, p: &[Rational]) -> Result<Rational, SymbolError> {
    let n = symbol_coeffs.rows();
    if p.len() != n {
        return Err(SymbolError::DimensionMismatch { expected: n, found: p.len() });
    }
    let mut acc = Rational::zero();
    for i in 0..n {
        for j in 0..n {
            acc += &symbol_coeffs[(i, j)] * &p[i] * &p[j];
        }
    }
    Ok(acc)
}

/// The principal symbol as an exact polynomial in the momenta.
pub fn sigma_poly(symbol_coeffs: &RatMatrix) -> Poly {
    let n = symbol_coeffs.rows();
    let mut out = Poly::zero(n);
    for i in 0..n {
        for j in 0..n {
            let c = &symbol_coeffs[(i, j)];
            if c.is_zero() {
                continue;
            }
            let mono = Poly::var(n, i).mul(&Poly::var(n, j));
            out = out.add(&mono.scale(&Gq::real(c.clone())));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShellSpec {
    pub chart: Chart,
    pub symbol_coeffs: RatMatrix,
    /// `(momentum axis, fixed value)` pairs.
    pub constraints: Vec<(usize, Rational)>,
    /// Half-width of the box the free spatial momenta are drawn from.
    pub sample_half_width: f64,
}

impl ShellSpec {
    /// `p₄ = m` on the Cartesian 5-D shell.
    pub fn spacelike(mass: &Rational) -> Self {
        ShellSpec {
            chart: Chart::Cartesian5d,
            symbol_coeffs: laplace_beltrami_coeffs(&minkowski5()).expect("non-degenerate"),
            constraints: vec![(4, mass.clone())],
            sample_half_width: 2.0,
        }
    }

    /// `p_s = m` on the light-cone shell under the chosen normalization.
    pub fn lightlike(mass: &Rational, convention: LightconeConvention) -> Self {
        ShellSpec {
            chart: Chart::Lightcone5d,
            symbol_coeffs: laplace_beltrami_coeffs(&lightcone5(convention)).expect("non-degenerate"),
            constraints: vec![(4, mass.clone())],
            sample_half_width: 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.symbol_coeffs.rows()
    }

    fn validate(&self) -> Result<(), SymbolError> {
        if self.constraints.len() != 1 {
            return Err(SymbolError::ConstraintCount(self.constraints.len()));
        }
        let mut seen = Vec::new();
        for (a, _) in &self.constraints {
            if *a >= self.dim() || seen.contains(a) {
                return Err(SymbolError::BadConstraintAxis(*a));
            }
            seen.push(*a);
        }
        Ok(())
    }

    pub fn momentum_names(&self) -> Vec<String> {
        self.chart.axis_names().iter().map(|a| format!("p_{a}")).collect()
    }
}

/// The relation `pᵀ Q p + L·p + c = 0` on the retained momenta.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedShell {
    pub retained_axes: Vec<usize>,
    pub retained_names: Vec<String>,
    pub quadratic: RatMatrix,
    pub linear: Vec<Rational>,
    pub constant: Rational,
}

impl ReducedShell {
    pub fn dim(&self) -> usize {
        self.retained_axes.len()
    }

    pub fn to_poly(&self) -> Poly {
        let n = self.dim();
        let mut out = Poly::constant(n, Gq::real(self.constant.clone()));
        for i in 0..n {
            out = out.add(&Poly::var(n, i).scale(&Gq::real(self.linear[i].clone())));
            for j in 0..n {
                let c = &self.quadratic[(i, j)];
                if !c.is_zero() {
                    out = out.add(&Poly::var(n, i).mul(&Poly::var(n, j)).scale(&Gq::real(c.clone())));
                }
            }
        }
        out
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = rat_to_f64(&self.constant);
        for i in 0..n {
            acc += rat_to_f64(&self.linear[i]) * q[i];
            for j in 0..n {
                acc += rat_to_f64(&self.quadratic[(i, j)]) * q[i] * q[j];
            }
        }
        acc
    }
}

impl fmt::Display for ReducedShell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.retained_names.iter().map(String::as_str).collect();
        write!(f, "{} = 0", self.to_poly().format_with(&names))
    }
}

/// Substitutes the constraint into `σ = 0` and returns the induced relation on the retained momenta.
pub fn reduce_shell(spec: &ShellSpec) -> Result<ReducedShell, SymbolError> {
    spec.validate()?;
    let n = spec.dim();
    let fixed: Vec<usize> = spec.constraints.iter().map(|(a, _)| *a).collect();
    let retained_axes: Vec<usize> = (0..n).filter(|a| !fixed.contains(a)).collect();
    let value = |a: usize| spec.constraints.iter().find(|(b, _)| *b == a).map(|(_, v)| v.clone());
    let r = retained_axes.len();
    let c = &spec.symbol_coeffs;
    let quadratic = RatMatrix::from_fn(r, r, |i, j| c[(retained_axes[i], retained_axes[j])].clone());
    let mut linear = vec![Rational::zero(); r];
    let mut constant = Rational::zero();
    for (i, &a) in retained_axes.iter().enumerate() {
        for &b in &fixed {
            let v = value(b).expect("constraint value");
            linear[i] += (&c[(a, b)] + &c[(b, a)]) * &v;
        }
    }
    for &a in &fixed {
        for &b in &fixed {
            constant += &c[(a, b)] * value(a).expect("value") * value(b).expect("value");
        }
    }
    if quadratic.is_zero() && linear.iter().all(Zero::is_zero) {
        return Err(SymbolError::DegenerateConstraint);
    }
    let retained_names = retained_axes.iter().map(|&a| format!("p_{}", spec.chart.axis_names()[a])).collect();
    Ok(ReducedShell { retained_axes, retained_names, quadratic, linear, constant })
}

/// Deterministic samples of the constrained shell as full momentum vectors.
///
/// The non-leading retained momenta are drawn uniformly from `[−K, K]`; the first retained
/// momentum is solved for in closed form. Sample `i` uses ChaCha stream `i` of `seed` and takes
/// the larger root for even `i` and the smaller for odd `i`.
pub fn sample_shell(spec: &ShellSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, SymbolError> {
    if n == 0 {
        return Err(SymbolError::NoSamples);
    }
    let reduced = reduce_shell(spec)?;
    let dim = spec.dim();
    let fixed: Vec<(usize, f64)> = spec.constraints.iter().map(|(a, v)| (*a, rat_to_f64(v))).collect();
    let q = reduced.quadratic.to_f64();
    let l: Vec<f64> = reduced.linear.iter().map(rat_to_f64).collect();
    let c0 = rat_to_f64(&reduced.constant);
    let r = reduced.dim();
    let k = spec.sample_half_width;
    const MAX_ATTEMPTS: usize = 1000;

    let one = |i: usize| -> Result<Vec<f64>, SymbolError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for _ in 0..MAX_ATTEMPTS {
            let mut x = vec![0.0; r];
            for xj in x.iter_mut().skip(1) {
                *xj = rng.gen_range(-k..=k);
            }
            // a x0² + b x0 + c = 0
            let a = q[0][0];
            let mut b = l[0];
            let mut c = c0;
            for j in 1..r {
                b += (q[0][j] + q[j][0]) * x[j];
                c += l[j] * x[j];
                for jj in 1..r {
                    c += q[j][jj] * x[j] * x[jj];
                }
            }
            let root = if a != 0.0 {
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    continue;
                }
                let t = -0.5 * (b + if b >= 0.0 { 1.0 } else { -1.0 } * disc.sqrt());
                if t == 0.0 {
                    0.0
                } else {
                    let (r1, r2) = (t / a, c / t);
                    if sign > 0.0 {
                        r1.max(r2)
                    } else {
                        r1.min(r2)
                    }
                }
            } else if b != 0.0 {
                -c / b
            } else {
                continue;
            };
            x[0] = root;
            let mut p = vec![0.0; dim];
            for (j, &ax) in reduced.retained_axes.iter().enumerate() {
                p[ax] = x[j];
            }
            for &(ax, v) in &fixed {
                p[ax] = v;
            }
            return Ok(p);
        }
        Err(SymbolError::EmptyShell)
    };
    (0..n).into_par_iter().map(one).collect()
}

/// `p_t` of a point `(p_t, p_1, p_2, p_3)` on the shell `2 m p_t = |p|²`.
pub fn kinetic_energy(p: &[f64], mass: f64) -> Result<f64, SymbolError> {
    if p.len() != 4 {
        return Err(SymbolError::DimensionMismatch { expected: 4, found: p.len() });
    }
    let p_t = p[0];
    let expected = p[1..].iter().map(|x| x * x).sum::<f64>() / (2.0 * mass);
    if (p_t - expected).abs() > 1e-12 * expected.abs().max(1.0) {
        return Err(SymbolError::OffShell { p_t, expected });
    }
    Ok(p_t)
}

/// CSV: one row per sample, momentum columns then the `σ` residual. Numbers use Rust's
/// shortest round-trip formatting, so output is byte-stable.
pub fn write_samples_csv<W: Write>(out: &mut W, spec: &ShellSpec, samples: &[Vec<f64>]) -> std::io::Result<()> {
    let names = spec.momentum_names();
    writeln!(out, "{},sigma_residual", names.join(","))?;
    for p in samples {
        let s = sigma(&spec.symbol_coeffs, p).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let cols: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{},{:e}", cols.join(","), s)?;
    }
    Ok(())
}

/// Human-readable form of the constraint list, e.g. `p_x4 = 3/2`.
pub fn describe_constraints(spec: &ShellSpec) -> String {
    spec.constraints
        .iter()
        .map(|(a, v)| format!("p_{} = {}", spec.chart.axis_names()[*a], fmt_rational(v)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Largest `|σ(p)|` and largest constraint violation over a sample set.
pub fn shell_violation(spec: &ShellSpec, samples: &[Vec<f64>]) -> (f64, f64) {
    let mut sig = 0.0f64;
    let mut con = 0.0f64;
    for p in samples {
        sig = sig.max(sigma(&spec.symbol_coeffs, p).map(f64::abs).unwrap_or(f64::INFINITY));
        for (a, v) in &spec.constraints {
            con = con.max((p[*a] - v.to_f64().unwrap_or(f64::NAN)).abs());
        }
    }
    (sig, con)
}
