use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::{interior_report, CovariantField, DdwResiduals, DedonderError};
use crate::ansatz::{Orientation, ReductionAnsatz, ReductionKind};
use crate::fields::{apply_ansatz, check_grid, full_spec, reduce_field, GridField, GridSpec, PlaneWaveSum};
use crate::geometry::Metric;
use crate::matrix::GqMatrix;
use crate::oracle::{ConstCoeffOperator, ExpPolyField};
use crate::scalar::{Gq, Rational};

type C64 = Complex64;

/// A field slot of a reduced section: `ψ`, the retained momenta `π^j`, and the momentum `λ`
/// along the reduction direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Psi,
    Pi(usize),
    Lambda,
}

/// `coeff · slot` or `coeff · ∂_axis slot`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: Gq,
    pub slot: Slot,
    pub derivative: Option<usize>,
}

impl Term {
    pub fn new(coeff: Gq, slot: Slot, derivative: Option<usize>) -> Self {
        Term { coeff, slot, derivative }
    }
}

/// `Σ terms = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub label: String,
    pub terms: Vec<Term>,
}

/// A first-order system: `dim + [λ]` momentum relations that are algebraic in the momenta, plus
/// one divergence equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstOrderSystem {
    pub name: String,
    pub axis_names: Vec<String>,
    pub has_lambda: bool,
    pub relations: Vec<Equation>,
    pub divergence: Equation,
    /// The ansatz the momenta are attached to; `None` for the unreduced system.
    pub ansatz: Option<ReductionAnsatz>,
}

fn g(re: Rational) -> Gq {
    Gq::real(re)
}

fn label_terms(terms: &[Term], axis_names: &[String]) -> String {
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        let slot = match t.slot {
            Slot::Psi => "psi".to_string(),
            Slot::Pi(j) => format!("pi^{}", axis_names[j]),
            Slot::Lambda => "lambda".to_string(),
        };
        let body = match t.derivative {
            Some(a) => format!("d_{} {slot}", axis_names[a]),
            None => slot,
        };
        let c = &t.coeff;
        let (sign, mag) = if c.im.is_zero() && c.re < Rational::zero() { ("-", -c.clone()) } else { ("+", c.clone()) };
        if i == 0 {
            if sign == "-" {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        if mag.is_one() {
            out.push_str(&body);
        } else if mag.im.is_zero() {
            out.push_str(&format!("{mag}*{body}"));
        } else {
            out.push_str(&format!("({mag})*{body}"));
        }
    }
    out
}

impl fmt::Display for FirstOrderSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}:", self.name)?;
        for e in self.relations.iter().chain(std::iter::once(&self.divergence)) {
            writeln!(f, "  {} = 0", e.label)?;
        }
        Ok(())
    }
}

impl FirstOrderSystem {
    fn build(name: &str, axis_names: Vec<String>, has_lambda: bool, relations: Vec<Vec<Term>>, divergence: Vec<Term>, ansatz: Option<ReductionAnsatz>) -> Self {
        let eq = |terms: Vec<Term>| Equation { label: label_terms(&terms, &axis_names), terms };
        FirstOrderSystem {
            name: name.to_string(),
            relations: relations.into_iter().map(eq).collect(),
            divergence: eq(divergence),
            axis_names,
            has_lambda,
            ansatz,
        }
    }

    /// `∂_μ φ − η_{μν} P^ν = 0`, `∂_μ P^μ = 0` on the full chart (`ψ = φ`, `π = P`).
    pub fn full(metric: &Metric) -> Self {
        let d = metric.dim();
        let eta = metric.components();
        let relations = (0..d)
            .map(|mu| {
                let mut t = vec![Term::new(Gq::one(), Slot::Psi, Some(mu))];
                for nu in 0..d {
                    if !eta[(mu, nu)].is_zero() {
                        t.push(Term::new(g(-eta[(mu, nu)].clone()), Slot::Pi(nu), None));
                    }
                }
                t
            })
            .collect();
        let div = (0..d).map(|mu| Term::new(Gq::one(), Slot::Pi(mu), Some(mu))).collect();
        let names = metric.chart().axis_names().iter().map(|s| s.to_string()).collect();
        Self::build(&format!("full ({})", metric.convention_label()), names, false, relations, div, None)
    }

    /// The system obtained by inserting `φ = e^{r x^d} ψ`, `P^j = e^{r x^d} π^j`,
    /// `P^d = r e^{r x^d} λ` into the full equations and dividing out the profile.
    pub fn derived(metric: &Metric, ansatz: &ReductionAnsatz) -> Result<Self, DedonderError> {
        if metric.chart() != ansatz.chart {
            return Err(DedonderError::ChartMismatch { field: ansatz.chart, metric: metric.chart() });
        }
        let eta = metric.components();
        let r = &ansatz.rate;
        let dir = ansatz.direction_axis;
        let ax = &ansatz.reduced_axes;
        let momentum_terms = |row: usize| -> Vec<Term> {
            let mut t = Vec::new();
            for (l, &al) in ax.iter().enumerate() {
                if !eta[(row, al)].is_zero() {
                    t.push(Term::new(g(-eta[(row, al)].clone()), Slot::Pi(l), None));
                }
            }
            if !eta[(row, dir)].is_zero() {
                t.push(Term::new(&g(-eta[(row, dir)].clone()) * r, Slot::Lambda, None));
            }
            t
        };
        let mut relations: Vec<Vec<Term>> = ax
            .iter()
            .enumerate()
            .map(|(j, &aj)| {
                let mut t = vec![Term::new(Gq::one(), Slot::Psi, Some(j))];
                t.extend(momentum_terms(aj));
                t
            })
            .collect();
        let mut along = vec![Term::new(r.clone(), Slot::Psi, None)];
        along.extend(momentum_terms(dir));
        relations.push(along);
        let mut div: Vec<Term> = (0..ax.len()).map(|j| Term::new(Gq::one(), Slot::Pi(j), Some(j))).collect();
        div.push(Term::new(r * r, Slot::Lambda, None));
        let names = ansatz.reduced_axis_names().iter().map(|s| s.to_string()).collect();
        let name = format!("derived ({}, rate {})", metric.convention_label(), r);
        Ok(Self::build(&name, names, true, relations, div, Some(ansatz.clone())))
    }

    /// The reduced Klein-Gordon system as printed: `λ + ψ = 0`, `∂_0ψ − π^0 = 0`,
    /// `∂_kψ + π^k = 0`, `∂_0π^0 − m²λ + ∂_kπ^k = 0`, attached to the profile `e^{−m x4}`.
    pub fn printed_kg(mass: &Rational) -> Result<Self, DedonderError> {
        let ansatz = ReductionAnsatz::standard(ReductionKind::KleinGordon, Orientation::Paper, mass)
            .map_err(|_| DedonderError::NonPositiveMass)?;
        let one = Gq::one;
        let mut relations = vec![
            vec![Term::new(one(), Slot::Lambda, None), Term::new(one(), Slot::Psi, None)],
            vec![Term::new(one(), Slot::Psi, Some(0)), Term::new(-one(), Slot::Pi(0), None)],
        ];
        for k in 1..4 {
            relations.push(vec![Term::new(one(), Slot::Psi, Some(k)), Term::new(one(), Slot::Pi(k), None)]);
        }
        let m2 = g(mass * mass);
        let mut div = vec![Term::new(one(), Slot::Pi(0), Some(0)), Term::new(-m2, Slot::Lambda, None)];
        div.extend((1..4).map(|k| Term::new(one(), Slot::Pi(k), Some(k))));
        let names = ansatz.reduced_axis_names().iter().map(|s| s.to_string()).collect();
        Ok(Self::build("printed KG", names, true, relations, div, Some(ansatz)))
    }

    /// The reduced Schrödinger system as printed: `π^t + imψ = 0`, `∂_tψ + imλ = 0`,
    /// `∂_kψ + π^k = 0`, `∂_tπ^t − m²λ + ∂_kπ^k = 0`, attached to the profile `e^{ims}`.
    pub fn printed_se(mass: &Rational) -> Result<Self, DedonderError> {
        let ansatz = ReductionAnsatz::standard(ReductionKind::Schroedinger, Orientation::Oscillatory, mass)
            .map_err(|_| DedonderError::NonPositiveMass)?;
        let one = Gq::one;
        let im = Gq::imag(mass.clone());
        let mut relations = vec![
            vec![Term::new(one(), Slot::Pi(0), None), Term::new(im.clone(), Slot::Psi, None)],
            vec![Term::new(one(), Slot::Psi, Some(0)), Term::new(im, Slot::Lambda, None)],
        ];
        for k in 1..4 {
            relations.push(vec![Term::new(one(), Slot::Psi, Some(k)), Term::new(one(), Slot::Pi(k), None)]);
        }
        let m2 = g(mass * mass);
        let mut div = vec![Term::new(one(), Slot::Pi(0), Some(0)), Term::new(-m2, Slot::Lambda, None)];
        div.extend((1..4).map(|k| Term::new(one(), Slot::Pi(k), Some(k))));
        let names = ansatz.reduced_axis_names().iter().map(|s| s.to_string()).collect();
        Ok(Self::build("printed SE", names, true, relations, div, Some(ansatz)))
    }

    pub fn dim(&self) -> usize {
        self.axis_names.len()
    }

    pub fn num_momenta(&self) -> usize {
        self.dim() + usize::from(self.has_lambda)
    }

    fn momentum_index(&self, slot: Slot) -> Option<usize> {
        match slot {
            Slot::Psi => None,
            Slot::Pi(j) => Some(j),
            Slot::Lambda => Some(self.dim()),
        }
    }

    /// `M⁻¹` where row `e` of `M` holds the momentum coefficients of relation `e`.
    pub fn momentum_solver(&self) -> Result<GqMatrix, DedonderError> {
        let k = self.num_momenta();
        if self.relations.len() != k {
            return Err(DedonderError::DimensionMismatch { expected: k, found: self.relations.len() });
        }
        let mut m = GqMatrix::zeros(k, k);
        for (e, eq) in self.relations.iter().enumerate() {
            for t in &eq.terms {
                if let Some(i) = self.momentum_index(t.slot) {
                    if t.derivative.is_some() {
                        return Err(DedonderError::NotAlgebraic(eq.label.clone()));
                    }
                    m[(e, i)] += &t.coeff;
                }
            }
        }
        m.inverse().ok_or(DedonderError::SingularRelations)
    }

    /// The momenta `(π^0 … π^{d−1}, [λ])` determined by `ψ`, exactly.
    pub fn momenta_exact(&self, psi: &ExpPolyField) -> Result<Vec<ExpPolyField>, DedonderError> {
        let inv = self.momentum_solver()?;
        let rhs: Vec<ExpPolyField> = self
            .relations
            .iter()
            .map(|eq| {
                let mut acc = ExpPolyField::zero(psi.dim());
                for t in eq.terms.iter().filter(|t| t.slot == Slot::Psi) {
                    let v = match t.derivative {
                        Some(a) => psi.partial(a)?,
                        None => psi.clone(),
                    };
                    acc = acc.sub(&v.scale(&t.coeff));
                }
                Ok(acc)
            })
            .collect::<Result<_, DedonderError>>()?;
        Ok((0..self.num_momenta())
            .map(|i| rhs.iter().enumerate().fold(ExpPolyField::zero(psi.dim()), |acc, (e, r)| acc.add(&r.scale(&inv[(i, e)]))))
            .collect())
    }

    fn eval_exact(&self, eq: &Equation, psi: &ExpPolyField, momenta: &[ExpPolyField]) -> Result<ExpPolyField, DedonderError> {
        let mut acc = ExpPolyField::zero(psi.dim());
        for t in &eq.terms {
            let base = match self.momentum_index(t.slot) {
                Some(i) => &momenta[i],
                None => psi,
            };
            let v = match t.derivative {
                Some(a) => base.partial(a)?,
                None => base.clone(),
            };
            acc = acc.add(&v.scale(&t.coeff));
        }
        Ok(acc)
    }

    /// The divergence equation with the momenta eliminated, as an operator on `ψ`.
    pub fn eliminate(&self) -> Result<ConstCoeffOperator, DedonderError> {
        let op = ConstCoeffOperator::extract(self.dim(), |psi| {
            let momenta = self.momenta_exact(psi).map_err(to_oracle)?;
            self.eval_exact(&self.divergence, psi, &momenta).map_err(to_oracle)
        });
        Ok(op?)
    }

    /// Residual of every equation on the exact section built from `ψ` (momenta from the
    /// relations); the relations vanish identically, the divergence gives the eliminated operator.
    pub fn exact_residuals(&self, psi: &ExpPolyField) -> Result<Vec<ExpPolyField>, DedonderError> {
        let momenta = self.momenta_exact(psi)?;
        self.relations
            .iter()
            .chain(std::iter::once(&self.divergence))
            .map(|eq| self.eval_exact(eq, psi, &momenta))
            .collect()
    }

    /// Momenta of a plane-wave `ψ`, as plane-wave sums with exact derivatives.
    pub fn momenta_waves(&self, psi: &PlaneWaveSum) -> Result<Vec<PlaneWaveSum>, DedonderError> {
        if psi.dim() != self.dim() {
            return Err(DedonderError::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        let inv = self.momentum_solver()?;
        let inv: Vec<Vec<C64>> = (0..inv.rows()).map(|i| (0..inv.cols()).map(|j| inv[(i, j)].to_c64()).collect()).collect();
        let rhs_factor = |eq: &Equation, p: &[f64]| -> C64 {
            eq.terms
                .iter()
                .filter(|t| t.slot == Slot::Psi)
                .map(|t| {
                    -t.coeff.to_c64()
                        * match t.derivative {
                            Some(a) => C64::new(0.0, p[a]),
                            None => C64::new(1.0, 0.0),
                        }
                })
                .sum()
        };
        Ok((0..self.num_momenta())
            .map(|i| PlaneWaveSum {
                modes: psi
                    .modes
                    .iter()
                    .map(|(p, a)| {
                        let f: C64 = self.relations.iter().enumerate().map(|(e, eq)| inv[i][e] * rhs_factor(eq, p)).sum();
                        (p.clone(), f * a)
                    })
                    .collect(),
            })
            .collect())
    }

    /// Grid residuals of every equation (labels as displayed) and of the conjugate family
    /// (suffix `*`, conjugated coefficients applied to the barred fields).
    pub fn residuals(&self, fields: &ReducedCovariantField) -> Result<DdwResiduals, DedonderError> {
        let spec = fields.psi.spec.clone();
        if spec.dim() != self.dim() || fields.pi.len() != self.dim() {
            return Err(DedonderError::DimensionMismatch { expected: self.dim(), found: spec.dim() });
        }
        check_grid(&spec)?;
        let inv2h: Vec<f64> = (0..spec.dim()).map(|a| 0.5 / spec.spacing(a)).collect();
        let mut equations = Vec::new();
        for conj in [false, true] {
            let pick = |slot: Slot| -> &GridField {
                match (slot, conj) {
                    (Slot::Psi, false) => &fields.psi,
                    (Slot::Psi, true) => &fields.psibar,
                    (Slot::Pi(j), false) => &fields.pi[j],
                    (Slot::Pi(j), true) => &fields.pibar[j],
                    (Slot::Lambda, false) => &fields.lambda,
                    (Slot::Lambda, true) => &fields.lambdabar,
                }
            };
            for eq in self.relations.iter().chain(std::iter::once(&self.divergence)) {
                let terms: Vec<(C64, &GridField, Option<usize>)> = eq
                    .terms
                    .iter()
                    .map(|t| {
                        let c = t.coeff.to_c64();
                        (if conj { c.conj() } else { c }, pick(t.slot), t.derivative)
                    })
                    .collect();
                let name = format!("{}{}", eq.label, if conj { " *" } else { "" });
                let r = interior_report(&spec, &name, |k, idx| {
                    terms
                        .iter()
                        .map(|(c, f, d)| match d {
                            Some(a) => {
                                c * (f.values[spec.neighbor(k, idx, *a, true)] - f.values[spec.neighbor(k, idx, *a, false)]) * inv2h[*a]
                            }
                            None => c * f.values[k],
                        })
                        .sum()
                });
                equations.push((name, r));
            }
        }
        Ok(DdwResiduals { equations })
    }
}

fn to_oracle(e: DedonderError) -> crate::oracle::OracleError {
    match e {
        DedonderError::Oracle(o) => o,
        other => crate::oracle::OracleError::InsufficientProbes(other.to_string()),
    }
}

/// A reduced section `(ψ, π^j, λ)` and its conjugates on the retained axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedCovariantField {
    pub ansatz: ReductionAnsatz,
    pub psi: GridField,
    pub psibar: GridField,
    pub pi: Vec<GridField>,
    pub pibar: Vec<GridField>,
    pub lambda: GridField,
    pub lambdabar: GridField,
}

impl ReducedCovariantField {
    /// `ψ` from plane waves and the momenta from the relations of `system`, conjugates by
    /// conjugation.
    pub fn from_waves(system: &FirstOrderSystem, ansatz: &ReductionAnsatz, spec: &GridSpec, psi: &PlaneWaveSum) -> Result<Self, DedonderError> {
        if !system.has_lambda {
            return Err(DedonderError::DimensionMismatch { expected: system.dim() + 1, found: system.num_momenta() });
        }
        let mom = system.momenta_waves(psi)?;
        let sample = |w: &PlaneWaveSum, label: String| GridField::from_fn(spec, label, |x| w.eval(x));
        let psi_f = sample(psi, "psi".into());
        let pi: Vec<GridField> = (0..system.dim()).map(|j| sample(&mom[j], format!("pi{j}"))).collect();
        let lambda = sample(&mom[system.dim()], "lambda".into());
        Ok(ReducedCovariantField {
            ansatz: ansatz.clone(),
            psibar: psi_f.conj(),
            pibar: pi.iter().map(GridField::conj).collect(),
            lambdabar: lambda.conj(),
            psi: psi_f,
            pi,
            lambda,
        })
    }
}

fn conj_ansatz(a: &ReductionAnsatz) -> ReductionAnsatz {
    ReductionAnsatz { rate: a.rate.conj(), ..a.clone() }
}

/// The full section: `φ = e^{r x^d} ψ`, `P^{a_j} = e^{r x^d} π^j`, `P^d = r e^{r x^d} λ`, and
/// conjugates with the conjugate profile and rate.
pub fn assemble_reduced(r: &ReducedCovariantField, direction: (f64, f64), points: usize) -> Result<CovariantField, DedonderError> {
    let a = &r.ansatz;
    let ab = conj_ansatz(a);
    let full = full_spec(&r.psi.spec, a, direction, points);
    let rate = a.rate.to_c64();
    let phi = apply_ansatz(&r.psi, a, &full)?;
    let phibar = apply_ansatz(&r.psibar, &ab, &full)?;
    let d = a.dim();
    let mut p = vec![GridField::zeros(&full, ""); d];
    let mut pbar = p.clone();
    for (j, &aj) in a.reduced_axes.iter().enumerate() {
        p[aj] = apply_ansatz(&r.pi[j], a, &full)?;
        pbar[aj] = apply_ansatz(&r.pibar[j], &ab, &full)?;
    }
    p[a.direction_axis] = apply_ansatz(&r.lambda, a, &full)?.scale(rate);
    pbar[a.direction_axis] = apply_ansatz(&r.lambdabar, &ab, &full)?.scale(rate.conj());
    for (mu, (f, fb)) in p.iter_mut().zip(pbar.iter_mut()).enumerate() {
        f.label = format!("P{mu}");
        fb.label = format!("Pbar{mu}");
    }
    CovariantField::new(a.chart, phi, phibar, p, pbar)
}

/// Inverse of [`assemble_reduced`]: divides the profiles (and the rate in the `λ` slot) out.
/// Also returns the largest equivariance defect over all slots.
pub fn extract_reduced(chi: &CovariantField, ansatz: &ReductionAnsatz) -> Result<(ReducedCovariantField, f64), DedonderError> {
    if chi.chart != ansatz.chart {
        return Err(DedonderError::ChartMismatch { field: chi.chart, metric: ansatz.chart });
    }
    let ab = conj_ansatz(ansatz);
    let mut defect = 0.0f64;
    let mut take = |f: &GridField, a: &ReductionAnsatz| -> Result<GridField, DedonderError> {
        let r = reduce_field(f, a)?;
        defect = defect.max(r.defect);
        Ok(r.field)
    };
    let psi = take(&chi.phi, ansatz)?;
    let psibar = take(&chi.phibar, &ab)?;
    let mut pi = Vec::new();
    let mut pibar = Vec::new();
    for &aj in &ansatz.reduced_axes {
        pi.push(take(&chi.p[aj], ansatz)?);
        pibar.push(take(&chi.pbar[aj], &ab)?);
    }
    let rate = ansatz.rate.to_c64();
    let lambda = take(&chi.p[ansatz.direction_axis], ansatz)?.scale(1.0 / rate);
    let lambdabar = take(&chi.pbar[ansatz.direction_axis], &ab)?.scale(1.0 / rate.conj());
    Ok((ReducedCovariantField { ansatz: ansatz.clone(), psi, psibar, pi, pibar, lambda, lambdabar }, defect))
}
