use num_complex::Complex64;
use rayon::prelude::*;

use super::{FieldError, GridField, GridSpec, StencilOperator};
use crate::ansatz::ReductionAnsatz;
use crate::oracle::ConstCoeffOperator;

/// Profiles smaller than this cannot be divided out reliably.
const MIN_PROFILE: f64 = 1e-250;

/// Full-chart grid whose retained axes are `reduced` and whose direction axis is `direction`.
pub fn full_spec(reduced: &GridSpec, ansatz: &ReductionAnsatz, direction: (f64, f64), points: usize) -> GridSpec {
    let names = ansatz.chart.axis_names();
    let d = ansatz.dim();
    let mut spec = GridSpec {
        axis_names: names.iter().map(|s| s.to_string()).collect(),
        extents: vec![(0.0, 1.0); d],
        points: vec![points; d],
        periodic: vec![false; d],
    };
    for (j, &a) in ansatz.reduced_axes.iter().enumerate() {
        spec.extents[a] = reduced.extents[j];
        spec.points[a] = reduced.points[j];
        spec.periodic[a] = reduced.is_periodic(j);
    }
    spec.extents[ansatz.direction_axis] = direction;
    spec
}

/// Default extent along the reduction direction: one period `[0, 2π]` for unit-modulus
/// profiles, `[0, 2]` for real exponentials.
pub fn default_direction_extent(ansatz: &ReductionAnsatz) -> (f64, f64) {
    if ansatz.rate.re == num_traits::Zero::zero() {
        (0.0, std::f64::consts::TAU)
    } else {
        (0.0, 2.0)
    }
}

/// `φ(x) = profile(x^dir) · u(x_retained)`.
pub fn apply_ansatz(u: &GridField, ansatz: &ReductionAnsatz, full: &GridSpec) -> Result<GridField, FieldError> {
    if full.dim() != ansatz.dim() {
        return Err(FieldError::AxisMismatch(format!("full grid has {} axes, chart has {}", full.dim(), ansatz.dim())));
    }
    let expected = full.select_axes(&ansatz.reduced_axes);
    if expected.points != u.spec.points || expected.extents != u.spec.extents {
        return Err(FieldError::AxisMismatch("reduced field grid does not match the retained axes".into()));
    }
    let dir = ansatz.direction_axis;
    let values = (0..full.len())
        .into_par_iter()
        .map_init(
            || (vec![0usize; full.dim()], vec![0usize; ansatz.reduced_axes.len()]),
            |(idx, sub), k| {
                full.unflatten(k, idx);
                for (j, &a) in ansatz.reduced_axes.iter().enumerate() {
                    sub[j] = idx[a];
                }
                ansatz.profile(full.coord(dir, idx[dir])) * u.values[u.spec.flatten(sub)]
            },
        )
        .collect();
    Ok(GridField { spec: full.clone(), values, label: format!("{} [{}]", u.label, ansatz.describe()) })
}

#[derive(Clone, Debug)]
pub struct ReducedField {
    pub field: GridField,
    /// `max_{k,x} |φ(x, s_k)/profile(s_k) − φ(x, s_0)/profile(s_0)|`.
    pub defect: f64,
    /// `defect / max |φ(·, s_0)/profile(s_0)|` (0 when the slice vanishes).
    pub relative_defect: f64,
}

/// Divides the profile out of every slice along the direction axis; returns the slice average
/// and the equivariance defect.
pub fn reduce_field(phi: &GridField, ansatz: &ReductionAnsatz) -> Result<ReducedField, FieldError> {
    let spec = &phi.spec;
    if spec.dim() != ansatz.dim() {
        return Err(FieldError::AxisMismatch(format!("field has {} axes, chart has {}", spec.dim(), ansatz.dim())));
    }
    let dir = ansatz.direction_axis;
    let n = spec.points[dir];
    let profiles: Vec<Complex64> = (0..n).map(|i| ansatz.profile(spec.coord(dir, i))).collect();
    if let Some(i) = profiles.iter().position(|p| p.norm() < MIN_PROFILE || !p.norm().is_finite()) {
        return Err(FieldError::ZeroProfile { coordinate: spec.coord(dir, i) });
    }
    let slices: Vec<GridField> = (0..n)
        .map(|i| {
            let s = phi.restrict_to_slice(dir, i);
            let inv = 1.0 / profiles[i];
            s.scale(inv)
        })
        .collect();
    let sub = spec.drop_axis(dir);
    // drop_axis keeps the retained axes in chart order, which is `reduced_axes` order for
    // every ansatz built by `ReductionAnsatz::standard`.
    let reduced_spec = spec.select_axes(&ansatz.reduced_axes);
    if reduced_spec.points != sub.points {
        return Err(FieldError::AxisMismatch("retained axes are not in chart order".into()));
    }
    let base = &slices[0];
    let mut defect = 0.0f64;
    for s in &slices[1..] {
        for (a, b) in s.values.iter().zip(&base.values) {
            defect = defect.max((a - b).norm());
        }
    }
    let mut avg = vec![Complex64::new(0.0, 0.0); sub.len()];
    for s in &slices {
        for (acc, v) in avg.iter_mut().zip(&s.values) {
            *acc += v;
        }
    }
    for v in &mut avg {
        *v /= n as f64;
    }
    let scale = base.max_abs();
    let relative_defect = if scale > 0.0 { defect / scale } else { defect };
    Ok(ReducedField {
        field: GridField { spec: reduced_spec, values: avg, label: format!("reduced({})", phi.label) },
        defect,
        relative_defect,
    })
}

/// The reduced operator as seen by the grid: every factor of the profile rate `r` coming from a
/// derivative along the direction axis is replaced by its discrete symbol. A first-order term
/// carries `sinh(r h)/h`, the zeroth-order term `2(cosh(r h) − 1)/h²`. With these substitutions the
/// stencil applied to `profile · u` equals `profile ·` (this operator's stencil applied to `u`) exactly.
pub fn discrete_reduced_operator(op: &ConstCoeffOperator, rate: Complex64, h: f64) -> StencilOperator {
    let mut s = StencilOperator::from_exact(op);
    let rh = rate * h;
    let first_factor = (rh.sinh() / h) / rate;
    let zeroth_factor = (2.0 * (rh.cosh() - 1.0) / (h * h)) / (rate * rate);
    for c in &mut s.first {
        *c *= first_factor;
    }
    s.zeroth *= zeroth_factor;
    s
}
