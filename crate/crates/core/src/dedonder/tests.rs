use num_traits::One;

use super::reduced::*;
use super::variation::directional_derivative;
use super::*;
use crate::ansatz::{Orientation, ReductionAnsatz, ReductionKind};
use crate::fields::observed_orders;
use crate::geometry::{laplace_beltrami_coeffs, lightcone5, minkowski5, LightconeConvention};
use crate::oracle::{reduced_operator, ConstCoeffOperator, ExpPolyField};
use crate::scalar::{int, rat, Gq};

const C5: [&str; 5] = ["x0", "x1", "x2", "x3", "x4"];

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn cart(n: usize) -> GridSpec {
    GridSpec::uniform(&C5, (0.0, 1.0), n).unwrap()
}

fn lc_spec(n: usize) -> GridSpec {
    GridSpec::uniform(&["t", "x1", "x2", "x3", "s"], (0.0, 1.0), n).unwrap()
}

fn null_wave(metric: &Metric) -> PlaneWaveSum {
    PlaneWaveSum::single(default_null_momentum(metric), C64::new(0.8, 0.3))
}

#[test]
fn null_momentum_is_null() {
    for m in [minkowski5(), lightcone5(LightconeConvention::Prose), lightcone5(LightconeConvention::Eq6Exact)] {
        let p = default_null_momentum(&m);
        let g = m.inverse().to_f64();
        let s: f64 = (0..5).flat_map(|a| (0..5).map(move |b| (a, b))).map(|(a, b)| g[a][b] * p[a] * p[b]).sum();
        assert!(s.abs() < 1e-15, "{s}");
    }
    let p = default_null_momentum(&lightcone5(LightconeConvention::Prose));
    assert!((p[0] - 0.2).abs() < 1e-15);
}

#[test]
fn hamiltonian_values() {
    let spec = cart(4);
    let m = minkowski5();
    let mut chi = CovariantField::zeros(Chart::Cartesian5d, &spec);
    assert_eq!(hamiltonian_density(&chi, &m).unwrap().max_abs(), 0.0);
    chi.p[0] = GridField::from_fn(&spec, "P0", |_| c(1.0));
    chi.pbar[0] = chi.p[0].clone();
    assert!(hamiltonian_density(&chi, &m).unwrap().values.iter().all(|v| *v == c(1.0)));
    assert!(matches!(
        hamiltonian_density(&chi, &lightcone5(LightconeConvention::Prose)),
        Err(DedonderError::ChartMismatch { .. })
    ));
    // P^t = P^s = 1: H = η_ts + η_st, i.e. 2 (prose) or 1 (eq6-exact).
    let spec = lc_spec(4);
    for (conv, expect) in [(LightconeConvention::Prose, 2.0), (LightconeConvention::Eq6Exact, 1.0)] {
        let mut chi = CovariantField::zeros(Chart::Lightcone5d, &spec);
        for a in [0, 4] {
            chi.p[a] = GridField::from_fn(&spec, "one", |_| c(1.0));
            chi.pbar[a] = chi.p[a].clone();
        }
        let h = hamiltonian_density(&chi, &lightcone5(conv)).unwrap();
        assert!(h.values.iter().all(|v| *v == c(expect)));
    }
}

#[test]
fn hamiltonian_real_on_physical_sections() {
    let spec = cart(4);
    let chi = CovariantField::random_smooth(Chart::Cartesian5d, &spec, 3, 11).unwrap();
    assert!(chi.is_physical(0.0));
    let h = hamiltonian_density(&chi, &minkowski5()).unwrap();
    assert!(h.values.iter().all(|v| v.im.abs() <= 1e-12 * (1.0 + v.re.abs())));
    let s = action_complex(&chi, &minkowski5()).unwrap();
    assert!(s.im.abs() < 1e-12 * (1.0 + s.re.abs()));
}

#[test]
fn trivial_actions() {
    let m = minkowski5();
    let spec = cart(5);
    assert_eq!(action(&CovariantField::zeros(Chart::Cartesian5d, &spec), &m).unwrap(), 0.0);
    let mut chi = CovariantField::zeros(Chart::Cartesian5d, &spec);
    chi.phi = GridField::from_fn(&spec, "c", |_| C64::new(0.3, -2.0));
    chi.phibar = chi.phi.conj();
    assert_eq!(action(&chi, &m).unwrap(), 0.0);
    assert!(matches!(action(&CovariantField::zeros(Chart::Cartesian5d, &cart(3)), &m), Err(DedonderError::Field(FieldError::GridTooSmall { .. }))));
}

/// `∫ e^{i k·x}` over the box `Π [lo_a, hi_a]`.
fn box_integral(k: &[f64], lo: &[f64], hi: &[f64]) -> C64 {
    k.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&ka, (&l, &h))| {
            if ka.abs() < 1e-14 {
                c(h - l)
            } else {
                (C64::new(0.0, ka * h).exp() - C64::new(0.0, ka * l).exp()) / C64::new(0.0, ka)
            }
        })
        .product()
}

#[test]
fn action_matches_closed_form() {
    // φ = a e^{ip·x} + b e^{iq·x} with null p, q and on-shell momenta: the integrand reduces to
    // η^{μν} ∂_μφ̄ ∂_νφ = 2 Re(ā b η(p, q) e^{i(q−p)·x}). Nodes sit at cell centers of [0,1]^5
    // plus one ghost layer, so the interior cells tile the unit box at every level.
    let m = minkowski5();
    let p = vec![0.5, 0.3, 0.4, 0.0, 0.0];
    let q = vec![0.6, 0.0, 0.0, 0.6, 0.0];
    let (a, b) = (C64::new(0.7, 0.2), C64::new(-0.4, 0.9));
    let waves = PlaneWaveSum::new(vec![(p.clone(), a), (q.clone(), b)]).unwrap();
    let eta_pq = p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3] - p[4] * q[4];
    let k: Vec<f64> = q.iter().zip(&p).map(|(x, y)| x - y).collect();
    let exact = 2.0 * (a.conj() * b * eta_pq * box_integral(&k, &[0.0; 5], &[1.0; 5])).re;
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for cells in [4, 6, 8] {
        let h = 1.0 / cells as f64;
        let spec = GridSpec::uniform(&C5, (-h / 2.0, 1.0 + h / 2.0), cells + 2).unwrap();
        let chi = CovariantField::from_waves(&m, &spec, &waves).unwrap();
        errs.push((action(&chi, &m).unwrap() - exact).abs());
        hs.push(h);
    }
    let orders = observed_orders(&hs, &errs);
    assert!(orders.iter().all(|o| (1.9..2.1).contains(o)), "{orders:?} {errs:?}");
}

#[test]
fn integrand_equals_pullback_of_theta_h() {
    let m = minkowski5();
    let eta = m.components().to_f64();
    let spec = cart(5);
    let integrand = Integrand::new(&m, &spec);
    for seed in 0..3 {
        let chi = CovariantField::random_smooth(Chart::Cartesian5d, &spec, 2, seed).unwrap();
        let slots = chi.slots();
        let mut idx = vec![0; 5];
        for k in [spec.flatten(&[1, 1, 1, 1, 1]), spec.flatten(&[2, 3, 1, 2, 3]), spec.flatten(&[3, 2, 2, 1, 2])] {
            spec.unflatten(k, &mut idx);
            let d = |f: &GridField, a: usize| {
                (f.values[spec.neighbor(k, &idx, a, true)] - f.values[spec.neighbor(k, &idx, a, false)]) / (2.0 * spec.spacing(a))
            };
            let dphi: Vec<C64> = (0..5).map(|a| d(&chi.phi, a)).collect();
            let dphibar: Vec<C64> = (0..5).map(|a| d(&chi.phibar, a)).collect();
            let p: Vec<C64> = chi.p.iter().map(|f| f.values[k]).collect();
            let pbar: Vec<C64> = chi.pbar.iter().map(|f| f.values[k]).collect();
            let direct = pullback_theta_h(&eta, &p, &pbar, &dphi, &dphibar);
            let built = integrand.at(&spec, k, &idx, |s, j| slots[s].values[j]);
            assert!((direct - built).norm() < 1e-13 * (1.0 + direct.norm()));
        }
    }
}

#[test]
fn ddw_trivial_and_linear() {
    let m = minkowski5();
    let spec = cart(5);
    let zero = CovariantField::zeros(Chart::Cartesian5d, &spec);
    let r = ddw_residuals(&zero, &m).unwrap();
    assert_eq!(r.equations.len(), 12);
    assert_eq!(r.max(), 0.0);
    let chi = CovariantField::from_waves(&m, &spec, &null_wave(&m)).unwrap();
    let mut bumped = chi.clone();
    let eps = 1e-3;
    bumped.p[0] = chi.p[0].map("P0", |v| v + eps);
    let a = ddw_residuals(&chi, &m).unwrap();
    let b = ddw_residuals(&bumped, &m).unwrap();
    let (ra, rb) = (&a.get("grad[x0]").unwrap().field, &b.get("grad[x0]").unwrap().field);
    let mut idx = vec![0; 5];
    for k in 0..spec.len() {
        spec.unflatten(k, &mut idx);
        if spec.is_interior(&idx) {
            assert!(((ra.values[k] - rb.values[k]).norm() - eps).abs() < 1e-15);
        }
    }
}

fn common_node_orders(levels: &[usize], make: impl Fn(usize) -> DdwResiduals) -> Vec<f64> {
    let coarse = cart(levels[0]);
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for &n in levels {
        let r = make(n);
        let e = r.equations.iter().map(|(_, rep)| rep.field.max_on_interior_of(&coarse).unwrap()).fold(0.0, f64::max);
        errs.push(e);
        hs.push(1.0 / (n - 1) as f64);
    }
    observed_orders(&hs, &errs)
}

#[test]
fn ddw_residuals_converge_for_plane_waves() {
    for m in [minkowski5(), lightcone5(LightconeConvention::Prose), lightcone5(LightconeConvention::Eq6Exact)] {
        let w = null_wave(&m);
        let orders = common_node_orders(&[5, 9, 13], |n| {
            let spec = if m.chart() == Chart::Cartesian5d { cart(n) } else { lc_spec(n) };
            ddw_residuals(&CovariantField::from_waves(&m, &spec, &w).unwrap(), &m).unwrap()
        });
        assert!(orders.iter().all(|o| (1.9..2.1).contains(o)), "{}: {orders:?}", m.convention_label());
    }
}

#[test]
fn stationarity_on_shell_and_contrast() {
    let m = minkowski5();
    let w = null_wave(&m);
    let on = CovariantField::from_waves(&m, &cart(9), &w).unwrap();
    let g_on = schwinger_weiss_gradient(&on, &m, 8, 5).unwrap();
    assert!(g_on.max <= 1e-6, "{}", g_on.max);
    let off = CovariantField::random_smooth(Chart::Cartesian5d, &cart(9), 3, 5).unwrap();
    let g_off = schwinger_weiss_gradient(&off, &m, 8, 5).unwrap();
    assert!(g_off.max >= 1e3 * g_on.max, "{} vs {}", g_off.max, g_on.max);
    let zero = VariationProbe::zero(5, &cart(9));
    assert_eq!(directional_derivative(&on, &m, &zero, 1e-6).unwrap(), 0.0);
}

#[test]
fn stationarity_gradient_refines_at_second_order() {
    let m = minkowski5();
    let w = null_wave(&m);
    let mut hs = Vec::new();
    let mut gs = Vec::new();
    for n in [7, 10, 13] {
        let chi = CovariantField::from_waves(&m, &cart(n), &w).unwrap();
        gs.push(schwinger_weiss_gradient(&chi, &m, 4, 9).unwrap().max);
        hs.push(1.0 / (n - 1) as f64);
    }
    let orders = observed_orders(&hs, &gs);
    assert!(orders.iter().all(|o| *o >= 1.9), "{orders:?} {gs:?}");
}

#[test]
fn elimination_of_full_system_gives_the_wave_operator() {
    for m in [minkowski5(), lightcone5(LightconeConvention::Prose), lightcone5(LightconeConvention::Eq6Exact)] {
        let op = FirstOrderSystem::full(&m).eliminate().unwrap();
        let wave = ConstCoeffOperator::second_order(laplace_beltrami_coeffs(&m).unwrap().to_gq());
        assert_eq!(op, wave);
    }
}

#[test]
fn elimination_of_derived_systems_matches_certified_operators() {
    let mass = rat(3, 2);
    for kind in [ReductionKind::KleinGordon, ReductionKind::Schroedinger] {
        for orient in Orientation::ALL {
            let a = ReductionAnsatz::standard(kind, orient, &mass).unwrap();
            let metrics = match kind {
                ReductionKind::KleinGordon => vec![minkowski5()],
                ReductionKind::Schroedinger => LightconeConvention::ALL.iter().map(|c| lightcone5(*c)).collect(),
            };
            for m in metrics {
                let sys = FirstOrderSystem::derived(&m, &a).unwrap();
                assert_eq!(sys.eliminate().unwrap(), reduced_operator(&m, &a).unwrap(), "{}", sys.name);
            }
        }
    }
}

#[test]
fn printed_systems_eliminate_to_the_other_orientation() {
    let mass = rat(1, 1);
    let kg = FirstOrderSystem::printed_kg(&mass).unwrap().eliminate().unwrap();
    let m5 = minkowski5();
    let paper = ReductionAnsatz::standard(ReductionKind::KleinGordon, Orientation::Paper, &mass).unwrap();
    let osc = ReductionAnsatz::standard(ReductionKind::KleinGordon, Orientation::Oscillatory, &mass).unwrap();
    assert_eq!(kg, reduced_operator(&m5, &osc).unwrap());
    assert!(kg.proportionality(&reduced_operator(&m5, &paper).unwrap()).is_none());
    assert_eq!(kg.zeroth, Gq::one());

    let se = FirstOrderSystem::printed_se(&mass).unwrap().eliminate().unwrap();
    let prose = lightcone5(LightconeConvention::Prose);
    let se_paper = ReductionAnsatz::standard(ReductionKind::Schroedinger, Orientation::Paper, &mass).unwrap();
    let se_osc = ReductionAnsatz::standard(ReductionKind::Schroedinger, Orientation::Oscillatory, &mass).unwrap();
    // 2im ∂_t ψ = −Δψ, i.e. −2im ∂_t − Δ applied to ψ vanishes.
    assert_eq!(se.first[0], Gq::imag(int(-2)));
    assert_eq!(se, reduced_operator(&prose, &se_paper).unwrap());
    assert!(se.proportionality(&reduced_operator(&prose, &se_osc).unwrap()).is_none());
}

#[test]
fn constant_psi_satisfies_printed_se_exactly() {
    let mass = rat(2, 1);
    let sys = FirstOrderSystem::printed_se(&mass).unwrap();
    let psi = ExpPolyField::constant(4, Gq::new(rat(1, 3), rat(-1, 2)));
    let mom = sys.momenta_exact(&psi).unwrap();
    assert_eq!(mom[0], psi.scale(&Gq::imag(int(-2))));
    assert!(mom[1].is_zero() && mom[4].is_zero());
    assert!(sys.exact_residuals(&psi).unwrap().iter().all(ExpPolyField::is_zero));
}

fn reduced_spec(names: &[&str], n: usize) -> GridSpec {
    GridSpec::uniform(names, (0.0, 1.0), n).unwrap()
}

#[test]
fn assemble_extract_round_trip_and_lambda_slot() {
    let mass = rat(1, 1);
    let sys = FirstOrderSystem::printed_kg(&mass).unwrap();
    let a = sys.ansatz.clone().unwrap();
    let spec = reduced_spec(&C5[..4], 4);
    let psi = PlaneWaveSum::single(vec![0.75, 1.25, 0.0, 0.0], c(1.0));
    let r = ReducedCovariantField::from_waves(&sys, &a, &spec, &psi).unwrap();
    let chi = assemble_reduced(&r, (0.0, 1.0), 4).unwrap();
    let (back, defect) = extract_reduced(&chi, &a).unwrap();
    assert!(defect < 1e-12);
    for (x, y) in back.lambda.values.iter().zip(&r.lambda.values) {
        assert!((x - y).norm() < 1e-12);
    }
    for (x, y) in back.pi[2].values.iter().zip(&r.pi[2].values) {
        assert!((x - y).norm() < 1e-12);
    }
    let mut unit = r.clone();
    unit.lambda = GridField::from_fn(&spec, "1", |_| c(1.0));
    let chi = assemble_reduced(&unit, (0.0, 1.0), 4).unwrap();
    assert_eq!(chi.p[4].restrict_to_slice(4, 0).values[0], c(-1.0));
}

#[test]
fn kg_reduced_section_solves_full_system() {
    // m = 1, profile e^{−x4}: ψ = e^{i(0.75 x0 + 1.25 x1)} solves ∂0² − Δ − 1 = 0.
    let mass = rat(1, 1);
    let m5 = minkowski5();
    let paper = ReductionAnsatz::standard(ReductionKind::KleinGordon, Orientation::Paper, &mass).unwrap();
    let derived = FirstOrderSystem::derived(&m5, &paper).unwrap();
    let printed = FirstOrderSystem::printed_kg(&mass).unwrap();
    let psi = PlaneWaveSum::single(vec![0.75, 1.25, 0.0, 0.0], c(1.0));
    for sys in [&derived, &printed] {
        let orders = common_node_orders(&[5, 9, 13], |n| {
            let r = ReducedCovariantField::from_waves(sys, &paper, &reduced_spec(&C5[..4], n), &psi).unwrap();
            ddw_residuals(&assemble_reduced(&r, (0.0, 1.0), n).unwrap(), &m5).unwrap()
        });
        assert!(orders.iter().all(|o| (1.9..2.1).contains(o)), "{}: {orders:?}", sys.name);
    }
    // The claimed consequence (standard KG) does not give a full solution under this profile.
    let std_psi = PlaneWaveSum::single(vec![(1.0f64 + 1.5625).sqrt(), 1.25, 0.0, 0.0], c(1.0));
    let fine = |n: usize| {
        let r = ReducedCovariantField::from_waves(&printed, &paper, &reduced_spec(&C5[..4], n), &std_psi).unwrap();
        ddw_residuals(&assemble_reduced(&r, (0.0, 1.0), n).unwrap(), &m5).unwrap().get("div").unwrap().max
    };
    assert!(fine(9) > 0.5 && fine(13) > 0.5);
}

#[test]
fn se_printed_shell_and_residual_families() {
    let mass = rat(1, 1);
    let sys = FirstOrderSystem::printed_se(&mass).unwrap();
    let a = sys.ansatz.clone().unwrap();
    // 2im ∂_t ψ = −Δψ on e^{i(p_t t + k·x)} ⇔ p_t = −|k|²/(2m).
    let k = [0.8, -0.4, 0.2];
    let pt = -(k.iter().map(|v| v * v).sum::<f64>()) / 2.0;
    let psi = PlaneWaveSum::single(vec![pt, k[0], k[1], k[2]], C64::new(0.6, -0.2));
    let names = ["t", "x1", "x2", "x3"];
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    let coarse = reduced_spec(&names, 5);
    for n in [5, 9, 13] {
        let r = ReducedCovariantField::from_waves(&sys, &a, &reduced_spec(&names, n), &psi).unwrap();
        let res = sys.residuals(&r).unwrap();
        assert_eq!(res.equations.len(), 12);
        for i in 0..6 {
            let (p, q) = (&res.equations[i].1.field, &res.equations[i + 6].1.field);
            assert!(p.values.iter().zip(&q.values).all(|(x, y)| (x.conj() - y).norm() < 1e-15));
        }
        errs.push(res.equations.iter().map(|(_, r)| r.field.max_on_interior_of(&coarse).unwrap()).fold(0.0, f64::max));
        hs.push(1.0 / (n - 1) as f64);
    }
    let orders = observed_orders(&hs, &errs);
    assert!(orders.iter().all(|o| (1.9..2.1).contains(o)), "{orders:?}");
}

#[test]
fn se_assembled_section_solves_full_lightcone_system() {
    let mass = rat(1, 1);
    let prose = lightcone5(LightconeConvention::Prose);
    let osc = ReductionAnsatz::standard(ReductionKind::Schroedinger, Orientation::Oscillatory, &mass).unwrap();
    let sys = FirstOrderSystem::derived(&prose, &osc).unwrap();
    // The derived operator for e^{ims} under prose is −2im ∂_t + Δ: p_t = +|k|²/(2m).
    let k = [0.8, -0.4, 0.2];
    let pt = k.iter().map(|v| v * v).sum::<f64>() / 2.0;
    let psi = PlaneWaveSum::single(vec![pt, k[0], k[1], k[2]], c(1.0));
    let names = ["t", "x1", "x2", "x3"];
    let coarse = lc_spec(5);
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for n in [5, 9, 13] {
        let r = ReducedCovariantField::from_waves(&sys, &osc, &reduced_spec(&names, n), &psi).unwrap();
        let chi = assemble_reduced(&r, (0.0, 1.0), n).unwrap();
        let res = ddw_residuals(&chi, &prose).unwrap();
        errs.push(res.equations.iter().map(|(_, r)| r.field.max_on_interior_of(&coarse).unwrap()).fold(0.0, f64::max));
        hs.push(1.0 / (n - 1) as f64);
    }
    let orders = observed_orders(&hs, &errs);
    assert!(orders.iter().all(|o| (1.9..2.1).contains(o)), "{orders:?}");
}

#[test]
fn report_json_shape() {
    let m = minkowski5();
    let spec = cart(5);
    let r = ddw_residuals(&CovariantField::zeros(Chart::Cartesian5d, &spec), &m).unwrap();
    let mut rep = DedonderReport::new(&m, &spec, r.norms());
    rep.gradient_max = Some(0.0);
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    for key in ["convention", "chart", "resolution", "per_equation_norms", "gradient_max", "contrast_ratio"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["per_equation_norms"][5]["equation"], "div");
}
