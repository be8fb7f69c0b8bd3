use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fields::{observed_orders, residual, GridSpec};
use crate::geometry::{laplace_beltrami_coeffs, minkowski4};

const X4: [&str; 4] = ["x0", "x1", "x2", "x3"];

fn ratv(v: [(i64, i64); 4]) -> [Rational; 4] {
    v.map(|(n, d)| rat(n, d))
}

fn max_diff(a: &CMat4, b: &CMat4) -> f64 {
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

fn identity() -> CMat4 {
    let mut id = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in id.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    id
}

#[test]
fn anticommutator_tables() {
    for n in [Normalization::Standard, Normalization::Paper] {
        let g = GammaSet::new(n);
        assert!(g.clifford_violations().is_empty(), "{n}");
        assert_eq!(g.anticommutator(1, 1), GqMatrix::identity(4).scale(&Gq::real(-n.factor())));
    }
    // Swapping normalizations breaks the table.
    let mut g = GammaSet::standard();
    g.normalization = Normalization::Paper;
    assert_eq!(g.clifford_violations(), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
}

#[test]
fn standard_entries_are_units() {
    let g = GammaSet::standard();
    let units = [Gq::zero(), Gq::one(), -Gq::one(), Gq::i(), -Gq::i()];
    for mat in &g.gammas {
        for i in 0..4 {
            for j in 0..4 {
                assert!(units.contains(&mat[(i, j)]));
            }
        }
    }
}

#[test]
fn gamma_json_shape() {
    let v: serde_json::Value = serde_json::from_str(&GammaSet::paper().to_json()).unwrap();
    assert_eq!(v["normalization"], "paper");
    let g = v["gammas"].as_array().unwrap();
    assert_eq!(g.len(), 4);
    assert_eq!(g[1][0][3], serde_json::json!([0.5, 0.0]));
    assert_eq!(g[2][0][3], serde_json::json!([0.0, -0.5]));
    for mat in g {
        assert_eq!(mat.as_array().unwrap().len(), 4);
        assert!(mat.as_array().unwrap().iter().all(|r| r.as_array().unwrap().len() == 4));
    }
}

#[test]
fn exponential_at_origin_and_inverse() {
    for n in [Normalization::Standard, Normalization::Paper] {
        let g = GammaSet::new(n);
        assert_eq!(clifford_exponential(0.0, [0.0; 3], 1.3, &g), identity());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let s = rng.gen_range(-2.0..2.0);
            let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let e = clifford_exponential(s, xi, 0.9, &g);
            let inv = clifford_exponential(-s, xi.map(|x| -x), 0.9, &g);
            assert!(max_diff(&cmat_product(&e, &inv), &identity()) < 1e-12);
            let m = clifford_generator(s, xi, 0.9, &g);
            assert!(max_diff(&cmat_product(&e, &m), &cmat_product(&m, &e)) < 1e-12);
        }
    }
}

#[test]
fn exponential_matches_taylor_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [Normalization::Standard, Normalization::Paper] {
        let g = GammaSet::new(n);
        let c = n.square_constant();
        let mut checked = 0;
        while checked < 200 {
            let s: f64 = rng.gen_range(-2.0..2.0);
            let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let m = 1.0;
            let q = m * m * (s * s - xi.iter().map(|x| x * x).sum::<f64>()) * c;
            if q.abs() > 4.0 {
                continue;
            }
            checked += 1;
            let closed = clifford_exponential(s, xi, m, &g);
            let series = clifford_exponential_series(s, xi, m, &g, 20);
            assert!(max_diff(&closed, &series) < 1e-12, "q = {q}");
        }
        // Null argument: q = 0 exactly.
        let xi = [0.6, 0.0, 0.8];
        let closed = clifford_exponential(1.0, xi, 1.0, &g);
        assert!(max_diff(&closed, &clifford_exponential_series(1.0, xi, 1.0, &g, 20)) < 1e-12);
    }
}

#[test]
fn on_shell_plane_wave_certifies() {
    let g = GammaSet::standard();
    let m = int(1);
    let p = ratv([(5, 3), (4, 3), (0, 1), (0, 1)]);
    assert_eq!(minkowski_square(&p), int(1));
    let u = positive_energy_spinor(&p, &m, &g).unwrap();
    let psi = plane_wave_spinor(&u, &p);
    let cert = reduce_to_dirac(&psi, &m, &g, 3).unwrap();
    let c = &cert.certificate;
    assert!(c.verdict, "{}", cert.to_json());
    assert_eq!(c.winner.as_deref(), Some("-m (i G_mu d_mu - m)"));
    assert_eq!(c.scale.as_deref(), Some("-1"));
    assert!(c.residuals.is_empty());
    assert!(!c.candidates[1].matches);
    assert_eq!(cert.square_factor.as_deref(), Some("1"));
    assert_eq!(c.normalization.as_deref(), Some("standard"));
}

#[test]
fn constant_spinor_leaves_mass_term() {
    let g = GammaSet::standard();
    let m = rat(3, 2);
    let psi = [0, 1, 2, 3].map(|i| ExpPolyField::constant(4, Gq::from_int(i + 1)));
    let cert = reduce_to_dirac(&psi, &m, &g, 3).unwrap();
    assert!(!cert.certificate.verdict);
    assert!(cert.certificate.winner.is_some());
    let d = apply_dirac_exact(&psi, &Gq::real(-m.clone()), &g).unwrap();
    for i in 0..4 {
        assert_eq!(d[i], psi[i].scale(&Gq::real(-m.clone())));
    }
    assert_eq!(cert.certificate.residuals.len(), 4);
    // No derivatives, so E factors trivially for this Ψ.
    assert!(cert.factorization.holds_for_psi);
    assert!(!cert.factorization.holds_for_all_psi);
}

#[test]
fn off_slice_obstruction_is_reported() {
    let g = GammaSet::standard();
    let m = int(1);
    let p = ratv([(5, 3), (4, 3), (0, 1), (0, 1)]);
    let psi = plane_wave_spinor(&positive_energy_spinor(&p, &m, &g).unwrap(), &p);
    let cert = reduce_to_dirac(&psi, &m, &g, 3).unwrap();
    let f = &cert.factorization;
    assert!(!f.holds_for_psi && !f.holds_for_all_psi);
    assert!(f.obstruction.iter().all(|t| !t.contains("| 1:")), "obstruction starts at degree 1: {:?}", f.obstruction);
    assert!(!f.psi_defect.is_empty());
    assert!(matches!(cert.clone().require_factorization(), Err(DiracError::NonCommutingRemainder(_))));

    // Independent check from the closed form: A_0 = −∂_s E + i m E G_0 at (s, ξ) = (0, δ e_1)
    // is −m² δ G_0 G_1 + O(δ²).
    let gc = g.to_c64();
    let (delta, h) = (1e-4, 1e-5);
    let xi = [delta, 0.0, 0.0];
    let ds = {
        let a = clifford_exponential(h, xi, 1.0, &g);
        let b = clifford_exponential(-h, xi, 1.0, &g);
        let mut d = [[C64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d[i][j] = (a[i][j] - b[i][j]) / (2.0 * h);
            }
        }
        d
    };
    let e = clifford_exponential(0.0, xi, 1.0, &g);
    let eg0 = cmat_product(&e, &gc[0]);
    let g0g1 = cmat_product(&gc[0], &gc[1]);
    for i in 0..4 {
        for j in 0..4 {
            let a0 = -ds[i][j] + C64::new(0.0, 1.0) * eg0[i][j];
            assert!((a0 / delta + g0g1[i][j]).norm() < 1e-3, "{i},{j}");
        }
    }
    let expected = format!("dx0 | xi1: {}", GqMatrix::identity(4).mul(&g.gammas[0]).mul(&g.gammas[1]).scale(&Gq::from_int(-1)));
    assert!(f.obstruction.contains(&expected), "{:?}", f.obstruction);
}

#[test]
fn normalization_sensitivity() {
    let p = ratv([(5, 3), (4, 3), (0, 1), (0, 1)]);
    let r = compare_normalizations(&p, &int(1), 2).unwrap();
    assert_eq!(r.exact, Some(Normalization::Standard));
    assert!(r.standard.certificate.verdict);
    assert!(!r.paper.certificate.verdict);
    assert_eq!(r.paper.square_factor.as_deref(), Some("1/2"));
    assert_eq!(r.paper.certificate.normalization.as_deref(), Some("paper"));
    // With the paper normalization, the reduced operator annihilates u(p) e^{−ip·x} when p² = 2m².
    let g = GammaSet::paper();
    let q = ratv([(3, 2), (1, 2), (0, 1), (0, 1)]);
    assert_eq!(minkowski_square(&q), int(2));
    let psi = plane_wave_spinor(&positive_energy_spinor(&q, &int(1), &g).unwrap(), &q);
    assert!(reduce_to_dirac(&psi, &int(1), &g, 1).unwrap().certificate.verdict);
}

#[test]
fn dirac_square_factors() {
    assert_eq!(dirac_square_factor(&GammaSet::standard()).unwrap(), Some(Gq::one()));
    assert_eq!(dirac_square_factor(&GammaSet::paper()).unwrap(), Some(Gq::real(rat(1, 2))));
}

#[test]
fn certificate_json_has_normalization_and_factorization() {
    let g = GammaSet::standard();
    let psi = [0, 1, 2, 3].map(|_| ExpPolyField::zero(4));
    let v: serde_json::Value = serde_json::from_str(&reduce_to_dirac(&psi, &int(1), &g, 2).unwrap().to_json()).unwrap();
    for key in ["metric_convention", "winner", "verdict", "candidates", "normalization", "factorization", "square_factor"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["verdict"], true);
}

#[test]
fn wrong_dimension_is_rejected() {
    let psi = [0, 1, 2, 3].map(|_| ExpPolyField::zero(5));
    assert!(matches!(
        reduce_to_dirac(&psi, &int(1), &GammaSet::standard(), 2),
        Err(DiracError::DimensionMismatch { found: 5 })
    ));
}

fn sampled(spec: &GridSpec, u: &[Gq; 4], p: &[f64; 4]) -> SpinorField {
    let u = u.clone().map(|c| c.to_c64());
    SpinorField::from_fn(spec, |x| {
        let phase = p[0] * x[0] - p[1] * x[1] - p[2] * x[2] - p[3] * x[3];
        let e = C64::new(0.0, -phase).exp();
        u.map(|c| c * e)
    })
    .unwrap()
}

#[test]
fn grid_residual_is_second_order() {
    let g = GammaSet::standard();
    let (m, p) = (rat(1, 5), ratv([(1, 1), (2, 5), (2, 5), (4, 5)]));
    assert_eq!(minkowski_square(&p), &m * &m);
    let u = positive_energy_spinor(&p, &m, &g).unwrap();
    let pf = p.clone().map(|c| crate::scalar::rat_to_f64(&c));
    let coarse = GridSpec::uniform(&X4, (0.0, 1.0), 5).unwrap();
    let mut errors = Vec::new();
    let mut spacings = Vec::new();
    for n in [5, 9, 17] {
        let spec = GridSpec::uniform(&X4, (0.0, 1.0), n).unwrap();
        let r = dirac_residual(&sampled(&spec, &u, &pf), 0.2, &g).unwrap();
        let e = r.components.iter().map(|c| c.field.max_on_interior_of(&coarse).unwrap()).fold(0.0, f64::max);
        errors.push(e);
        spacings.push(spec.spacing(0));
    }
    for o in observed_orders(&spacings, &errors) {
        assert!((1.9..=2.1).contains(&o), "orders {errors:?}");
    }

    let spec = GridSpec::uniform(&X4, (0.0, 1.0), 5).unwrap();
    let zero = dirac_residual(&SpinorField::zeros(&spec).unwrap(), 0.2, &g).unwrap();
    assert_eq!(zero.norms().max, 0.0);
    let small = GridSpec::uniform(&X4, (0.0, 1.0), 3).unwrap();
    assert!(matches!(
        dirac_residual(&SpinorField::zeros(&small).unwrap(), 0.2, &g),
        Err(DiracError::Field(FieldError::GridTooSmall { .. }))
    ));
}

#[test]
fn dirac_squared_matches_scalar_residual() {
    let g = GammaSet::standard();
    let m = 0.7;
    let ks = [[0.9, -0.4, 0.3, 0.5], [0.2, 0.8, -0.6, 0.1], [-0.5, 0.3, 0.7, -0.2], [0.4, 0.1, 0.2, 0.9]];
    let field = |spec: &GridSpec| {
        SpinorField::from_fn(spec, |x| {
            [0, 1, 2, 3].map(|i| C64::new(0.0, (0..4).map(|a| ks[i][a] * x[a]).sum::<f64>()).exp())
        })
        .unwrap()
    };
    let coeffs = laplace_beltrami_coeffs(&minkowski4()).unwrap();
    let coarse = GridSpec::uniform(&X4, (0.0, 1.0), 5).unwrap();
    let mut errors = Vec::new();
    let mut spacings = Vec::new();
    for n in [5, 9, 17] {
        let spec = GridSpec::uniform(&X4, (0.0, 1.0), n).unwrap();
        let psi = field(&spec);
        let plus = apply_dirac_grid(&psi, C64::new(m, 0.0), &g).unwrap().field().unwrap();
        let sq = dirac_residual(&plus, m, &g).unwrap();
        let mut err = 0.0f64;
        for i in 0..4 {
            let kg = residual(&psi.components[i], &coeffs, C64::new(m * m, 0.0)).unwrap();
            for k in 0..coarse.len() {
                let mut idx = vec![0; 4];
                coarse.unflatten(k, &mut idx);
                if !coarse.is_interior(&idx) {
                    continue;
                }
                let x = coarse.node(k);
                let a = sq.components[i].field.value_at(&x).unwrap();
                let b = kg.field.value_at(&x).unwrap();
                err = err.max((a + b).norm());
            }
        }
        errors.push(err);
        spacings.push(spec.spacing(0));
    }
    assert!(errors[2] < 1e-2, "{errors:?}");
    for o in observed_orders(&spacings, &errors)[1..].iter() {
        assert!((1.9..=2.1).contains(o), "{errors:?}");
    }
}
