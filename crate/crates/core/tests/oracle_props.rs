use num_complex::Complex64;
use proptest::prelude::*;
use unfold_core::geometry::{laplace_beltrami_coeffs, lightcone5, minkowski5, LightconeConvention};
use unfold_core::oracle::{apply_operator, certify_reduction, kg_candidates, se_candidates, Poly};
use unfold_core::scalar::rat;
use unfold_core::{ExpPolyField, Gq, Orientation, ReductionAnsatz, ReductionKind};

const DIM: usize = 5;

fn gq() -> impl Strategy<Value = Gq> {
    ((-6i64..=6, 1i64..=4), (-6i64..=6, 1i64..=4)).prop_map(|((a, b), (c, d))| Gq::new(rat(a, b), rat(c, d)))
}

fn small_rate() -> impl Strategy<Value = Vec<Gq>> {
    prop::collection::vec(
        prop_oneof![Just(Gq::from_int(0)), Just(Gq::imag(rat(1, 2))), Just(Gq::real(rat(-1, 3))), Just(Gq::new(rat(1, 4), rat(-1, 1)))],
        DIM,
    )
}

/// `Σ c · x^e · exp(r · x)` with up to three terms of degree ≤ 2 per axis.
fn field() -> impl Strategy<Value = ExpPolyField> {
    prop::collection::vec((gq(), prop::collection::vec(0u32..=2, DIM), small_rate()), 1..=3).prop_map(|terms| {
        terms.into_iter().fold(ExpPolyField::zero(DIM), |acc, (c, e, r)| acc.add(&ExpPolyField::term(Poly::monomial(DIM, e, c), r)))
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.8f64..0.8, DIM)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mixed_partials_commute(f in field(), a in 0..DIM, b in 0..DIM) {
        prop_assert_eq!(f.partial(a).unwrap().partial(b).unwrap(), f.partial(b).unwrap().partial(a).unwrap());
    }

    #[test]
    fn operator_is_linear(f in field(), g in field(), a in gq(), b in gq(), which in 0usize..3) {
        let metric = [minkowski5(), lightcone5(LightconeConvention::Prose), lightcone5(LightconeConvention::Eq6Exact)][which].clone();
        let c = laplace_beltrami_coeffs(&metric).unwrap();
        let lhs = apply_operator(&c, &f.scale(&a).add(&g.scale(&b))).unwrap();
        let rhs = apply_operator(&c, &f).unwrap().scale(&a).add(&apply_operator(&c, &g).unwrap().scale(&b));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn leibniz_rule(f in field(), g in field(), a in 0..DIM) {
        let lhs = f.mul(&g).partial(a).unwrap();
        let rhs = f.partial(a).unwrap().mul(&g).add(&f.mul(&g.partial(a).unwrap()));
        prop_assert_eq!(lhs, rhs);
    }

    /// Exact derivative against a central difference of the evaluated field.
    #[test]
    fn partial_matches_finite_difference(f in field(), a in 0..DIM, x in point()) {
        let h = 1e-5;
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[a] += h;
        xm[a] -= h;
        let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
        let exact: Complex64 = f.partial(a).unwrap().eval(&x);
        prop_assert!((fd - exact).norm() <= 1e-6 * (1.0 + exact.norm()), "{} vs {}", fd, exact);
    }
}

#[test]
fn certificates_are_reproducible() {
    let m = rat(3, 2);
    for orient in [Orientation::Paper, Orientation::Oscillatory] {
        let kg = ReductionAnsatz::standard(ReductionKind::KleinGordon, orient, &m).unwrap();
        let a = certify_reduction(&minkowski5(), &kg, &kg_candidates(&m)).unwrap();
        let b = certify_reduction(&minkowski5(), &kg, &kg_candidates(&m)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        for conv in [LightconeConvention::Prose, LightconeConvention::Eq6Exact] {
            let se = ReductionAnsatz::standard(ReductionKind::Schroedinger, orient, &m).unwrap();
            let a = certify_reduction(&lightcone5(conv), &se, &se_candidates(&m)).unwrap();
            let b = certify_reduction(&lightcone5(conv), &se, &se_candidates(&m)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.metric_convention, lightcone5(conv).convention_label());
        }
    }
}
