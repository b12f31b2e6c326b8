use proptest::prelude::*;

use betastein::beta::{c_constant, theorem_mt_bound, BetaSteinContext};
use betastein::framework::{compute_eta, derivative_lift, DistributionSpec};
use betastein::polya::{check_regressions, joint_prob, pmf, simulate_pair, PolyaModel};
use betastein::BetaParams;

fn shape() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0), Just(3.7), Just(5.0), 0.05f64..12.0]
}

fn arrangements() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    proptest::collection::vec(any::<bool>(), 1..=10)
        .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_is_normalized(a in shape(), b in shape(), n in 1usize..400) {
        let model = PolyaModel::new(a, b, n).unwrap();
        let probs = pmf(&model).probs();
        prop_assert_eq!(probs.len(), n + 1);
        prop_assert!(probs.iter().all(|&p| p >= 0.0));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn draws_are_exchangeable(a in shape(), b in shape(), (bits, shuffled) in arrangements()) {
        let model = PolyaModel::new(a, b, bits.len()).unwrap();
        let p = joint_prob(&model, &bits).unwrap();
        let q = joint_prob(&model, &shuffled).unwrap();
        prop_assert!((p - q).abs() <= 1e-14 * p.max(q));
    }

    #[test]
    fn regression_identities_hold(a in shape(), b in shape(), n in 2usize..300) {
        let check = check_regressions(&PolyaModel::new(a, b, n).unwrap());
        prop_assert!(check.passes(1e-13), "{check:?}");
    }

    #[test]
    fn steps_are_at_most_one_over_n(a in shape(), b in shape(), n in 1usize..60, seed in any::<u64>()) {
        let model = PolyaModel::new(a, b, n).unwrap();
        for s in simulate_pair(&model, 200, seed).unwrap() {
            prop_assert!((s.w - s.w_prime).abs() <= 1.0 / n as f64 + 1e-15);
        }
    }

    #[test]
    fn bound_is_monotone(a in shape(), b in shape(), n in 2u64..10_000, n1 in 0.01f64..10.0, n2 in 0.01f64..10.0) {
        let p = BetaParams::new(a, b).unwrap();
        let base = theorem_mt_bound(n, p, n1, n2);
        prop_assert!(base > 0.0);
        prop_assert!(theorem_mt_bound(n, p, 2.0 * n1, n2) > base);
        prop_assert!(theorem_mt_bound(n, p, n1, 2.0 * n2) > base);
        prop_assert!(theorem_mt_bound(n + 1, p, n1, n2) < base);
    }

    #[test]
    fn lipschitz_constant_is_symmetric_and_positive(a in shape(), b in shape()) {
        let c = c_constant(BetaParams::new(a, b).unwrap());
        let d = c_constant(BetaParams::new(b, a).unwrap());
        prop_assert!(c > 0.0 && c.is_finite());
        prop_assert!((c - d).abs() <= 1e-12 * c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn beta_eta_is_x_one_minus_x(
        a in prop::sample::select(vec![0.3, 1.0, 2.5, 7.0]),
        b in prop::sample::select(vec![0.3, 1.0, 2.5, 7.0]),
        x in 0.01f64..0.99,
    ) {
        let spec = DistributionSpec::beta(BetaParams::new(a, b).unwrap()).unwrap();
        let eta = compute_eta(&spec, x).unwrap();
        prop_assert!((eta - x * (1.0 - x)).abs() <= 1e-9);
    }

    #[test]
    fn lift_of_beta_is_shifted_beta(a in 0.2f64..6.0, b in 0.2f64..6.0, x in 0.02f64..0.98) {
        let p = BetaParams::new(a, b).unwrap();
        let lifted = BetaSteinContext::new(p).unwrap().lifted().unwrap();
        prop_assert!((lifted.params().a() - (a + 1.0)).abs() < 1e-15);
        prop_assert!((lifted.params().b() - (b + 1.0)).abs() < 1e-15);
        let spec = DistributionSpec::beta(p).unwrap();
        let general = derivative_lift(&spec).unwrap();
        let want = lifted.spec().density(x);
        prop_assert!((general.density(x) - want).abs() <= 1e-8 * want.max(1.0));
    }
}
