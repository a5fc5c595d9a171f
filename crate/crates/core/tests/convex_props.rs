use proptest::prelude::*;
use vibdsde_core::convex::ConvexSpec;

fn spec() -> impl Strategy<Value = ConvexSpec> {
    let end = prop_oneof![1 => Just(f64::INFINITY), 4 => 0.0..3.0f64];
    prop_oneof![
        Just(ConvexSpec::Zero),
        (end.clone(), end).prop_map(|(a, b)| ConvexSpec::IndicatorInterval { lo: -a, hi: b }),
        (0.0..5.0f64).prop_map(|c| ConvexSpec::Quadratic { c }),
        (0.0..3.0f64).prop_map(|scale| ConvexSpec::AbsValue { scale }),
    ]
}

fn lam() -> impl Strategy<Value = f64> {
    (-3.0..0.0f64).prop_map(|e| 10f64.powf(e))
}

fn grad(t: &ConvexSpec, x: f64, l: f64) -> f64 {
    t.yosida_gradient(x, l).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn gradient_is_a_subgradient_at_the_resolvent(t in spec(), x in -10.0..10.0f64, l in lam()) {
        let j = t.resolvent(x, l).unwrap();
        let s = t.subdiff(j).unwrap();
        prop_assert!(s.contains(grad(&t, x, l), 1e-12), "{:?} {} {}", s, j, grad(&t, x, l));
    }

    #[test]
    fn gradient_is_lipschitz_and_monotone(t in spec(), x in -10.0..10.0f64, y in -10.0..10.0f64, l in lam()) {
        let (gx, gy) = (grad(&t, x, l), grad(&t, y, l));
        let tol = 1e-10 * (1.0 + gx.abs() + gy.abs());
        prop_assert!((gx - gy).abs() <= (x - y).abs() / l + tol);
        prop_assert!((gx - gy) * (x - y) >= -tol * (x - y).abs());
    }

    #[test]
    fn cross_inequality(t in spec(), x in -10.0..10.0f64, y in -10.0..10.0f64, e in lam(), d in lam()) {
        let (ge, gd) = (grad(&t, x, e), grad(&t, y, d));
        let lhs = (ge - gd) * (x - y);
        let rhs = -(e + d) * ge * gd;
        prop_assert!(lhs >= rhs - 1e-9 * (1.0 + lhs.abs() + rhs.abs()), "{} < {}", lhs, rhs);
    }

    #[test]
    fn envelope_is_convex_with_yosida_gradient(t in spec(), x in -10.0..10.0f64, y in -10.0..10.0f64, l in lam()) {
        let env = |v: f64| t.moreau_envelope(v, l).unwrap();
        let support = env(x) + grad(&t, x, l) * (y - x);
        prop_assert!(env(y) >= support - 1e-9 * (1.0 + support.abs()));
    }

    #[test]
    fn envelope_orders_in_lambda(t in spec(), x in -10.0..10.0f64, l1 in lam(), l2 in lam()) {
        let (a, b) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let (e1, e2) = (t.moreau_envelope(x, a).unwrap(), t.moreau_envelope(x, b).unwrap());
        prop_assert!(e2 <= e1 + 1e-12 * (1.0 + e1));
        prop_assert!(e1 <= t.eval(x) + 1e-12 * (1.0 + e1));
        prop_assert!(e2 >= 0.0);
    }

    #[test]
    fn resolvent_is_nonexpansive(t in spec(), x in -10.0..10.0f64, y in -10.0..10.0f64, l in lam()) {
        let (jx, jy) = (t.resolvent(x, l).unwrap(), t.resolvent(y, l).unwrap());
        prop_assert!((jx - jy).abs() <= (x - y).abs() * (1.0 + 1e-15) + 1e-15);
        prop_assert!(t.in_domain(jx));
    }
}

#[test]
fn zero_resolvent_is_identity() {
    for x in [-3.5, 0.0, 1e-300, 7.0] {
        assert_eq!(ConvexSpec::Zero.resolvent(x, 0.3).unwrap(), x);
        assert_eq!(ConvexSpec::Zero.yosida_gradient(x, 0.3).unwrap(), 0.0);
    }
}

#[test]
fn quadratic_envelope_matches_grid_minimum() {
    let t = ConvexSpec::Quadratic { c: 1.0 };
    let objective = |y: f64| (1.0 - y) * (1.0 - y) / 2.0 + y * y / 2.0;
    let best = (0..=200_000).map(|i| objective(-1.0 + 3.0 * i as f64 / 200_000.0)).fold(f64::INFINITY, f64::min);
    let env = t.moreau_envelope(1.0, 1.0).unwrap();
    assert!((env - best).abs() < 1e-9, "{env} vs {best}");
    assert!((env - 0.25).abs() < 1e-15);
}

#[test]
fn invalid_lambda_rejected() {
    let t = ConvexSpec::AbsValue { scale: 1.0 };
    for l in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(t.resolvent(1.0, l).is_err());
        assert!(t.moreau_envelope(1.0, l).is_err());
        assert!(t.yosida_gradient(1.0, l).is_err());
    }
}

#[test]
fn randomized_suite_has_no_violations() {
    let r = vibdsde_core::verify::yosida_properties(10_000, 2024);
    assert_eq!(r.violations(), 0, "{r:?}");
}
