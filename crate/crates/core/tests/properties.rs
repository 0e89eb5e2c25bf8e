use proptest::prelude::*;

use sublinear_lln::adversary::pairwise_sum;
use sublinear_lln::detection::{
    miss_bound, run_test, threshold_gamma_n, Decision, DetectionConfig, NoiseFamily,
};
use sublinear_lln::engine::PolicyTable;
use sublinear_lln::ldp::{fenchel_legendre, log_mgf_gaussian_square, Extended};
use sublinear_lln::model::{interval_max, lln_bound_with, IntervalMaxOptions};
use sublinear_lln::phi::standard_catalog;
use sublinear_lln::{
    backward_induction, DistributionSpec, EngineConfig, ModelParams, TestFunction,
};

fn rademacher(lo: f64, hi: f64) -> ModelParams {
    ModelParams::new(
        lo,
        hi,
        1.0,
        DistributionSpec::Rademacher,
        DistributionSpec::Rademacher,
    )
    .unwrap()
}

fn phi_strategy() -> impl Strategy<Value = TestFunction> {
    let leaf = prop_oneof![
        Just(TestFunction::Identity),
        (0.5..8.0f64).prop_map(TestFunction::clipped),
        (0.5..4.0f64, 0.1..3.0f64).prop_map(|(a, w)| TestFunction::distance_to(a, a + w)),
        (0.5..4.0f64, 0.1..3.0f64).prop_map(|(g, w)| TestFunction::smoothed_indicator(g, g + w)),
    ];
    (leaf, any::<bool>(), 0.1..3.0f64, -2.0..2.0f64).prop_map(|(f, neg, c, s)| {
        let f = if neg { f.negated() } else { f };
        f.scaled(c).shifted(s)
    })
}

fn small_engine() -> EngineConfig {
    EngineConfig::default().with_points(513)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sublinear_axioms(phi in phi_strategy(), psi in phi_strategy(), c in 0.0..3.0f64, n in 2usize..8) {
        let params = rademacher(1.0, 2.0);
        let cfg = small_engine();
        let solve = |f: &TestFunction| backward_induction(f, n, &params, &cfg).unwrap();
        let a = solve(&phi);
        let b = solve(&psi);
        let sum = solve(&phi.clone().plus(psi.clone()));
        prop_assert!(sum.value <= a.value + b.value + sum.slack() + a.slack() + b.slack());
        let scaled = solve(&phi.clone().scaled(c));
        prop_assert!((scaled.value - c * a.value).abs() <= scaled.slack() + c * a.slack() + 1e-12);
        let shifted = solve(&phi.clone().shifted(c));
        prop_assert!((shifted.value - a.value - c).abs() <= shifted.slack() + a.slack() + 1e-12);
        let k = solve(&TestFunction::constant(c));
        prop_assert!((k.value - c).abs() <= 1e-12);
    }

    #[test]
    fn larger_interval_never_lowers_the_value(phi in phi_strategy(), lo in 1.0..1.5f64, w in 0.0..0.5f64, extra in 0.0..0.5f64, n in 2usize..8) {
        let inner = rademacher(lo, lo + w);
        let outer = rademacher(lo, lo + w + extra);
        let cfg = small_engine();
        let a = backward_induction(&phi, n, &inner, &cfg).unwrap();
        let b = backward_induction(&phi, n, &outer, &cfg).unwrap();
        prop_assert!(a.value <= b.value + a.slack() + b.slack(), "{} > {}", a.value, b.value);
    }

    #[test]
    fn interval_max_dominates_every_point(phi in phi_strategy(), a in 0.0..5.0f64, w in 0.0..5.0f64, t in 0.0..1.0f64) {
        let b = a + w;
        let m = interval_max(|x| phi.eval(x), a, b).unwrap();
        let tol = IntervalMaxOptions::default().tolerance(phi.lipschitz(), a, b);
        let r = a + t * w;
        prop_assert!(m.max >= phi.eval(r) - tol - 1e-12);
        prop_assert!(m.argmax >= a && m.argmax <= b);
        prop_assert!((phi.eval(m.argmax) - m.max).abs() <= 1e-12);
    }

    #[test]
    fn lln_bound_shape(c in 0.1..100.0f64, alpha in 0.05..=1.0f64, l in 0.0..10.0f64, k in 0.1..10.0f64, n in 1usize..100_000) {
        let b1 = lln_bound_with(c, alpha, l, n).unwrap();
        let b2 = lln_bound_with(c, alpha, l, n + 1).unwrap();
        prop_assert!(b2 <= b1);
        let scaled = lln_bound_with(c, alpha, k * l, n).unwrap();
        prop_assert!((scaled - k * b1).abs() <= 1e-12 * (1.0 + scaled.abs()));
    }

    #[test]
    fn detection_inversion(
        p in 0.01..0.99f64,
        n in 1usize..1_000_000,
        alpha in 0.05..=1.0f64,
        zeta_lo in 0.5..2.0f64,
        ratio in 1.0..2.0f64,
        var_lo in 0.01..1.0f64,
        spread in 1.0..3.0f64,
    ) {
        let cfg = DetectionConfig {
            p,
            n,
            alpha,
            zeta_lo,
            zeta_hi: zeta_lo * ratio,
            eps: DistributionSpec::Rademacher,
            noise: NoiseFamily::Gaussian { var_lo, var_hi: var_lo * spread, points: 5 },
        };
        let gamma = threshold_gamma_n(&cfg).unwrap();
        prop_assert!((miss_bound(&cfg, gamma).unwrap() - p).abs() <= 1e-12);
        let looser = DetectionConfig { p: (p * 1.5).min(0.999), ..cfg.clone() };
        prop_assert!(threshold_gamma_n(&looser).unwrap() >= gamma);
    }

    #[test]
    fn decision_rule_is_the_energy_threshold(y in prop::collection::vec(-3.0..3.0f64, 1..40), gamma in -1.0..5.0f64) {
        let n = y.len();
        let energy: f64 = y.iter().map(|v| v * v).sum();
        let d = run_test(&y, gamma, n).unwrap();
        prop_assert_eq!(d == Decision::RejectH0, energy <= n as f64 * gamma);
    }

    #[test]
    fn gaussian_square_rate_is_convex_and_zero_at_the_mean(sigma2 in 0.1..5.0f64, x in 0.05..20.0f64, h in 0.01..0.5f64) {
        let mgf = log_mgf_gaussian_square(sigma2).unwrap();
        let r = |x: f64| match fenchel_legendre(&mgf, x).unwrap() {
            Extended::Finite(v) => v,
            other => panic!("{other}"),
        };
        prop_assert!(r(sigma2).abs() <= 1e-8);
        let (lo, mid, hi) = (x * (1.0 - h), x, x * (1.0 + h));
        prop_assert!(r(mid) >= -1e-12);
        prop_assert!(r(mid) <= 0.5 * (r(lo) + r(hi)) + 1e-9 + 1e-9 * r(mid).abs());
    }

    #[test]
    fn quadrature_reproduces_moments(mean in -2.0..2.0f64, sd in 0.1..3.0f64, h in 0.1..3.0f64) {
        let g = DistributionSpec::gaussian(mean, sd).quadrature(32).unwrap();
        prop_assert!((g.weight_sum() - 1.0).abs() <= 1e-12);
        prop_assert!((g.expect(|x| x) - mean).abs() <= 1e-10);
        prop_assert!((g.expect(|x| x * x) - (mean * mean + sd * sd)).abs() <= 1e-9 * (1.0 + mean * mean + sd * sd));
        let fourth = mean.powi(4) + 6.0 * mean * mean * sd * sd + 3.0 * sd.powi(4);
        prop_assert!((g.expect(|x| x.powi(4)) - fourth).abs() <= 1e-9 * (1.0 + fourth));
        let u = DistributionSpec::UniformSymmetric { halfwidth: h }.quadrature(16).unwrap();
        prop_assert!((u.expect(|x| x * x) - h * h / 3.0).abs() <= 1e-12 * (1.0 + h * h));
        prop_assert!((u.expect(|x| x.powi(4)) - h.powi(4) / 5.0).abs() <= 1e-12 * (1.0 + h.powi(4)));
    }

    #[test]
    fn pairwise_sum_matches_naive(xs in prop::collection::vec(-1e3..1e3f64, 0..500)) {
        let naive: f64 = xs.iter().sum();
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-9 * (1.0 + xs.iter().map(|x| x.abs()).sum::<f64>()));
    }

    #[test]
    fn phi_text_roundtrip(phi in phi_strategy()) {
        let back: TestFunction = phi.to_string().parse().unwrap();
        for x in [-1.0, 0.0, 0.7, 2.0, 5.5] {
            prop_assert!((back.eval(x) - phi.eval(x)).abs() <= 1e-12);
        }
        prop_assert!((back.lipschitz() - phi.lipschitz()).abs() <= 1e-12);
    }
}

#[test]
fn policy_roundtrip_preserves_lookups() {
    let params = rademacher(1.0, 2.0);
    let phi = standard_catalog(params.mu_lo(), params.mu_hi())[2]
        .1
        .clone();
    let sol = backward_induction(&phi, 6, &params, &small_engine()).unwrap();
    let mut buf = Vec::new();
    sol.policy.write_csv(&mut buf).unwrap();
    let back = PolicyTable::read_csv(buf.as_slice()).unwrap();
    for step in 1..=6 {
        for m in [0.0, 0.3, 1.1, 2.7, 10.0] {
            let a = sol.policy.lookup(step, m).unwrap();
            let b = back.lookup(step, m).unwrap();
            assert!((a - b).abs() <= 1e-12, "step {step} m {m}: {a} vs {b}");
        }
    }
}
