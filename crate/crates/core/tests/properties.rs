use las_core::bounds::norm_const_bounds;
use las_core::oracle::{posterior_mean_exact, theta_marginal_density, tweedie_posterior_mean};
use las_core::prior::{dlas_ratio, iter_log, kernel_kappa, kernel_u, norm_const_quadrature};
use las_core::quadrature::integrate;
use las_core::{PriorSpec, QuadratureSpec, RngStream};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iter_log_is_ordered_and_increasing(x in 1.0001f64..1e12, dx in 1e-6f64..10.0, levels in 1u32..8) {
        let f = iter_log(levels, x).unwrap();
        let next = iter_log(levels + 1, x).unwrap();
        prop_assert!(next >= 1.0);
        prop_assert!(next < f);
        prop_assert!(iter_log(levels, x + dx).unwrap() > f);
    }

    #[test]
    fn kernel_change_of_variables(kappa in 1e-6f64..0.999999, a in 0.005f64..1.0, b in 0.0f64..1.0, levels in 1u32..4) {
        let spec = PriorSpec::ilas(a, 1.0, levels).with_b(b);
        let u = (1.0 - kappa) / kappa;
        let lhs = kernel_kappa(kappa, &spec).unwrap();
        let rhs = kernel_u(u, &spec).unwrap() / (kappa * kappa);
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-12, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn streams_reproduce_bit_for_bit(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        for _ in 0..16 {
            prop_assert_eq!(a.sample_gig(-0.4, 1.3, 0.2).unwrap().to_bits(), b.sample_gig(-0.4, 1.3, 0.2).unwrap().to_bits());
            prop_assert_eq!(a.sample_gamma(0.01, 1.0).unwrap().to_bits(), b.sample_gamma(0.01, 1.0).unwrap().to_bits());
        }
    }

    #[test]
    fn dlas_ratio_symmetries(alpha in 0.3f64..3.0, beta in 0.3f64..3.0, eps in 0.05f64..0.5) {
        let r = dlas_ratio(eps, alpha, beta, 2).unwrap();
        let back = dlas_ratio(eps, beta, alpha, 2).unwrap();
        prop_assert!((r * back - 1.0).abs() < 1e-8);
        prop_assert!((dlas_ratio(eps, alpha, alpha, 2).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bounds_contain_the_constant(gamma in 0.2f64..3.0, a in 0.005f64..1.0, k_pow in 2u32..5) {
        let k = f64::from(1u32 << k_pow);
        let nb = norm_const_bounds(gamma, a, k).unwrap();
        let c = norm_const_quadrature(&PriorSpec::las(a, gamma)).unwrap();
        prop_assert!(nb.lower <= c && c <= nb.upper, "{} not in [{}, {}]", c, nb.lower, nb.upper);
    }

    #[test]
    fn integrate_is_exact_on_polynomials(coef in prop::collection::vec(-5.0f64..5.0, 1..7), lo in -3.0f64..0.0, len in 0.1f64..4.0) {
        let hi = lo + len;
        let poly = |x: f64| coef.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = coef
            .iter()
            .enumerate()
            .map(|(k, c)| c * (hi.powi(k as i32 + 1) - lo.powi(k as i32 + 1)) / (k as f64 + 1.0))
            .sum();
        // Sign changes can cancel the integral to near zero, so floor the target.
        let spec = QuadratureSpec { absolute_tolerance: 1e-12, ..QuadratureSpec::with_tolerance(1e-12) };
        let got = integrate(poly, lo, hi, &spec).unwrap();
        prop_assert!((got - exact).abs() <= 1e-10 * (1.0 + exact.abs()), "{} vs {}", got, exact);
    }
}

#[test]
fn iter_log_collapses_towards_one() {
    assert!(iter_log(100, 1e6).unwrap() - 1.0 < 0.05);
    assert_eq!(iter_log(3, 1.0).unwrap(), 1.0);
}

#[test]
fn constants_are_finite_across_valid_specs() {
    for &a in &[0.005, 0.1, 0.5, 1.0] {
        for &b in &[0.0, 0.5, 2.0] {
            for &gamma in &[0.1, 1.0, 3.0] {
                for levels in 1..=3 {
                    let c = norm_const_quadrature(&PriorSpec::ilas(a, gamma, levels).with_b(b)).unwrap();
                    assert!(c.is_finite() && c > 0.0, "a={a} b={b} gamma={gamma} L={levels}: {c}");
                }
            }
        }
    }
}

#[test]
fn theta_marginal_has_a_spike_at_zero() {
    for &a in &[0.005, 0.1, 0.5] {
        let spec = PriorSpec::las(a, 1.0);
        let near = theta_marginal_density(1e-3, &spec).unwrap();
        let far = theta_marginal_density(0.5, &spec).unwrap();
        assert!(near > 10.0 * far, "a={a}: {near} vs {far}");
    }
}

#[test]
fn theta_marginal_tails_are_heavier_than_cauchy() {
    let las = PriorSpec::las(0.5, 1.0);
    let cauchy_like = PriorSpec::scaled_beta(0.5, 0.5);
    let las_tail: Vec<f64> = [20.0, 40.0, 80.0].iter().map(|&t| theta_marginal_density(t, &las).unwrap() * t).collect();
    let ref_tail: Vec<f64> =
        [20.0, 40.0, 80.0].iter().map(|&t| theta_marginal_density(t, &cauchy_like).unwrap() * t * t).collect();
    for w in las_tail.windows(2) {
        let drop = w[0] / w[1];
        assert!(drop > 1.0 && drop < 2.0, "p(theta)|theta| dropped by {drop} per doubling");
    }
    for w in ref_tail.windows(2) {
        assert!((w[0] / w[1] - 1.0).abs() < 0.1, "Cauchy reference moved by {}", w[0] / w[1]);
    }
}

#[test]
fn tweedie_matches_posterior_mean() {
    let spec = PriorSpec::las(0.005, 1.0);
    for &y in &[1.0, 5.0, 10.0] {
        let direct = posterior_mean_exact(y, &spec).unwrap();
        let tweedie = tweedie_posterior_mean(y, &spec).unwrap();
        assert!((direct / tweedie - 1.0).abs() < 1e-5, "y={y}: {direct} vs {tweedie}");
    }
}

#[test]
fn dlas_ratio_monotone_on_grid() {
    let grid = [0.5, 1.0, 2.0];
    for &alpha in &grid {
        let r: Vec<f64> = grid.iter().map(|&b| dlas_ratio(0.3, alpha, b, 2).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] > w[0]), "not increasing in beta at alpha={alpha}: {r:?}");
    }
    for &beta in &grid {
        let r: Vec<f64> = grid.iter().map(|&a| dlas_ratio(0.3, a, beta, 2).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]), "not decreasing in alpha at beta={beta}: {r:?}");
    }
}
