mod common;

use common::ks_distance;
use las_core::mcmc::{batch_means_se, init_chain, run_chain, run_chain_with, update_gamma};
use las_core::oracle::{posterior_mean_exact, theta_marginal_density};
use las_core::prior::norm_const_quadrature;
use las_core::{PriorSpec, RngStream, RunConfig, TauPrior};

fn fixed_tau(spec: PriorSpec) -> PriorSpec {
    spec.with_tau_prior(TauPrior::Fixed { value: 1.0 })
}

#[test]
fn one_coordinate_chain_matches_quadrature_posterior() {
    let y = 2.0;
    let spec = fixed_tau(PriorSpec::las(1.0, 1.0));
    let cfg = RunConfig { iterations: 201_000, burn_in: 1_000, thin: 4, master_seed: 3, ..RunConfig::default() };
    let (_, trace) = run_chain_with(&[y], &spec, &cfg, &mut RngStream::new(3, 0)).unwrap();
    let draws: Vec<f64> = trace.theta.iter().map(|d| d[0]).collect();

    // p(theta | y) on a grid, by the trapezoid rule; the log spike at zero
    // is integrable and the grid straddles it.
    let h = 1e-3;
    let grid: Vec<f64> = (0..=24_000).map(|i| -10.0 + (i as f64 + 0.5) * h).collect();
    let dens: Vec<f64> = grid
        .iter()
        .map(|&t| (-(y - t) * (y - t) / 2.0).exp() * theta_marginal_density(t, &spec).unwrap())
        .collect();
    let mut cum = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        cum[i] = cum[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
    }
    let total = *cum.last().unwrap();
    let cdf = |x: f64| {
        let i = (((x - grid[0]) / h).floor().max(0.0) as usize).min(grid.len() - 1);
        cum[i] / total
    };
    let ks = ks_distance(draws, cdf);
    assert!(ks < 0.02, "ks {ks}");
}

#[test]
fn identical_config_gives_identical_summary() {
    let y = [0.3, -1.2, 4.5, 0.0, 7.1];
    let cfg = RunConfig { iterations: 600, burn_in: 200, master_seed: 17, ..RunConfig::default() };
    for spec in [
        PriorSpec::las(0.2, 1.0).adaptive(),
        PriorSpec::ilas(0.2, 1.0, 3),
        PriorSpec::scaled_beta(0.2, 0.5),
        PriorSpec::horseshoe(),
    ] {
        let spec = spec.with_tau_prior(TauPrior::HalfCauchyOnRoot { scale: 0.2 });
        let a = run_chain(&y, &spec, &cfg).unwrap();
        let b = run_chain(&y, &spec, &cfg).unwrap();
        assert_eq!(a, b, "{:?}", spec.variant);
        assert!(a.mean.iter().all(|m| m.is_finite()));
    }
}

#[test]
fn large_signals_shrink_less_than_under_scaled_beta() {
    let mut y = vec![0.0; 60];
    y.extend([8.0, 12.0, 20.0]);
    let n = y.len();
    let a = 1.0 / n as f64;
    let tau = TauPrior::HalfCauchyOnRoot { scale: a };
    let cfg = RunConfig { iterations: 22_000, burn_in: 2_000, master_seed: 5, ..RunConfig::default() };
    let las = PriorSpec::las(a, 1.0).with_tau_prior(tau);
    let sb = PriorSpec::scaled_beta(a, 0.5).with_tau_prior(tau);
    let (sl, tl) = run_chain_with(&y, &las, &cfg, &mut RngStream::new(5, 0)).unwrap();
    let (ss, ts) = run_chain_with(&y, &sb, &cfg, &mut RngStream::new(5, 1)).unwrap();
    for i in n - 3..n {
        let gap_las = (sl.mean[i] - y[i]).abs();
        let gap_sb = (ss.mean[i] - y[i]).abs();
        let se_las = batch_means_se(&tl.theta.iter().map(|d| d[i]).collect::<Vec<_>>());
        let se_sb = batch_means_se(&ts.theta.iter().map(|d| d[i]).collect::<Vec<_>>());
        let mc = 3.0 * (se_las * se_las + se_sb * se_sb).sqrt();
        assert!(gap_las < gap_sb + mc, "y={}: LAS gap {gap_las}, scaled beta gap {gap_sb}, 3 MC SE {mc}", y[i]);
    }
}

#[test]
fn large_signals_shrink_less_exactly_at_unit_tau() {
    let a = 1.0 / 63.0;
    for y in [8.0, 12.0, 20.0] {
        let las = posterior_mean_exact(y, &PriorSpec::las(a, 1.0)).unwrap();
        let sb = posterior_mean_exact(y, &PriorSpec::scaled_beta(a, 0.5)).unwrap();
        assert!(y - las < y - sb, "y={y}: {las} vs {sb}");
    }
}

#[test]
fn mh_brackets_contain_quadrature_ratio() {
    let n = 20;
    let a = 1.0 / n as f64;
    let spec = PriorSpec::las(a, 1.0).adaptive();
    let y: Vec<f64> = (0..n).map(|i| (i as f64 - 10.0) / 3.0).collect();
    let mut rng = RngStream::new(9, 0);
    let mut state = init_chain(&y, &spec, &mut rng).unwrap();
    let cfg = RunConfig::default();
    for (i, u) in state.u.iter_mut().enumerate() {
        *u = 0.05 * (i + 1) as f64;
    }
    for _ in 0..300 {
        let d = update_gamma(&mut state, &spec, &cfg, &mut rng).unwrap();
        let c = |g: f64| norm_const_quadrature(&PriorSpec::las(a, g)).unwrap().ln();
        let ln_a = n as f64 * (c(d.gamma_current) - c(d.gamma_proposed))
            + n as f64 * a * (d.gamma_current.ln() - d.gamma_proposed.ln());
        let slack = 1e-8 * (1.0 + ln_a.abs());
        assert!(d.ln_lower_w <= ln_a + slack && ln_a <= d.ln_upper_w + slack, "{d:?} ln A = {ln_a}");
        if !d.fallback {
            assert_eq!(d.accepted, d.ln_uniform < ln_a);
        }
    }
}

#[test]
fn rejects_bad_input() {
    let spec = PriorSpec::las(0.5, 1.0);
    assert!(run_chain(&[], &spec, &RunConfig::default()).is_err());
    assert!(run_chain(&[f64::NAN], &spec, &RunConfig::default()).is_err());
    let bad = RunConfig { burn_in: 5000, ..RunConfig::default() };
    assert!(run_chain(&[1.0], &spec, &bad).is_err());
}
