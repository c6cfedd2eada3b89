//! Every Gibbs update is checked against its full conditional written out
//! from the model: freeze the other coordinates, iterate the single update,
//! and compare the draws with the normalised conditional. Updates that draw
//! several variables in sequence are checked through the probability
//! integral transform of each variable given the ones drawn before it.

mod common;

use common::{ks_distance, ks_uniform, LogGridCdf};
use las_core::mcmc::{horseshoe_baseline_step, init_chain, update_t, update_tau, update_theta, update_u};
use las_core::{ChainState, PriorSpec, RngStream, TauPrior};
use statrs::distribution::{ContinuousCDF, Gamma, InverseGamma, Normal};

const DRAWS: usize = 50_000;
const KS_MAX: f64 = 0.02;

fn state(theta: Vec<f64>, u: Vec<f64>, tau: f64, levels: usize) -> ChainState {
    let n = theta.len();
    ChainState { theta, u, tau, gamma: 1.0, t: vec![vec![1.0; levels + 1]; n], xi: None }
}

// 1 + ln z applied `levels` times.
fn f(levels: usize, z: f64) -> f64 {
    (0..levels).fold(z, |acc, _| 1.0 + acc.ln())
}

#[test]
fn theta_given_rest_is_normal() {
    let y = [1.3];
    let mut s = state(vec![0.0], vec![0.7], 2.0, 1);
    let mut rng = RngStream::new(1, 0);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            update_theta(&mut s, &y, &mut rng);
            s.theta[0]
        })
        .collect();
    // Prior variance tau u = 1.4 combined with unit noise.
    let post_var = 1.0 / (1.0 + 1.0 / 1.4);
    let d = Normal::new(post_var * 1.3, post_var.sqrt()).unwrap();
    let ks = ks_distance(draws, |v| d.cdf(v));
    assert!(ks < KS_MAX, "ks {ks}");
}

fn u_conditional_ks(seed: u64, a: f64, theta: f64, tau: f64, t_last: f64) -> f64 {
    let spec = PriorSpec::las(a, 1.0);
    let mut s = state(vec![theta], vec![1.0], tau, 1);
    s.t[0][1] = t_last;
    let mut rng = RngStream::new(seed, 0);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            update_u(&mut s, &spec, &mut rng).unwrap();
            s.u[0]
        })
        .collect();
    // N(theta; 0, tau u) u^{a-1} e^{-t_L u}, with the Jacobian of z = ln u.
    let table = LogGridCdf::new(
        |z: f64| -0.5 * z - theta * theta / (2.0 * tau * z.exp()) + a * z - t_last * z.exp(),
        -800.0,
        800.0,
    );
    ks_distance(draws, |v| table.cdf(v))
}

#[test]
fn u_given_rest_matches_model_conditional() {
    for (i, &(a, theta, tau, t_last)) in
        [(0.005, 2.0, 1.0, 0.3), (0.5, 0.1, 3.0, 1.2), (1.0, 8.0, 0.5, 2.0), (0.02, 1e-3, 1e-2, 1e-40)]
            .iter()
            .enumerate()
    {
        let ks = u_conditional_ks(10 + i as u64, a, theta, tau, t_last);
        assert!(ks < KS_MAX, "a={a} theta={theta} tau={tau} t={t_last}: ks {ks}");
    }
}

#[test]
fn tau_given_rest_inverse_gamma_prior() {
    let spec = PriorSpec::las(0.5, 1.0).with_tau_prior(TauPrior::InverseGamma { shape: 2.0, scale: 0.5 });
    let theta = vec![0.4, -1.2, 2.5];
    let u = vec![0.3, 2.0, 1.1];
    let ss: f64 = theta.iter().zip(&u).map(|(t, u)| t * t / (2.0 * u)).sum();
    let mut s = state(theta, u, 1.0, 1);
    let mut rng = RngStream::new(20, 0);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            update_tau(&mut s, &spec, &mut rng).unwrap();
            s.tau
        })
        .collect();
    let d = InverseGamma::new(1.5 + 2.0, ss + 0.5).unwrap();
    let ks = ks_distance(draws, |v| d.cdf(v));
    assert!(ks < KS_MAX, "ks {ks}");
}

#[test]
fn tau_and_xi_given_rest_half_cauchy_prior() {
    // sqrt(tau) ~ C+(0, s) as tau | xi ~ IG(1/2, 1/xi), xi ~ IG(1/2, 1/s^2).
    let scale = 0.3;
    let spec = PriorSpec::las(0.5, 1.0).with_tau_prior(TauPrior::HalfCauchyOnRoot { scale });
    let theta = vec![0.4, -1.2];
    let u = vec![0.3, 2.0];
    let ss: f64 = theta.iter().zip(&u).map(|(t, u)| t * t / (2.0 * u)).sum();
    let mut s = state(theta, u, 1.0, 1);
    s.xi = Some(1.0);
    let mut rng = RngStream::new(21, 0);
    let mut pit_tau = Vec::with_capacity(DRAWS);
    let mut pit_xi = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        let xi_before = s.xi.unwrap();
        update_tau(&mut s, &spec, &mut rng).unwrap();
        let tau_law = InverseGamma::new(1.5, ss + 1.0 / xi_before).unwrap();
        pit_tau.push(tau_law.cdf(s.tau));
        let xi_law = InverseGamma::new(1.0, 1.0 / s.tau + 1.0 / (scale * scale)).unwrap();
        pit_xi.push(xi_law.cdf(s.xi.unwrap()));
    }
    assert!(ks_uniform(pit_tau) < KS_MAX);
    assert!(ks_uniform(pit_xi) < KS_MAX);
}

fn latent_chain_pits(levels: usize, a: f64, gamma: f64, u: f64, seed: u64) -> Vec<f64> {
    let spec = PriorSpec::ilas(a, gamma, levels as u32);
    let mut s = state(vec![0.5], vec![u], 1.0, levels);
    s.gamma = gamma;
    let mut rng = RngStream::new(seed, 0);
    let mut pits = vec![Vec::with_capacity(DRAWS); levels + 1];
    for _ in 0..DRAWS {
        update_t(&mut s, &spec, &mut rng).unwrap();
        let row = &s.t[0];
        // t_0 | u ~ Ga(1 + gamma, f_L(1+u)); t_k | t_{k-1}, u ~ Ga(t_{k-1} + 1, f_{L-k}(1+u));
        // t_L | t_{L-1}, u ~ Ga(t_{L-1} + a, 1 + u).
        for k in 0..=levels {
            let (shape, rate) = match k {
                0 => (1.0 + gamma, f(levels, 1.0 + u)),
                k if k < levels => (row[k - 1] + 1.0, f(levels - k, 1.0 + u)),
                _ => (row[k - 1] + a, 1.0 + u),
            };
            pits[k].push(Gamma::new(shape, rate).unwrap().cdf(row[k]));
        }
    }
    pits.into_iter().map(ks_uniform).collect()
}

#[test]
fn latent_gamma_chain_given_u() {
    for (levels, u) in [(1, 0.01), (1, 10.0), (2, 1.0), (3, 1e4)] {
        for (k, ks) in latent_chain_pits(levels, 0.05, 1.0, u, 30 + levels as u64).into_iter().enumerate() {
            assert!(ks < KS_MAX, "L={levels} u={u} level {k}: ks {ks}");
        }
    }
}

#[test]
fn scaled_beta_latent_given_u() {
    let spec = PriorSpec::scaled_beta(0.3, 0.5);
    let mut s = state(vec![0.5], vec![2.0], 1.0, 1);
    let mut rng = RngStream::new(40, 0);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            update_t(&mut s, &spec, &mut rng).unwrap();
            *s.t[0].last().unwrap()
        })
        .collect();
    let d = Gamma::new(0.8, 3.0).unwrap();
    assert!(ks_distance(draws, |v| d.cdf(v)) < KS_MAX);
}

#[test]
fn horseshoe_local_scales_given_rest() {
    // u | nu ~ IG(1/2, 1/nu), nu ~ IG(1/2, 1).
    let spec = PriorSpec::horseshoe().with_tau_prior(TauPrior::Fixed { value: 0.8 });
    let y = [1.7];
    let mut rng = RngStream::new(50, 0);
    let mut s = init_chain(&y, &spec, &mut rng).unwrap();
    let mut pit_u = Vec::with_capacity(DRAWS);
    let mut pit_nu = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        let nu_before = *s.t[0].last().unwrap();
        horseshoe_baseline_step(&mut s, &y, &spec, &mut rng).unwrap();
        let th = s.theta[0];
        let u_law = InverseGamma::new(1.0, 1.0 / nu_before + th * th / (2.0 * 0.8)).unwrap();
        pit_u.push(u_law.cdf(s.u[0]));
        let nu_law = InverseGamma::new(1.0, 1.0 + 1.0 / s.u[0]).unwrap();
        pit_nu.push(nu_law.cdf(*s.t[0].last().unwrap()));
    }
    assert!(ks_uniform(pit_u) < KS_MAX);
    assert!(ks_uniform(pit_nu) < KS_MAX);
}
