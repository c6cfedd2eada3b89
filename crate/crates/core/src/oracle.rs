//! Quadrature ground truth for the normal means model with `tau = 1`:
//! the marginal density of `theta`, exact posterior means and mean squared
//! errors, their large-signal asymptotes, and checks of the gamma-chain
//! augmentation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::prior::{iter_log_ln, kernel_integral, norm_const_quadrature, PriorSpec, ScalePoint};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::random::RngStream;

const TOL: f64 = 1e-11;

fn tol() -> QuadratureSpec {
    QuadratureSpec::with_tolerance(TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub y: f64,
    pub mse_numeric: f64,
    pub mse_asymptote: f64,
    /// `(mse_numeric - mse_asymptote) * y^2 / 2`
    pub residual_scaled: f64,
}

/// Normalised marginal density of `theta` with `tau = 1`:
/// `p(theta) = C^{-1} int N(theta; 0, u) kernel_u(u) du`.
pub fn theta_marginal_density(theta: f64, spec: &PriorSpec) -> Result<f64> {
    if !theta.is_finite() {
        return Err(domain("theta must be finite"));
    }
    let c = norm_const_quadrature(spec)?;
    let half_sq = 0.5 * theta * theta;
    let ln_norm = -0.5 * (2.0 * PI).ln();
    let mass = kernel_integral(
        spec,
        0.0,
        f64::INFINITY,
        |p: ScalePoint| ln_norm - 0.5 * p.ln_u - half_sq * (-p.ln_u).exp(),
        &tol(),
    )?;
    Ok(mass / c)
}

/// `J_k(y) = int (1+u)^{-k} exp(-y^2 / (2(1+u))) kernel_u(u) du`.
fn j_integral(y: f64, k: f64, spec: &PriorSpec) -> Result<f64> {
    let half_sq = 0.5 * y * y;
    kernel_integral(
        spec,
        0.0,
        f64::INFINITY,
        |p: ScalePoint| -k * p.ln_1p_u - half_sq * (-p.ln_1p_u).exp(),
        &tol(),
    )
}

/// Posterior mean `y (1 - E[kappa | y])` with `tau = 1`.
pub fn posterior_mean_exact(y: f64, spec: &PriorSpec) -> Result<f64> {
    if !y.is_finite() {
        return Err(domain("y must be finite"));
    }
    spec.validate()?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let j_half = j_integral(y, 0.5, spec)?;
    let j_three_halves = j_integral(y, 1.5, spec)?;
    Ok(y * (1.0 - j_three_halves / j_half))
}

/// Posterior mean squared error `E[(theta - y)^2 | y] = 1 + m''(y)/m(y)`,
/// written through `J_k` as `1 + (y^2 J_{5/2} - J_{3/2}) / J_{1/2}`.
pub fn posterior_mse(y: f64, spec: &PriorSpec) -> Result<MseReport> {
    if !(y.is_finite() && y != 0.0) {
        return Err(domain("posterior_mse needs finite nonzero y"));
    }
    spec.validate()?;
    let j1 = j_integral(y, 0.5, spec)?;
    let j3 = j_integral(y, 1.5, spec)?;
    let j5 = j_integral(y, 2.5, spec)?;
    let mse_numeric = 1.0 + (y * y * j5 - j3) / j1;
    let mse_asymptote = mse_asymptote(y, spec);
    Ok(MseReport {
        y,
        mse_numeric,
        mse_asymptote,
        residual_scaled: (mse_numeric - mse_asymptote) * y * y / 2.0,
    })
}

/// Large-`|y|` expansion of the posterior MSE. LAS and scaled beta:
/// `1 + (2/y^2)(1+b)(1+2b)`. ILAS with `L >= 2`: see [`mse_asymptote_ilas`].
pub fn mse_asymptote(y: f64, spec: &PriorSpec) -> f64 {
    if spec.levels >= 2 {
        mse_asymptote_ilas(y, spec.a, spec.gamma, spec.levels)
    } else {
        1.0 + 2.0 / (y * y) * (1.0 + spec.b) * (1.0 + 2.0 * spec.b)
    }
}

/// Second-order expansion for the iterated prior with `b = 0`:
/// `1 + (2/y^2) {1 - 3a/y^2 + sum_{k<L} P_k + (1+gamma) P_L}` where
/// `P_k = prod_{j<=k} f_j(1 + y^2/2)^{-1}`.
pub fn mse_asymptote_ilas(y: f64, a: f64, gamma: f64, levels: u32) -> f64 {
    let h = y * y / 2.0;
    let ln_z = h.ln_1p();
    let mut bracket = 1.0 - 1.5 * a / h;
    let mut prod = 1.0;
    for k in 1..=levels {
        prod /= iter_log_ln(k, ln_z);
        bracket += if k < levels { prod } else { (1.0 + gamma) * prod };
    }
    1.0 + bracket / h
}

/// Reference MSE of the horseshoe+ prior, `1 + 3 (2/y^2)`.
pub fn mse_horseshoe_plus(y: f64) -> f64 {
    1.0 + 6.0 / (y * y)
}

/// `ln m(y)` up to an additive constant that does not depend on `y`.
fn ln_marginal_unnormalised(y: f64, spec: &PriorSpec) -> Result<f64> {
    Ok(j_integral(y, 0.5, spec)?.ln())
}

/// Posterior mean through Tweedie's formula `y + d/dy ln m(y)`, with a
/// central difference of step `1e-4 max(1, |y|)`.
pub fn tweedie_posterior_mean(y: f64, spec: &PriorSpec) -> Result<f64> {
    let h = 1e-4 * y.abs().max(1.0);
    let up = ln_marginal_unnormalised(y + h, spec)?;
    let down = ln_marginal_unnormalised(y - h, spec)?;
    Ok(y + (up - down) / (2.0 * h))
}

/// Closed form of the gamma-chain mixture,
/// `(1+u)^{-(a+b)} prod_{k<L} f_k(1+u)^{-1} f_L(1+u)^{-(1+gamma)}`.
pub fn augmentation_closed_form(u: f64, spec: &PriorSpec) -> f64 {
    let x = u.ln_1p();
    let levels = spec.levels;
    let mut ln_v = -(spec.a + spec.b) * x;
    for k in 1..levels {
        ln_v -= iter_log_ln(k, x).ln();
    }
    ln_v -= (1.0 + spec.gamma) * iter_log_ln(levels, x).ln();
    ln_v.exp()
}

/// `int_0^inf f` split at `mode`.
fn split_integral<F: FnMut(f64) -> f64>(mut f: F, mode: f64) -> Result<f64> {
    let left = if mode > 0.0 { integrate(&mut f, 0.0, mode, &tol())? } else { 0.0 };
    let right = integrate(&mut f, mode.max(0.0), f64::INFINITY, &tol().semi_infinite())?;
    Ok(left + right)
}

fn ln_gamma_density_unit_rate(t: f64, shape: f64) -> f64 {
    (shape - 1.0) * t.ln() - t - ln_gamma(shape)
}

/// Relative error between the gamma-chain mixture
/// `int Ga(t_0|1+gamma,1) Ga(t_1|t_0+1,1) ... Ga(t_L|t_{L-1}+a+b,1) e^{-t_L u} dt`
/// and its closed form. The innermost levels are integrated through the
/// gamma moment generating function; `t_0` (and `t_1` when `L >= 2`) are
/// integrated by quadrature.
pub fn augmentation_check(u: f64, spec: &PriorSpec) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(domain("augmentation_check needs u > 0"));
    }
    spec.validate()?;
    let levels = spec.levels;
    let ab = spec.a + spec.b;
    let x = u.ln_1p();
    // G_k(s) = int Ga(t_k | s + c_k, 1) G_{k+1}(t_k) dt_k, which equals
    // exp(-(a+b) x - sum_{j=1}^{L-k} ln f_j - s ln f_{L-k}) with f_0(1+u) = 1+u.
    let ln_f = |j: u32| if j == 0 { x } else { iter_log_ln(j, x).ln() };
    let analytic = |k: u32, s: f64| -> f64 {
        let mut v = -ab * x - s * ln_f(levels - k);
        for j in 1..=(levels - k) {
            v -= ln_f(j);
        }
        v
    };
    // Each gamma-weighted integrand t^{c-1} e^{-t(1+r)} peaks at (c-1)/(1+r);
    // splitting there keeps the adaptive rule from missing narrow peaks.
    let outer = |t0: f64| -> Result<f64> {
        let w0 = ln_gamma_density_unit_rate(t0, 1.0 + spec.gamma);
        if levels == 1 {
            return Ok((w0 + analytic(1, t0)).exp());
        }
        let shape = t0 + 1.0;
        let mode = t0 / (1.0 + ln_f(levels - 2));
        let inner = split_integral(
            |t1| (ln_gamma_density_unit_rate(t1, shape) + analytic(2, t1)).exp(),
            mode,
        )?;
        Ok(w0.exp() * inner)
    };
    let mut err = None;
    let mode = spec.gamma / (1.0 + ln_f(levels - 1));
    let lhs = split_integral(
        |t0| match outer(t0) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        mode,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let rhs = augmentation_closed_form(u, spec);
    Ok((lhs - rhs).abs() / rhs)
}

/// Monte Carlo estimate of the gamma-chain mixture by simulating the chain
/// with unit rates and averaging `e^{-t_L u}`. Returns `(estimate, se)`.
pub fn augmentation_monte_carlo(u: f64, spec: &PriorSpec, draws: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
    let levels = spec.levels;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let mut t = rng.sample_gamma(1.0 + spec.gamma, 1.0)?;
        for _ in 1..levels {
            t = rng.sample_gamma(t + 1.0, 1.0)?;
        }
        t = rng.sample_gamma(t + spec.a + spec.b, 1.0)?;
        let v = (-t * u).exp();
        sum += v;
        sum_sq += v * v;
    }
    let m = draws as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}
