//! Log-adjusted shrinkage prior family: iterated logarithms, density kernels
//! in the local scale `u` and the shrinkage factor `kappa = 1/(1+u)`, the
//! doubly log-adjusted kernel, and quadrature of the normalizing constant.
//!
//! Everything is evaluated in log space. Points on the `u` axis are carried
//! as `(ln u, ln(1+u))` so that `u` far below the smallest double (the spike
//! under `a = 1/n`) or far above the largest (the slowly varying tail) never
//! has to be materialised.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::quadrature::{integrate, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Log-adjusted shrinkage prior (a single log term).
    Las,
    /// Iteratively log-adjusted prior of order `L`.
    Ilas,
    /// Scaled beta (beta-prime) prior on `u`; no log term.
    ScaledBeta,
    /// Horseshoe: half-Cauchy local scales, i.e. scaled beta with `a = b = 1/2`.
    HorseshoeBaseline,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Las => "las",
            Variant::Ilas => "ilas",
            Variant::ScaledBeta => "scaled-beta",
            Variant::HorseshoeBaseline => "hs",
        }
    }

    pub fn has_log_terms(&self) -> bool {
        matches!(self, Variant::Las | Variant::Ilas)
    }
}

/// Prior on the global variance `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TauPrior {
    InverseGamma { shape: f64, scale: f64 },
    /// Half-Cauchy with the given scale on `sqrt(tau)`.
    HalfCauchyOnRoot { scale: f64 },
    /// `tau` held at a constant; the update is skipped.
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub variant: Variant,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    /// Order `L` of the iterated logarithm.
    pub levels: u32,
    pub gamma_adaptive: bool,
    pub tau_prior: TauPrior,
}

impl PriorSpec {
    pub fn las(a: f64, gamma: f64) -> Self {
        PriorSpec {
            variant: Variant::Las,
            a,
            b: 0.0,
            gamma,
            levels: 1,
            gamma_adaptive: false,
            tau_prior: TauPrior::Fixed { value: 1.0 },
        }
    }

    pub fn ilas(a: f64, gamma: f64, levels: u32) -> Self {
        PriorSpec {
            variant: Variant::Ilas,
            levels,
            ..Self::las(a, gamma)
        }
    }

    pub fn scaled_beta(a: f64, b: f64) -> Self {
        PriorSpec {
            variant: Variant::ScaledBeta,
            a,
            b,
            gamma: -1.0,
            levels: 1,
            gamma_adaptive: false,
            tau_prior: TauPrior::Fixed { value: 1.0 },
        }
    }

    pub fn horseshoe() -> Self {
        PriorSpec {
            variant: Variant::HorseshoeBaseline,
            ..Self::scaled_beta(0.5, 0.5)
        }
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn with_tau_prior(mut self, tau_prior: TauPrior) -> Self {
        self.tau_prior = tau_prior;
        self
    }

    pub fn adaptive(mut self) -> Self {
        self.gamma_adaptive = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid(format!("a must be positive, got {}", self.a)));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(invalid(format!("b must be nonnegative, got {}", self.b)));
        }
        if self.levels < 1 {
            return Err(invalid("L must be at least 1"));
        }
        match self.variant {
            Variant::Las | Variant::Ilas => {
                if !(self.gamma > 0.0 && self.gamma.is_finite()) {
                    return Err(invalid(format!(
                        "gamma must be positive for a proper log-adjusted prior, got {}",
                        self.gamma
                    )));
                }
                if self.variant == Variant::Las && self.levels != 1 {
                    return Err(invalid("the LAS variant has L = 1; use ILAS for L > 1"));
                }
            }
            Variant::ScaledBeta | Variant::HorseshoeBaseline => {
                if self.gamma != -1.0 {
                    return Err(invalid("scaled beta priors carry gamma = -1"));
                }
                if !(self.b > 0.0) {
                    return Err(invalid("scaled beta prior needs b > 0 to be proper"));
                }
                if self.levels != 1 {
                    return Err(invalid("scaled beta priors have L = 1"));
                }
                if self.variant == Variant::HorseshoeBaseline && (self.a != 0.5 || self.b != 0.5) {
                    return Err(invalid("the horseshoe baseline has a = b = 1/2"));
                }
            }
        }
        if self.gamma_adaptive {
            if self.variant != Variant::Las {
                return Err(invalid("adaptive gamma is only available for the LAS variant"));
            }
            if self.b != 0.0 || self.a > 1.0 {
                return Err(invalid("adaptive gamma needs b = 0 and a <= 1"));
            }
        }
        match self.tau_prior {
            TauPrior::InverseGamma { shape, scale } => {
                if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return Err(invalid("inverse-gamma tau prior needs positive shape and scale"));
                }
            }
            TauPrior::HalfCauchyOnRoot { scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(invalid("half-Cauchy tau prior needs a positive scale"));
                }
            }
            TauPrior::Fixed { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(invalid("fixed tau must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Exponent on the outermost log term, `1 + gamma`; zero when there is none.
    fn outer_exponent(&self) -> f64 {
        if self.variant.has_log_terms() {
            1.0 + self.gamma
        } else {
            0.0
        }
    }
}

/// `f_L(z)` where `f_1(z) = 1 + ln z` and `f_{k+1} = f_1(f_k)`.
pub fn iter_log(levels: u32, z: f64) -> Result<f64> {
    if levels < 1 {
        return Err(invalid("L must be at least 1"));
    }
    if !(z >= 1.0) {
        return Err(domain(format!("iterated log needs z >= 1, got {z}")));
    }
    Ok(iter_log_ln(levels, z.ln()))
}

/// `f_L(z)` from `ln z`, which may exceed the double range of `z` itself.
pub fn iter_log_ln(levels: u32, ln_z: f64) -> f64 {
    let mut f = 1.0 + ln_z;
    for _ in 1..levels {
        f = 1.0 + f.ln();
    }
    f
}

/// `sum_{k<L} ln f_k + (1 + gamma) ln f_L` evaluated at `z` given `ln z`.
fn ln_log_terms(levels: u32, outer: f64, ln_z: f64) -> f64 {
    if outer == 0.0 {
        return 0.0;
    }
    if ln_z == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    // Track ln f_k directly: ln f_{k+1} = ln(1 + ln f_k), so small arguments
    // keep their precision through ln_1p.
    let mut ln_f = ln_z.ln_1p();
    for _ in 1..levels {
        total += ln_f;
        ln_f = ln_f.ln_1p();
    }
    total + outer * ln_f
}

/// A point on the local-scale axis, stored as `ln u` and `ln(1 + u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePoint {
    pub ln_u: f64,
    pub ln_1p_u: f64,
}

impl ScalePoint {
    pub fn from_u(u: f64) -> Self {
        ScalePoint {
            ln_u: u.ln(),
            ln_1p_u: u.ln_1p(),
        }
    }

    pub fn from_ln_u(ln_u: f64) -> Self {
        let ln_1p_u = if ln_u > 36.0 {
            ln_u + (-ln_u).exp().ln_1p()
        } else {
            ln_u.exp().ln_1p()
        };
        ScalePoint { ln_u, ln_1p_u }
    }

    /// From `x = ln(1 + u)`; `x` may be infinite.
    pub fn from_ln_1p_u(x: f64) -> Self {
        let ln_u = if x == f64::INFINITY {
            f64::INFINITY
        } else {
            x + (-(-x).exp_m1()).ln()
        };
        ScalePoint { ln_u, ln_1p_u: x }
    }

    /// `ln kappa = -ln(1 + u)`.
    pub fn ln_kappa(&self) -> f64 {
        -self.ln_1p_u
    }

    /// `ln(u / (1 + u)) = ln(1 - kappa)`.
    pub fn ln_one_minus_kappa(&self) -> f64 {
        if self.ln_1p_u == f64::INFINITY {
            0.0
        } else {
            (-(-self.ln_1p_u).exp_m1()).ln()
        }
    }
}

/// `c * x` with `0 * inf = 0`.
fn scaled(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x
    }
}

/// Unnormalised log density of `u` at `p`.
pub fn ln_kernel_u_at(p: ScalePoint, spec: &PriorSpec) -> f64 {
    (spec.a - 1.0) * p.ln_u
        - (spec.a + spec.b) * p.ln_1p_u
        - ln_log_terms(spec.levels, spec.outer_exponent(), p.ln_1p_u)
}

/// Unnormalised density `u^{a-1} (1+u)^{-(a+b)} prod_{k<L} f_k(1+u)^{-1} f_L(1+u)^{-(1+gamma)}`.
pub fn kernel_u(u: f64, spec: &PriorSpec) -> Result<f64> {
    if !(u > 0.0) || u.is_nan() {
        return Err(domain(format!("kernel_u needs u > 0, got {u}")));
    }
    Ok(ln_kernel_u_at(ScalePoint::from_u(u), spec).exp())
}

/// Unnormalised density of the shrinkage factor,
/// `kappa^{b-1} (1-kappa)^{a-1} prod_{k<L} f_k(1/kappa)^{-1} f_L(1/kappa)^{-(1+gamma)}`.
pub fn kernel_kappa(kappa: f64, spec: &PriorSpec) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(domain(format!("kernel_kappa needs 0 < kappa < 1, got {kappa}")));
    }
    let ln_inv = -kappa.ln();
    let v = (spec.b - 1.0) * kappa.ln() + (spec.a - 1.0) * (-kappa).ln_1p()
        - ln_log_terms(spec.levels, spec.outer_exponent(), ln_inv);
    Ok(v.exp())
}

/// `ln pi_0(kappa; gamma, L)` given `ln(1/kappa)`, where
/// `pi_0 = (gamma/kappa) prod_{k<L} f_k(1/kappa)^{-1} f_L(1/kappa)^{-(1+gamma)}`
/// is the derivative of `f_L(1/kappa)^{-gamma}`.
fn ln_pi0(ln_inv_kappa: f64, gamma: f64, levels: u32) -> f64 {
    if ln_inv_kappa == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    gamma.ln() + ln_inv_kappa - ln_log_terms(levels, 1.0 + gamma, ln_inv_kappa)
}

/// Doubly log-adjusted kernel `pi_0(kappa; alpha, L) pi_0(1 - kappa; beta, L)`.
pub fn dlas_kernel(kappa: f64, alpha: f64, beta: f64, levels: u32) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(domain(format!("dlas_kernel needs 0 < kappa < 1, got {kappa}")));
    }
    check_dlas(alpha, beta, levels)?;
    let a = ln_pi0(-kappa.ln(), alpha, levels);
    let b = ln_pi0(-(-kappa).ln_1p(), beta, levels);
    Ok((a + b).exp())
}

fn check_dlas(alpha: f64, beta: f64, levels: u32) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(invalid("alpha and beta must be positive"));
    }
    if levels < 1 {
        return Err(invalid("L must be at least 1"));
    }
    Ok(())
}

/// Inverse of `x -> ln f_L(e^x)`: returns `x = ln z` with `ln f_L(z) = q`.
/// Overflows to infinity for astronomically large `z`.
fn inverse_ln_iter_log(levels: u32, q: f64) -> f64 {
    // With d_k = f_k - 1: d_L = expm1(q), d_{k} = expm1(d_{k+1}), ln z = d_1.
    let mut d = q.exp_m1();
    for _ in 1..levels {
        d = d.exp_m1();
    }
    d
}

/// Unnormalised mass `int_0^eps pi_0(kappa; alpha) pi_0(1-kappa; beta) dkappa`,
/// computed in `w = f_L(1/kappa)^{-alpha}`, for which `pi_0(kappa; alpha) dkappa = dw`.
fn dlas_left_mass(eps: f64, alpha: f64, beta: f64, levels: u32, tol: &QuadratureSpec) -> Result<f64> {
    let w_hi = (-alpha * iter_log_ln(levels, -eps.ln()).ln()).exp();
    integrate(
        |w| {
            let q = -w.ln() / alpha;
            let ln_inv_kappa = inverse_ln_iter_log(levels, q);
            let kappa = (-ln_inv_kappa).exp();
            ln_pi0(-(-kappa).ln_1p(), beta, levels).exp()
        },
        0.0,
        w_hi,
        tol,
    )
}

/// Ratio of prior mass on `(0, eps)` to mass on `(1 - eps, 1)` under the
/// doubly log-adjusted prior.
pub fn dlas_ratio(eps: f64, alpha: f64, beta: f64, levels: u32) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    check_dlas(alpha, beta, levels)?;
    let tol = QuadratureSpec::with_tolerance(1e-11);
    // Mass on (1 - eps, 1) equals the left mass with alpha and beta swapped.
    let num = dlas_left_mass(eps, alpha, beta, levels, &tol)?;
    let den = dlas_left_mass(eps, beta, alpha, levels, &tol)?;
    Ok(num / den)
}

/// Integral of `exp(ln_phi(u)) * kernel_u(u)` over `(u_lo, u_hi)`.
///
/// The range is split at `u = 1`. Below, `s = u^a` absorbs the `u^{a-1}`
/// spike. Above, log-adjusted kernels use `q = ln f_L(1+u)`, which turns the
/// slowly varying tail into `e^{-gamma q}`; scaled beta kernels use
/// `x = ln(1+u)`, giving `e^{-b x}`.
pub fn kernel_integral<F>(
    spec: &PriorSpec,
    u_lo: f64,
    u_hi: f64,
    ln_phi: F,
    tol: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(ScalePoint) -> f64,
{
    if !(u_lo >= 0.0 && u_hi > u_lo) {
        return Err(invalid(format!("kernel integral needs 0 <= lo < hi, got ({u_lo}, {u_hi})")));
    }
    let a = spec.a;
    let outer = spec.outer_exponent();
    let mut total = 0.0;

    if u_lo < 1.0 {
        let s_lo = u_lo.powf(a);
        let s_hi = u_hi.min(1.0).powf(a);
        let lower = integrate(
            |s| {
                let p = ScalePoint::from_ln_u(s.ln() / a);
                let ln_rest = -(a + spec.b) * p.ln_1p_u - ln_log_terms(spec.levels, outer, p.ln_1p_u);
                let v = ln_phi(p) + ln_rest;
                v.exp() / a
            },
            s_lo,
            s_hi,
            tol,
        )?;
        total += lower;
    }

    if u_hi > 1.0 {
        let u_start = u_lo.max(1.0);
        let tail_tol = if u_hi.is_infinite() {
            tol.semi_infinite()
        } else {
            *tol
        };
        if spec.variant.has_log_terms() {
            let q_of = |u: f64| iter_log_ln(spec.levels, u.ln_1p()).ln();
            let q_lo = q_of(u_start);
            let q_hi = if u_hi.is_infinite() { f64::INFINITY } else { q_of(u_hi) };
            let upper = integrate(
                |q| {
                    let p = ScalePoint::from_ln_1p_u(inverse_ln_iter_log(spec.levels, q));
                    let v = ln_phi(p) + (a - 1.0) * p.ln_one_minus_kappa() - scaled(spec.b, p.ln_1p_u)
                        - spec.gamma * q;
                    v.exp()
                },
                q_lo,
                q_hi,
                &tail_tol,
            )?;
            total += upper;
        } else {
            let x_lo = u_start.ln_1p();
            let x_hi = if u_hi.is_infinite() { f64::INFINITY } else { u_hi.ln_1p() };
            let upper = integrate(
                |x| {
                    let p = ScalePoint::from_ln_1p_u(x);
                    let v = ln_phi(p) + (a - 1.0) * p.ln_one_minus_kappa() - scaled(spec.b, x);
                    v.exp()
                },
                x_lo,
                x_hi,
                &tail_tol,
            )?;
            total += upper;
        }
    }
    Ok(total)
}

/// Normalizing constant `C = int_0^inf kernel_u(u) du` by quadrature.
pub fn norm_const_quadrature(spec: &PriorSpec) -> Result<f64> {
    spec.validate()?;
    kernel_integral(
        spec,
        0.0,
        f64::INFINITY,
        |_| 0.0,
        &QuadratureSpec::with_tolerance(1e-11),
    )
}

/// Prior probability that `kappa < eps` under the normalised ILAS prior with
/// `b = 0`.
pub fn kappa_mass_below(eps: f64, gamma: f64, levels: u32, a: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let spec = if levels == 1 {
        PriorSpec::las(a, gamma)
    } else {
        PriorSpec::ilas(a, gamma, levels)
    };
    spec.validate()?;
    let tol = QuadratureSpec::with_tolerance(1e-11);
    let c = kernel_integral(&spec, 0.0, f64::INFINITY, |_| 0.0, &tol)?;
    // kappa < eps  <=>  u > 1/eps - 1
    let u_eps = (1.0 - eps) / eps;
    let mass = kernel_integral(&spec, u_eps, f64::INFINITY, |_| 0.0, &tol)?;
    Ok(mass / c)
}
