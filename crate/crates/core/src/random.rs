//! Seeded random streams and the variate generators used by the samplers.
//!
//! Every chain or replication owns its own [`RngStream`]. A stream is a
//! ChaCha8 generator keyed by a master seed and selected by a stream id, so
//! `(seed, stream_id)` pins the whole variate sequence and distinct ids give
//! non-overlapping streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {x}")))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream for a named sub-task (e.g. one method's chain inside a
    /// replication). Depends only on `(seed, stream_id, tag)`, not on how many
    /// draws this stream has already produced.
    pub fn substream(&self, tag: u64) -> RngStream {
        let seed = splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)));
        RngStream::new(seed, self.stream_id)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn sample_normal(&mut self, mean: f64, sd: f64) -> Result<f64> {
        check_finite("mean", mean)?;
        check_positive("sd", sd)?;
        Ok(mean + sd * self.standard_normal())
    }

    /// Log of a Gamma(shape, rate) draw.
    ///
    /// Small shapes use the boost `X = Y U^{1/shape}` with `Y ~ Ga(shape + 1)`,
    /// carried out in log space so that shapes like 0.005 (whose draws sit far
    /// below the smallest double) keep full information.
    pub fn sample_log_gamma(&mut self, shape: f64, rate: f64) -> Result<f64> {
        check_positive("shape", shape)?;
        check_positive("rate", rate)?;
        if shape >= 1.0 {
            let g = Gamma::new(shape, 1.0).map_err(|e| invalid(e.to_string()))?;
            let x: f64 = g.sample(&mut self.rng);
            Ok(x.ln() - rate.ln())
        } else {
            let g = Gamma::new(shape + 1.0, 1.0).map_err(|e| invalid(e.to_string()))?;
            let y: f64 = g.sample(&mut self.rng);
            let u = self.uniform();
            Ok(y.ln() + u.ln() / shape - rate.ln())
        }
    }

    /// Gamma(shape, rate) draw, density proportional to `x^{shape-1} e^{-rate x}`.
    /// Draws that would underflow are returned as `f64::MIN_POSITIVE`.
    pub fn sample_gamma(&mut self, shape: f64, rate: f64) -> Result<f64> {
        check_positive("shape", shape)?;
        check_positive("rate", rate)?;
        let x = if shape >= 1.0 {
            let g = Gamma::new(shape, 1.0).map_err(|e| invalid(e.to_string()))?;
            let x: f64 = g.sample(&mut self.rng);
            x / rate
        } else {
            self.sample_log_gamma(shape, rate)?.exp()
        };
        Ok(x.clamp(f64::MIN_POSITIVE, f64::MAX))
    }

    /// Inverse-gamma draw: the reciprocal of a Gamma(shape, rate = scale) draw.
    pub fn sample_inverse_gamma(&mut self, shape: f64, scale: f64) -> Result<f64> {
        let g = self.sample_gamma(shape, scale)?;
        Ok((1.0 / g).clamp(f64::MIN_POSITIVE, f64::MAX))
    }

    /// Generalized inverse Gaussian draw with density proportional to
    /// `x^{p-1} exp(-(psi x + chi / x) / 2)`.
    ///
    /// Valid corners: both `psi, chi > 0`; `chi = 0` with `p > 0` (a gamma law);
    /// `psi = 0` with `p < 0` (an inverse-gamma law).
    pub fn sample_gig(&mut self, p: f64, psi: f64, chi: f64) -> Result<f64> {
        check_finite("p", p)?;
        if !(psi.is_finite() && psi >= 0.0 && chi.is_finite() && chi >= 0.0) {
            return Err(invalid(format!(
                "GIG needs finite nonnegative psi and chi, got psi={psi}, chi={chi}"
            )));
        }
        if chi == 0.0 {
            if psi > 0.0 && p > 0.0 {
                return self.sample_gamma(p, psi / 2.0);
            }
            return Err(invalid(format!(
                "GIG(p={p}, psi={psi}, chi=0) is not integrable"
            )));
        }
        if psi == 0.0 {
            if p < 0.0 {
                return self.sample_inverse_gamma(-p, chi / 2.0);
            }
            return Err(invalid(format!(
                "GIG(p={p}, psi=0, chi={chi}) is not integrable"
            )));
        }

        let lambda = p.abs();
        let ln_omega = 0.5 * (psi.ln() + chi.ln());
        let ln_alpha = 0.5 * (chi.ln() - psi.ln());
        let ln_std = if lambda > 0.0 && (ln_omega < TINY_OMEGA_LN || (ln_omega < SMALL_OMEGA_LN && lambda >= 0.05)) {
            self.gig_small_omega(lambda, ln_omega)?
        } else {
            self.standard_gig(lambda, ln_omega.exp()).ln()
        };
        let ln_x = if p < 0.0 { ln_alpha - ln_std } else { ln_alpha + ln_std };
        Ok(ln_x.exp().clamp(f64::MIN_POSITIVE, f64::MAX))
    }

    /// Log of a standard GIG draw for tiny `omega`, by rejection from the
    /// `Ga(lambda, omega/2)` envelope with acceptance `exp(-omega/(2x))`.
    /// Stays in log space, so `1/omega` may exceed the double range.
    fn gig_small_omega(&mut self, lambda: f64, ln_omega: f64) -> Result<f64> {
        let ln_half_omega = ln_omega - std::f64::consts::LN_2;
        loop {
            let ln_x = self.sample_log_gamma(lambda, 1.0)? - ln_half_omega;
            if self.uniform().ln() <= -(ln_half_omega - ln_x).exp() {
                return Ok(ln_x);
            }
        }
    }

    /// Draw from the two-parameter form with density proportional to
    /// `x^{lambda-1} exp(-omega (x + 1/x) / 2)`, `lambda >= 0`, `omega > 0`.
    /// Uses the ratio-of-uniforms and rejection schemes of Hörmann & Leydold
    /// (2014), chosen by region of the parameter plane.
    fn standard_gig(&mut self, lambda: f64, omega: f64) -> f64 {
        if lambda > 2.0 || omega > 3.0 {
            self.gig_rou_shift(lambda, omega)
        } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
            self.gig_rou_noshift(lambda, omega)
        } else {
            self.gig_concave_hat(lambda, omega)
        }
    }

    fn gig_rou_noshift(&mut self, lambda: f64, omega: f64) -> f64 {
        let t = 0.5 * (lambda - 1.0);
        let s = 0.25 * omega;
        let xm = gig_mode(lambda, omega);
        let nc = t * xm.ln() - s * (xm + 1.0 / xm);
        let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
        let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
        loop {
            let u = um * self.uniform();
            let v = self.uniform();
            let x = u / v;
            if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
                return x;
            }
        }
    }

    fn gig_rou_shift(&mut self, lambda: f64, omega: f64) -> f64 {
        let t = 0.5 * (lambda - 1.0);
        let s = 0.25 * omega;
        let xm = gig_mode(lambda, omega);
        let nc = t * xm.ln() - s * (xm + 1.0 / xm);

        // Roots of the cubic bounding the shifted region.
        let a = -(2.0 * (lambda + 1.0) / omega + xm);
        let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
        let c = xm;
        let pp = b - a * a / 3.0;
        let qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
        let fi = (-qq / (2.0 * (-(pp * pp * pp) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
        let fak = 2.0 * (-pp / 3.0).sqrt();
        let y1 = fak * (fi / 3.0).cos() - a / 3.0;
        let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
        let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
        let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

        loop {
            let u = uminus + self.uniform() * (uplus - uminus);
            let v = self.uniform();
            let x = u / v + xm;
            if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
                return x;
            }
        }
    }

    /// Rejection from a three-piece hat; covers `0 <= lambda < 1` with small
    /// `omega`, down to the small-omega cutoff.
    fn gig_concave_hat(&mut self, lambda: f64, omega: f64) -> f64 {
        let xm = gig_mode(lambda, omega);
        let x0 = omega / (1.0 - lambda);
        let two_over_omega = 2.0 / omega;
        let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
        let a0 = k0 * x0;

        let (k1, a1, k2, a2);
        if x0 >= two_over_omega {
            k1 = 0.0;
            a1 = 0.0;
            k2 = x0.powf(lambda - 1.0);
            a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
        } else {
            k1 = (-omega).exp();
            a1 = if lambda < 1e-12 {
                k1 * (two_over_omega.ln() - x0.ln())
            } else {
                k1 * x0.powf(lambda) * (lambda * (two_over_omega.ln() - x0.ln())).exp_m1() / lambda
            };
            k2 = two_over_omega.powf(lambda - 1.0);
            a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
        }
        let total = a0 + a1 + a2;
        let right = x0.max(two_over_omega);

        loop {
            let mut v = total * self.uniform();
            let (x, hx);
            if v <= a0 {
                x = x0 * v / a0;
                hx = k0;
            } else {
                v -= a0;
                if v <= a1 {
                    if lambda < 1e-12 {
                        x = (x0.ln() + v / k1).exp();
                        hx = k1 / x;
                    } else {
                        let z = lambda * v / (k1 * x0.powf(lambda));
                        x = (x0.ln() + z.ln_1p() / lambda).exp();
                        hx = k1 * x.powf(lambda - 1.0);
                    }
                } else {
                    v -= a1;
                    x = -two_over_omega
                        * ((-omega / 2.0 * right).exp() - omega / (2.0 * k2) * v).ln();
                    hx = k2 * (-omega / 2.0 * x).exp();
                }
            }
            let u = self.uniform() * hx;
            if x > 0.0 && u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
                return x;
            }
        }
    }
}

// The gamma envelope accepts with probability about `1 - omega^(2 lambda)`.
const SMALL_OMEGA_LN: f64 = -13.8;
// Past this the concave hat's `2/omega` is close to overflow.
const TINY_OMEGA_LN: f64 = -600.0;

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_reproduce() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..100 {
            assert_eq!(
                a.sample_gig(-0.3, 2.0, 0.5).unwrap().to_bits(),
                b.sample_gig(-0.3, 2.0, 0.5).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(7, 0);
        let mut b = RngStream::new(7, 1);
        let xa: Vec<f64> = (0..8).map(|_| a.uniform()).collect();
        let xb: Vec<f64> = (0..8).map(|_| b.uniform()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn substream_is_independent_of_position() {
        let a = RngStream::new(11, 2);
        let mut b = RngStream::new(11, 2);
        b.uniform();
        let mut sa = a.substream(5);
        let mut sb = b.substream(5);
        assert_eq!(sa.uniform(), sb.uniform());
    }

    #[test]
    fn location_shift_under_same_stream() {
        let mut a = RngStream::new(1, 0);
        let mut b = RngStream::new(1, 0);
        for _ in 0..50 {
            let x = a.sample_normal(0.0, 1.0).unwrap() + 5.0;
            let y = b.sample_normal(5.0, 1.0).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn inverse_gamma_is_reciprocal_gamma() {
        let mut a = RngStream::new(2, 0);
        let mut b = RngStream::new(2, 0);
        for _ in 0..50 {
            let ig = a.sample_inverse_gamma(3.0, 2.0).unwrap();
            let g = b.sample_gamma(3.0, 2.0).unwrap();
            assert_eq!(ig, 1.0 / g);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut r = RngStream::new(0, 0);
        assert!(r.sample_normal(0.0, 0.0).is_err());
        assert!(r.sample_normal(f64::NAN, 1.0).is_err());
        assert!(r.sample_gamma(0.0, 1.0).is_err());
        assert!(r.sample_gamma(1.0, -1.0).is_err());
        assert!(r.sample_inverse_gamma(1.0, 0.0).is_err());
        assert!(r.sample_gig(1.0, 0.0, 0.0).is_err());
        assert!(r.sample_gig(-1.0, 1.0, 0.0).is_err());
        assert!(r.sample_gig(1.0, 0.0, 1.0).is_err());
        assert!(r.sample_gig(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn tiny_shape_gamma_stays_positive() {
        let mut r = RngStream::new(3, 0);
        for _ in 0..10_000 {
            let x = r.sample_gamma(0.005, 1.0).unwrap();
            assert!(x > 0.0 && x.is_finite());
        }
    }

    #[test]
    fn gig_extreme_chi_is_finite_positive() {
        let mut r = RngStream::new(4, 0);
        for &(p, psi, chi) in &[
            (-0.495, 2.0, 1e-300),
            (-0.495, 1e-8, 1e-300),
            (0.495, 3.0, 1e-250),
            (-0.495, 1e6, 1e3),
            (5.0, 0.1, 40.0),
            (0.0, 2.0, 1e-20),
        ] {
            for _ in 0..2000 {
                let x = r.sample_gig(p, psi, chi).unwrap();
                assert!(x > 0.0 && x.is_finite(), "p={p} psi={psi} chi={chi} -> {x}");
            }
        }
    }

    #[test]
    fn gig_degenerate_corners() {
        let mut r = RngStream::new(5, 0);
        let n = 20_000;
        let m: f64 = (0..n).map(|_| r.sample_gig(2.0, 4.0, 0.0).unwrap()).sum::<f64>() / n as f64;
        // Ga(2, rate 2) has mean 1, sd 1/sqrt(2)
        assert!((m - 1.0).abs() < 4.0 * (0.5f64).sqrt() / (n as f64).sqrt());
        let m: f64 = (0..n).map(|_| r.sample_gig(-3.0, 0.0, 4.0).unwrap()).sum::<f64>() / n as f64;
        // IG(3, 2) has mean 1, sd 1
        assert!((m - 1.0).abs() < 4.0 / (n as f64).sqrt());
    }
}
