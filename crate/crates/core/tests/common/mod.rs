#![allow(dead_code)]

/// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_distance(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance of probability-integral-transform values from Uniform(0, 1).
pub fn ks_uniform(pit: Vec<f64>) -> f64 {
    ks_distance(pit, |p| p.clamp(0.0, 1.0))
}

/// Tabulated CDF of a density given on the log scale, `g(z) = ln p(e^z) + z`,
/// built by Simpson's rule on a grid that covers every point within
/// `exp(-60)` of the maximum.
pub struct LogGridCdf {
    z: Vec<f64>,
    cum: Vec<f64>,
}

impl LogGridCdf {
    pub fn new(g: impl Fn(f64) -> f64, z_lo: f64, z_hi: f64) -> Self {
        // Locate the mode coarsely, then trim to the region that matters.
        let coarse = 20_000;
        let h = (z_hi - z_lo) / coarse as f64;
        let vals: Vec<f64> = (0..=coarse).map(|i| g(z_lo + i as f64 * h)).collect();
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let first = vals.iter().position(|&v| v > top - 60.0).unwrap();
        let last = vals.iter().rposition(|&v| v > top - 60.0).unwrap();
        let lo = z_lo + first.saturating_sub(1) as f64 * h;
        let hi = z_lo + (last + 1).min(coarse) as f64 * h;

        let m = 200_000;
        let h = (hi - lo) / m as f64;
        let z: Vec<f64> = (0..=m).map(|i| lo + i as f64 * h).collect();
        let w: Vec<f64> = z.iter().map(|&zi| (g(zi) - top).exp()).collect();
        let mut cum = vec![0.0; m + 1];
        for i in 1..=m {
            // Trapezoid with a Simpson correction from the neighbouring midpoint.
            let mid = (g(0.5 * (z[i - 1] + z[i])) - top).exp();
            cum[i] = cum[i - 1] + h / 6.0 * (w[i - 1] + 4.0 * mid + w[i]);
        }
        let total = cum[m];
        cum.iter_mut().for_each(|c| *c /= total);
        LogGridCdf { z, cum }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.cdf_log(x.ln())
    }

    /// CDF at `x = e^zx`, for arguments outside the double range of `x`.
    pub fn cdf_log(&self, zx: f64) -> f64 {
        if zx <= self.z[0] {
            return 0.0;
        }
        if zx >= *self.z.last().unwrap() {
            return 1.0;
        }
        let h = self.z[1] - self.z[0];
        let i = ((zx - self.z[0]) / h) as usize;
        let frac = (zx - self.z[i]) / h;
        self.cum[i] + frac * (self.cum[i + 1] - self.cum[i])
    }
}

/// Log of the GIG density up to a constant, as a function of `z = ln x`,
/// including the Jacobian `x`.
pub fn gig_log_in_z(p: f64, psi: f64, chi: f64) -> impl Fn(f64) -> f64 {
    move |z: f64| p * z - 0.5 * (psi * z.exp() + chi * (-z).exp())
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}
