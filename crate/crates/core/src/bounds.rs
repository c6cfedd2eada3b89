//! Certified lower and upper bounds on the LAS normalizing constant for
//! `b = 0`, `L = 1`, `0 < a <= 1`.
//!
//! With `x = ln(1+u)` the constant is `C(gamma) = int_0^inf g(x) dx` where
//! `g(x) = (1 - e^{-x})^{a-1} (1+x)^{-1-gamma}` is nonincreasing. The range
//! splits into a head `(0, 1/K)`, a tail `(K, inf)` with closed-form
//! envelopes, and a middle covered by left and right Riemann sums on
//! `N = round(K^3)` cells.
//!
//! [`norm_const_bounds`] evaluates the sums directly. [`BoundTable`] gives a
//! cheaper certified relaxation for repeated use inside the sampler: the
//! `gamma`-free weights are binned once per `K`, and each `gamma` costs one
//! pass over the bins.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub lower: f64,
    pub upper: f64,
    pub k: f64,
    pub n: u64,
}

impl NormBounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, c: f64) -> bool {
        self.lower <= c && c <= self.upper
    }
}

/// Running sum with Neumaier compensation.
#[derive(Debug, Default, Clone, Copy)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

fn check(gamma: f64, a: f64, k: f64) -> Result<()> {
    if !(k >= 2.0 && k.is_finite()) {
        return Err(invalid(format!("K must be at least 2, got {k}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(a > 0.0 && a <= 1.0) {
        return Err(invalid(format!("bounds need 0 < a <= 1, got {a}")));
    }
    Ok(())
}

/// `ln (1 - e^{-x})^{a-1}`.
fn ln_weight(a: f64, x: f64) -> f64 {
    if a == 1.0 {
        0.0
    } else {
        (a - 1.0) * (-(-x).exp_m1()).ln()
    }
}

fn g(a: f64, gamma: f64, x: f64) -> f64 {
    (ln_weight(a, x) - (1.0 + gamma) * x.ln_1p()).exp()
}

#[derive(Debug, Clone)]
struct Grid {
    n: u64,
    h: f64,
    k: f64,
}

impl Grid {
    fn new(k: f64) -> Self {
        let n = (k * k * k).round() as u64;
        let h = (k * k - 1.0) / (k * n as f64);
        Grid { n, h, k }
    }

    fn x(&self, j: u64) -> f64 {
        (1.0 + j as f64 * (self.k * self.k - 1.0) / self.n as f64) / self.k
    }
}

/// Head and tail envelopes: `(lower, upper)` contributions.
fn envelopes(gamma: f64, a: f64, k: f64) -> (f64, f64) {
    let inv_k = 1.0 / k;
    let head_num = (a * (-(-inv_k).exp_m1()).ln()).exp();
    let head_up = head_num / (a * (-inv_k).exp());
    let head_lo = head_num / (a * (gamma * inv_k.ln_1p()).exp());
    let tail_lo = (-gamma * k.ln_1p()).exp() / gamma;
    let tail_up = (ln_weight(a, k) - gamma * k.ln_1p()).exp() / gamma;
    (head_lo + tail_lo, head_up + tail_up)
}

/// Bounds `lower <= C(gamma) <= upper` for the LAS constant with `b = 0`,
/// `L = 1`, evaluated directly on the `N = round(K^3)` grid.
pub fn norm_const_bounds(gamma: f64, a: f64, k: f64) -> Result<NormBounds> {
    check(gamma, a, k)?;
    let grid = Grid::new(k);
    let mut mid = Sum::default();
    for j in 1..grid.n {
        mid.add(g(a, gamma, grid.x(j)));
    }
    let mid = mid.value();
    let left = grid.h * (g(a, gamma, grid.x(0)) + mid);
    let right = grid.h * (mid + g(a, gamma, grid.x(grid.n)));
    let (env_lo, env_up) = envelopes(gamma, a, k);
    Ok(NormBounds {
        lower: env_lo + right,
        upper: env_up + left,
        k,
        n: grid.n,
    })
}

/// Interior grid points with `x` at or beyond this are summed in closed form;
/// there `(1 - e^{-x})^{a-1}` differs from 1 by less than `1e-17`.
const DIRECT_LIMIT: f64 = 40.0;
const BINS: usize = 16384;
/// Relative margin absorbing round-off in the table accumulation.
const SAFETY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default)]
struct Bin {
    /// `h * sum w_j`
    weight: f64,
    /// `h * sum w_j ln(1 + x_j)`
    moment: f64,
    lo: f64,
    hi: f64,
}

/// `gamma`-independent summary of the interior Riemann sum at one `K`.
///
/// Each bin collects grid points with nearby `l = ln(1 + x)`. Because
/// `e^{-c l}` is convex, Jensen's inequality gives a lower bound from the
/// bin's weighted mean and the chord between the bin edges gives an upper
/// bound. Points with `x >= 40` form a block whose sum is bracketed by
/// integrals of `(1+x)^{-c}`.
#[derive(Debug, Clone)]
pub struct BoundTable {
    a: f64,
    grid: Grid,
    bins: Vec<Bin>,
    /// First and last index of the closed-form block, if nonempty.
    tail_block: Option<(u64, u64)>,
}

impl BoundTable {
    pub fn new(a: f64, k: f64) -> Result<Self> {
        check(1.0, a, k)?;
        let grid = Grid::new(k);
        let last = grid.n - 1;
        // Largest interior j with x_j < DIRECT_LIMIT.
        let direct_end = if grid.x(last) < DIRECT_LIMIT {
            last
        } else {
            let step = (k * k - 1.0) / grid.n as f64;
            let mut j = ((DIRECT_LIMIT * k - 1.0) / step).floor() as u64;
            while j > 0 && grid.x(j) >= DIRECT_LIMIT {
                j -= 1;
            }
            while j < last && grid.x(j + 1) < DIRECT_LIMIT {
                j += 1;
            }
            j
        };
        let tail_block = (direct_end < last).then_some((direct_end + 1, last));

        let mut bins = vec![Bin { lo: f64::INFINITY, hi: f64::NEG_INFINITY, ..Bin::default() }; BINS];
        if direct_end >= 1 {
            let l_first = grid.x(1).ln_1p();
            let l_last = grid.x(direct_end).ln_1p();
            let span = (l_last - l_first).max(f64::MIN_POSITIVE);
            let mut sums = vec![(Sum::default(), Sum::default()); BINS];
            for j in 1..=direct_end {
                let x = grid.x(j);
                let l = x.ln_1p();
                let w = ln_weight(a, x).exp();
                let idx = (((l - l_first) / span) * BINS as f64) as usize;
                let idx = idx.min(BINS - 1);
                sums[idx].0.add(w);
                sums[idx].1.add(w * l);
                let bin = &mut bins[idx];
                bin.lo = bin.lo.min(l);
                bin.hi = bin.hi.max(l);
            }
            for (bin, (w, m)) in bins.iter_mut().zip(&sums) {
                bin.weight = grid.h * w.value();
                bin.moment = grid.h * m.value();
            }
        }
        bins.retain(|b| b.weight > 0.0);
        Ok(BoundTable { a, grid, bins, tail_block })
    }

    pub fn k(&self) -> f64 {
        self.grid.k
    }

    /// Certified bounds on `C(gamma)`, never tighter than [`norm_const_bounds`].
    pub fn bounds(&self, gamma: f64) -> Result<NormBounds> {
        check(gamma, self.a, self.grid.k)?;
        let c = 1.0 + gamma;
        let mut lo = Sum::default();
        let mut up = Sum::default();
        for bin in &self.bins {
            let mean = (bin.moment / bin.weight).clamp(bin.lo, bin.hi);
            lo.add(bin.weight * (-c * mean).exp());
            let chord = if bin.hi > bin.lo {
                let t = (mean - bin.lo) / (bin.hi - bin.lo);
                (1.0 - t) * (-c * bin.lo).exp() + t * (-c * bin.hi).exp()
            } else {
                (-c * bin.lo).exp()
            };
            up.add(bin.weight * chord);
        }
        if let Some((first, last)) = self.tail_block {
            let h = self.grid.h;
            let x_first = self.grid.x(first);
            let x_last = self.grid.x(last);
            lo.add(power_integral(gamma, x_first, x_last + h));
            let w_max = ln_weight(self.a, x_first).exp();
            up.add(w_max * power_integral(gamma, x_first - h, x_last));
        }
        let h = self.grid.h;
        let (env_lo, env_up) = envelopes(gamma, self.a, self.grid.k);
        let lower = (env_lo + h * g(self.a, gamma, self.grid.x(self.grid.n)) + lo.value()) * (1.0 - SAFETY);
        let upper = (env_up + h * g(self.a, gamma, self.grid.x(0)) + up.value()) * (1.0 + SAFETY);
        Ok(NormBounds { lower, upper, k: self.grid.k, n: self.grid.n })
    }
}

/// `int_lo^hi (1+x)^{-1-gamma} dx`.
fn power_integral(gamma: f64, lo: f64, hi: f64) -> f64 {
    let l_lo = lo.ln_1p();
    let l_hi = hi.ln_1p();
    (-gamma * l_lo).exp() * -(-gamma * (l_hi - l_lo)).exp_m1() / gamma
}

type TableKey = (u64, u64);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Arc<BoundTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<BoundTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared table for `(a, K)`, built on first use. Tables depend only on
/// `a` and `K`, so concurrent chains with the same `a` reuse them.
pub fn shared_table(a: f64, k: f64) -> Result<Arc<BoundTable>> {
    let key = (a.to_bits(), k.to_bits());
    if let Some(t) = table_cache().lock().expect("bound table cache poisoned").get(&key) {
        return Ok(Arc::clone(t));
    }
    // Built outside the lock; a concurrent duplicate build is harmless.
    let table = Arc::new(BoundTable::new(a, k)?);
    let mut cache = table_cache().lock().expect("bound table cache poisoned");
    Ok(Arc::clone(cache.entry(key).or_insert(table)))
}
