//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! The rule is open, so integrable endpoint singularities are never evaluated.
//! Intervals are bisected dyadically, worst error first. Semi-infinite ranges
//! are mapped onto a finite one with `x = lo + t / (1 - t)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    None,
    /// `x = lo + t/(1-t)`, taking `(lo, inf)` to `(0, 1)`.
    SemiInfinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    /// Floor on the error target; zero means purely relative.
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
    pub transform: Transform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            relative_tolerance: 1e-10,
            absolute_tolerance: 0.0,
            max_subdivisions: 5000,
            transform: Transform::None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerance(relative_tolerance: f64) -> Self {
        QuadratureSpec {
            relative_tolerance,
            ..Default::default()
        }
    }

    pub fn semi_infinite(mut self) -> Self {
        self.transform = Transform::SemiInfinite;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0 && self.relative_tolerance.is_finite()) {
            return Err(invalid("relative tolerance must be positive"));
        }
        if !(self.absolute_tolerance >= 0.0) {
            return Err(invalid("absolute tolerance must be nonnegative"));
        }
        if self.max_subdivisions == 0 {
            return Err(invalid("max subdivisions must be at least 1"));
        }
        Ok(())
    }
}

/// Value and error estimate of a converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(domain(format!("integrand not finite at {center}")));
    }
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(domain(format!(
                "integrand not finite near {center} +- {dx}"
            )));
        }
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let asc = asc * half.abs();
    let abs_val = abs_sum * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_val > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_val);
    }
    Ok((value, err))
}

fn adapt<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let (v0, e0) = gauss_kronrod(&mut f, lo, hi)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        lo,
        hi,
        value: v0,
        error: e0,
    });
    let mut total = v0;
    let mut total_err = e0;
    let mut subdivisions = 1;
    // Segments too narrow to split further; their error is frozen.
    let mut frozen_err = 0.0;
    loop {
        let target = (spec.relative_tolerance * total.abs()).max(spec.absolute_tolerance);
        if total_err <= target {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            break;
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.lo + seg.hi);
        if mid <= seg.lo || mid >= seg.hi || (seg.hi - seg.lo) < 4.0 * f64::EPSILON * mid.abs() {
            frozen_err += seg.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gauss_kronrod(&mut f, seg.lo, mid)?;
        let (v2, e2) = gauss_kronrod(&mut f, mid, seg.hi)?;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        subdivisions += 1;
        heap.push(Segment {
            lo: seg.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            lo: mid,
            hi: seg.hi,
            value: v2,
            error: e2,
        });
        if subdivisions % 64 == 0 {
            // Resum to stop drift from the incremental updates.
            total = heap.iter().map(|s| s.value).sum::<f64>();
            total_err = heap.iter().map(|s| s.error).sum::<f64>() + frozen_err;
        }
    }
    total = heap.iter().map(|s| s.value).sum::<f64>();
    total_err = heap.iter().map(|s| s.error).sum::<f64>() + frozen_err;
    let target = (spec.relative_tolerance * total.abs()).max(spec.absolute_tolerance);
    if total_err <= target {
        return Ok(Estimate {
            value: total,
            error: total_err,
            subdivisions,
        });
    }
    Err(Error::Convergence {
        estimate: total,
        residual: total_err,
    })
}

/// Integrate `f` over `(lo, hi)`. With [`Transform::SemiInfinite`], `hi` may be
/// `f64::INFINITY`.
pub fn integrate_with_error<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    spec.validate()?;
    if lo.is_nan() || hi.is_nan() || !(lo < hi) {
        return Err(invalid(format!("need lo < hi, got ({lo}, {hi})")));
    }
    if !lo.is_finite() {
        return Err(invalid("lower limit must be finite"));
    }
    match spec.transform {
        Transform::None => {
            if !hi.is_finite() {
                return Err(invalid("infinite upper limit needs the semi-infinite transform"));
            }
            adapt(f, lo, hi, spec)
        }
        Transform::SemiInfinite => {
            if hi.is_finite() {
                // (lo, hi) maps to (0, t_hi) with t_hi = d / (1 + d).
                let d = hi - lo;
                let t_hi = d / (1.0 + d);
                adapt(
                    |t| {
                        let w = 1.0 - t;
                        f(lo + t / w) / (w * w)
                    },
                    0.0,
                    t_hi,
                    spec,
                )
            } else {
                adapt(
                    |t| {
                        let w = 1.0 - t;
                        let v = f(lo + t / w);
                        if v == 0.0 {
                            0.0
                        } else {
                            v / (w * w)
                        }
                    },
                    0.0,
                    1.0,
                    spec,
                )
            }
        }
    }
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_with_error(f, lo, hi, spec).map(|e| e.value)
}
