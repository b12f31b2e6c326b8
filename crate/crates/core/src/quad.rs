//! Adaptive Gauss–Kronrod quadrature.
//!
//! Panels are integrated with the 21-point Kronrod rule (embedded 10-point
//! Gauss rule for the error estimate) and bisected in order of decreasing
//! error until the total error estimate is below
//! `max(abs_tol, rel_tol * ∫|f|)`.
//!
//! Finite endpoints with a known power singularity `f(t) ~ |t - c|^e`,
//! `-1 < e < 0`, are handled by the substitution `t = c ± L v^(1/(e+1))`,
//! which turns the singular factor into a bounded one. When `c != 0` the
//! distance `|t - c|` cannot be represented below the spacing of floats near
//! `c`, so the last `1e-6 L` next to the endpoint is integrated from a
//! two-term expansion `|t - c|^e (c0 + c1 |t - c|)` fitted at two exactly
//! representable distances. Infinite ends are mapped to `[0, 1)` with
//! `t = c ± u / (1 - u)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_155_334,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const TAIL_FRACTION: f64 = 1e-6;

/// Power-law behaviour of an integrand at the two ends of a finite interval.
///
/// An exponent `e` means `f(t)` behaves like `|t - end|^e`. Only exponents in
/// `(-1, 0)` change the algorithm; anything else is treated as regular.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EndpointExponents {
    pub lower: f64,
    pub upper: f64,
}

impl EndpointExponents {
    pub const REGULAR: Self = Self {
        lower: 0.0,
        upper: 0.0,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    fn singular(e: f64) -> bool {
        e > -1.0 && e < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    /// Estimate of `∫|f|`, used for the relative tolerance.
    pub abs_value: f64,
    pub panels: usize,
}

impl QuadEstimate {
    pub const ZERO: Self = Self {
        value: 0.0,
        error: 0.0,
        abs_value: 0.0,
        panels: 0,
    };

    fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            abs_value: self.abs_value + other.abs_value,
            panels: self.panels + other.panels,
        }
    }

    fn negate(self) -> Self {
        Self {
            value: -self.value,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn checked(f: &dyn Fn(f64) -> f64, t: f64) -> Result<f64> {
    let v = f(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Condition(format!(
            "integrand is not finite at {t:e} (value {v})"
        )))
    }
}

fn kronrod21(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Panel> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = checked(f, centre)?;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = checked(f, centre - dx)?;
        let f2 = checked(f, centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let width = half.abs();
    let value = res_k * half;
    res_abs *= width;
    res_asc *= width;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        lo,
        hi,
        value,
        error,
        abs_value: res_abs,
    })
}

/// Adaptive quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_panels: 4000,
        }
    }
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }

    /// Integrates `f` over `[lo, hi]` with regular endpoints. Either end may be
    /// infinite; `lo > hi` gives the negated integral.
    pub fn integrate<F>(&self, f: F, lo: f64, hi: f64) -> Result<QuadEstimate>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_singular(f, lo, hi, EndpointExponents::REGULAR)
    }

    /// Integrates `f` over `[lo, hi]` where `f` may have power singularities
    /// at finite endpoints, described by `ends`.
    pub fn integrate_singular<F>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        ends: EndpointExponents,
    ) -> Result<QuadEstimate>
    where
        F: Fn(f64) -> f64,
    {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::Condition("integration limit is NaN".into()));
        }
        if lo == hi {
            return Ok(QuadEstimate::ZERO);
        }
        if lo > hi {
            let swapped = EndpointExponents::new(ends.upper, ends.lower);
            return Ok(self.integrate_singular(f, hi, lo, swapped)?.negate());
        }
        self.segments(&f, lo, hi, ends)
    }

    /// As [`Quadrature::integrate_singular`], with the interval split at the
    /// given interior break points (kinks, discontinuities, mode locations).
    pub fn integrate_with_breaks<F>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        breaks: &[f64],
        ends: EndpointExponents,
    ) -> Result<QuadEstimate>
    where
        F: Fn(f64) -> f64,
    {
        if lo > hi {
            let swapped = EndpointExponents::new(ends.upper, ends.lower);
            return Ok(self.integrate_with_breaks(f, hi, lo, breaks, swapped)?.negate());
        }
        let mut points: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&x| x > lo && x < hi)
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.is_empty() {
            return self.integrate_singular(f, lo, hi, ends);
        }
        let mut total = QuadEstimate::ZERO;
        let mut left = lo;
        let last = points.len();
        for (i, &right) in points.iter().chain(std::iter::once(&hi)).enumerate() {
            let seg_ends = EndpointExponents::new(
                if i == 0 { ends.lower } else { 0.0 },
                if i == last { ends.upper } else { 0.0 },
            );
            total = total.combine(self.segments(&f, left, right, seg_ends)?);
            left = right;
        }
        Ok(total)
    }

    fn segments(
        &self,
        f: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        ends: EndpointExponents,
    ) -> Result<QuadEstimate> {
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let left = self.lower_infinite(f, 0.0)?;
                let right = self.upper_infinite(f, 0.0)?;
                Ok(left.combine(right))
            }
            (true, false) => {
                if EndpointExponents::singular(ends.lower) {
                    let cut = lo + 1.0;
                    let near = self.finite(f, lo, cut, EndpointExponents::new(ends.lower, 0.0))?;
                    Ok(near.combine(self.upper_infinite(f, cut)?))
                } else {
                    self.upper_infinite(f, lo)
                }
            }
            (false, true) => {
                if EndpointExponents::singular(ends.upper) {
                    let cut = hi - 1.0;
                    let near = self.finite(f, cut, hi, EndpointExponents::new(0.0, ends.upper))?;
                    Ok(near.combine(self.lower_infinite(f, cut)?))
                } else {
                    self.lower_infinite(f, hi)
                }
            }
            (true, true) => self.finite(f, lo, hi, ends),
        }
    }

    fn finite(
        &self,
        f: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        ends: EndpointExponents,
    ) -> Result<QuadEstimate> {
        let sing_lo = EndpointExponents::singular(ends.lower);
        let sing_hi = EndpointExponents::singular(ends.upper);
        match (sing_lo, sing_hi) {
            (false, false) => self.adaptive(f, lo, hi),
            (true, false) => self.singular_end(f, lo, hi - lo, 1.0, ends.lower),
            (false, true) => self.singular_end(f, hi, hi - lo, -1.0, ends.upper),
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                let left = self.singular_end(f, lo, mid - lo, 1.0, ends.lower)?;
                let right = self.singular_end(f, hi, hi - mid, -1.0, ends.upper)?;
                Ok(left.combine(right))
            }
        }
    }

    /// Integral over the segment of length `len` starting at the singular
    /// endpoint `end` and extending in direction `dir`; always taken with the
    /// segment's natural orientation.
    fn singular_end(
        &self,
        f: &dyn Fn(f64) -> f64,
        end: f64,
        len: f64,
        dir: f64,
        exponent: f64,
    ) -> Result<QuadEstimate> {
        let power = 1.0 / (exponent + 1.0);
        let mut tail = QuadEstimate::ZERO;
        let mut inner = 0.0;
        if end != 0.0 {
            let t1 = end + dir * TAIL_FRACTION * len;
            let d1 = (t1 - end).abs();
            let t2 = end + dir * 0.5 * d1;
            let d2 = (t2 - end).abs();
            if d1 > 0.0 && d2 > 0.0 && d1 != d2 {
                let r1 = checked(f, t1)? / d1.powf(exponent);
                let r2 = checked(f, t2)? / d2.powf(exponent);
                let c1 = (r1 - r2) / (d1 - d2);
                let c0 = r1 - c1 * d1;
                let value = c0 * d1.powf(exponent + 1.0) / (exponent + 1.0)
                    + c1 * d1.powf(exponent + 2.0) / (exponent + 2.0);
                let abs_value = value.abs();
                tail = QuadEstimate {
                    value,
                    error: 1e-3 * (c1 * d1.powf(exponent + 2.0)).abs()
                        + 4.0 * f64::EPSILON * abs_value,
                    abs_value,
                    panels: 1,
                };
                inner = (d1 / len).powf(1.0 / power);
            }
        }
        let g = |v: f64| -> f64 {
            let r = len * v.powf(power);
            let t = end + dir * r;
            if t == end {
                return 0.0;
            }
            let fv = f(t);
            if fv == 0.0 {
                return 0.0;
            }
            fv * len * power * v.powf(power - 1.0)
        };
        let body = self.adaptive(&g, inner, 1.0)?;
        Ok(body.combine(tail))
    }

    fn upper_infinite(&self, f: &dyn Fn(f64) -> f64, lo: f64) -> Result<QuadEstimate> {
        let g = |u: f64| -> f64 {
            let s = 1.0 - u;
            let fv = f(lo + u / s);
            if fv == 0.0 {
                0.0
            } else {
                fv / (s * s)
            }
        };
        self.adaptive(&g, 0.0, 1.0)
    }

    fn lower_infinite(&self, f: &dyn Fn(f64) -> f64, hi: f64) -> Result<QuadEstimate> {
        let g = |u: f64| -> f64 {
            let s = 1.0 - u;
            let fv = f(hi - u / s);
            if fv == 0.0 {
                0.0
            } else {
                fv / (s * s)
            }
        };
        self.adaptive(&g, 0.0, 1.0)
    }

    fn adaptive(&self, f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<QuadEstimate> {
        let first = kronrod21(f, lo, hi)?;
        let mut value = first.value;
        let mut error = first.error;
        let mut abs_value = first.abs_value;
        let mut heap = BinaryHeap::from([first]);
        let mut settled: Vec<Panel> = Vec::new();
        while error > self.abs_tol.max(self.rel_tol * abs_value) {
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.lo + worst.hi);
            let tiny = 4.0 * f64::EPSILON * worst.lo.abs().max(worst.hi.abs());
            if !(mid > worst.lo && mid < worst.hi) || worst.hi - worst.lo <= tiny {
                settled.push(worst);
                continue;
            }
            if heap.len() + settled.len() + 2 > self.max_panels {
                return Err(Error::NoConvergence {
                    what: "adaptive quadrature",
                    iterations: self.max_panels,
                    estimate: value,
                    error,
                });
            }
            let left = kronrod21(f, worst.lo, mid)?;
            let right = kronrod21(f, mid, worst.hi)?;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            abs_value += left.abs_value + right.abs_value - worst.abs_value;
            heap.push(left);
            heap.push(right);
        }
        let mut out = QuadEstimate::ZERO;
        for p in heap.iter().chain(settled.iter()) {
            out.value += p.value;
            out.error += p.error;
            out.abs_value += p.abs_value;
            out.panels += 1;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0).unwrap();
        let exact = (256.0 - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn reversed_limits_negate() {
        let q = Quadrature::default();
        let a = q.integrate(f64::exp, 0.0, 1.0).unwrap().value;
        let b = q.integrate(f64::exp, 1.0, 0.0).unwrap().value;
        assert_eq!(a, -b);
    }

    #[test]
    fn gaussian_over_real_line() {
        let q = Quadrature::default();
        let r = q
            .integrate(|x| (-0.5 * x * x).exp(), f64::NEG_INFINITY, f64::INFINITY)
            .unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exponential_tail() {
        let q = Quadrature::default();
        let r = q.integrate(|x| (-x).exp(), 1.0, f64::INFINITY).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn singular_lower_end() {
        let q = Quadrature::default();
        let ends = EndpointExponents::new(-0.5, 0.0);
        let r = q.integrate_singular(|x| 1.0 / x.sqrt(), 0.0, 1.0, ends).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13, "{r:?}");
    }

    #[test]
    fn singular_upper_end_away_from_zero() {
        // ∫_0^1 (1-x)^(-0.7) dx = 1/0.3
        let q = Quadrature::default();
        let ends = EndpointExponents::new(0.0, -0.7);
        let r = q
            .integrate_singular(|x| (1.0 - x).powf(-0.7), 0.0, 1.0, ends)
            .unwrap();
        assert!((r.value - 1.0 / 0.3).abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn both_ends_singular() {
        // B(1/2, 1/2) = π
        let q = Quadrature::default();
        let ends = EndpointExponents::new(-0.5, -0.5);
        let r = q
            .integrate_singular(|x| 1.0 / (x * (1.0 - x)).sqrt(), 0.0, 1.0, ends)
            .unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn breaks_handle_kinks() {
        let q = Quadrature::default();
        let r = q
            .integrate_with_breaks(|x| (x - 0.3).abs(), 0.0, 1.0, &[0.3], EndpointExponents::REGULAR)
            .unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let q = Quadrature::default();
        assert!(q.integrate(|_| f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn panel_budget_is_enforced() {
        let q = Quadrature::default().with_max_panels(4);
        let err = q.integrate(|x| (50.0 * x).sin().abs(), 0.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }
}
