use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{EndpointExponents, QuadEstimate, Quadrature};

/// Shared real function on the support.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tail mass left outside the core range of an infinite support.
pub const CORE_TAIL_MASS: f64 = 1e-14;

/// Open interval `(lower, upper)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportInterval {
    lower: f64,
    upper: f64,
}

impl SupportInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper || lower == f64::INFINITY {
            return Err(Error::InvalidParameter(format!(
                "support ({lower}, {upper}) is not a nonempty interval"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit() -> Self {
        Self {
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn real_line() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn positive_half_line() -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }
}

impl fmt::Display for SupportInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

/// An absolutely continuous target law together with its Stein coefficient.
///
/// The density is normalized at construction. Mean, median, the zero `x0` of
/// the coefficient and the core range used for grids are computed once by
/// [`SpecBuilder::build`]; the value is immutable afterwards and cheap to clone.
#[derive(Clone)]
pub struct DistributionSpec {
    name: String,
    support: SupportInterval,
    density: RealFn,
    log_density: Option<RealFn>,
    gamma: RealFn,
    gamma_derivative: Option<RealFn>,
    psi: Option<RealFn>,
    cdf: Option<RealFn>,
    sf: Option<RealFn>,
    known_eta: Option<RealFn>,
    exponents: EndpointExponents,
    breaks: Arc<Vec<f64>>,
    quad: Quadrature,
    mass: f64,
    mean: Option<f64>,
    median: f64,
    x0: Option<f64>,
    core: (f64, f64),
}

impl fmt::Debug for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionSpec")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("mass", &self.mass)
            .field("mean", &self.mean)
            .field("median", &self.median)
            .field("x0", &self.x0)
            .field("core", &self.core)
            .finish_non_exhaustive()
    }
}

impl DistributionSpec {
    pub fn builder<P, G>(name: &str, support: SupportInterval, density: P, gamma: G) -> SpecBuilder
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SpecBuilder::new(name, support, Arc::new(density), Arc::new(gamma))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    pub fn density(&self, x: f64) -> f64 {
        (self.density)(x)
    }

    pub fn density_fn(&self) -> RealFn {
        self.density.clone()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match &self.log_density {
            Some(f) => f(x),
            None => self.density(x).ln(),
        }
    }

    pub fn gamma(&self, x: f64) -> f64 {
        (self.gamma)(x)
    }

    pub fn gamma_fn(&self) -> RealFn {
        self.gamma.clone()
    }

    /// `γ'(x)`, from the supplied derivative or a central difference.
    pub fn gamma_derivative(&self, x: f64) -> f64 {
        match &self.gamma_derivative {
            Some(f) => f(x),
            None => central_difference(&*self.gamma, x, self.step(x)),
        }
    }

    pub fn has_gamma_derivative(&self) -> bool {
        self.gamma_derivative.is_some()
    }

    /// Log-derivative `p'/p`, from the supplied function or a central
    /// difference of the log density.
    pub fn psi(&self, x: f64) -> f64 {
        match &self.psi {
            Some(f) => f(x),
            None => central_difference(&|t| self.log_density(t), x, self.step(x)),
        }
    }

    fn step(&self, x: f64) -> f64 {
        let room = (x - self.support.lower).min(self.support.upper - x);
        (1e-5 * x.abs().max(1.0)).min(0.25 * room)
    }

    pub fn known_eta(&self) -> Option<&RealFn> {
        self.known_eta.as_ref()
    }

    pub fn exponents(&self) -> EndpointExponents {
        self.exponents
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quad
    }

    /// Integral of the density as supplied, before normalization.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn mean(&self) -> Option<f64> {
        self.mean
    }

    pub fn median(&self) -> f64 {
        self.median
    }

    /// `sup{x : γ(x) > 0}`, if `γ` changes sign.
    pub fn x0(&self) -> Option<f64> {
        self.x0
    }

    /// Interval used for grids: the support itself where finite, otherwise
    /// cut where the tail mass drops below [`CORE_TAIL_MASS`].
    pub fn core_range(&self) -> (f64, f64) {
        self.core
    }

    /// `∫_lo^hi f`, using the endpoint exponents of the density at support
    /// ends and the spec's break points.
    pub fn integrate<F>(&self, f: F, lo: f64, hi: f64) -> Result<QuadEstimate>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_with_breaks(f, lo, hi, &[])
    }

    pub fn integrate_with_breaks<F>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        extra_breaks: &[f64],
    ) -> Result<QuadEstimate>
    where
        F: Fn(f64) -> f64,
    {
        let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let ends = EndpointExponents::new(
            if a == self.support.lower {
                self.exponents.lower
            } else {
                0.0
            },
            if b == self.support.upper {
                self.exponents.upper
            } else {
                0.0
            },
        );
        let mut breaks: Vec<f64> = self.breaks.iter().copied().collect();
        breaks.extend_from_slice(extra_breaks);
        let est = self.quad.integrate_with_breaks(&f, a, b, &breaks, ends)?;
        Ok(if lo <= hi {
            est
        } else {
            QuadEstimate {
                value: -est.value,
                ..est
            }
        })
    }

    /// `∫ |p - q|` over the support. The integrand is rounding noise
    /// once the densities agree, so an absolute floor of `1e-14` applies.
    pub fn l1_distance<F>(&self, other: F) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let p = &self.density;
        let quad = Quadrature::new(1e-14, self.quad.rel_tol).with_max_panels(self.quad.max_panels);
        let (lo, hi) = (self.support.lower, self.support.upper);
        let breaks: Vec<f64> = self.breaks.to_vec();
        Ok(quad
            .integrate_with_breaks(|x| (p(x) - other(x)).abs(), lo, hi, &breaks, self.exponents)?
            .value)
    }

    /// `E[f(Z)]`.
    pub fn expect<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        self.expect_with_breaks(f, &[])
    }

    pub fn expect_with_breaks<F>(&self, f: F, extra_breaks: &[f64]) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let p = &self.density;
        let (lo, hi) = (self.support.lower, self.support.upper);
        let est = self.integrate_with_breaks(
            |t| {
                let d = p(t);
                if d == 0.0 {
                    0.0
                } else {
                    f(t) * d
                }
            },
            lo,
            hi,
            extra_breaks,
        )?;
        Ok(est.value)
    }

    fn lower_mass(&self, x: f64) -> Result<f64> {
        let p = &self.density;
        Ok(self.integrate(|t| p(t), self.support.lower, x)?.value)
    }

    fn upper_mass(&self, x: f64) -> Result<f64> {
        let p = &self.density;
        Ok(self.integrate(|t| p(t), x, self.support.upper)?.value)
    }

    /// Distribution function `F(x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= self.support.lower {
            return Ok(0.0);
        }
        if x >= self.support.upper {
            return Ok(1.0);
        }
        if let Some(f) = &self.cdf {
            return Ok(f(x));
        }
        if x <= self.median {
            self.lower_mass(x)
        } else {
            Ok(1.0 - self.upper_mass(x)?)
        }
    }

    /// Survival function `1 - F(x)`.
    pub fn sf(&self, x: f64) -> Result<f64> {
        if x <= self.support.lower {
            return Ok(1.0);
        }
        if x >= self.support.upper {
            return Ok(0.0);
        }
        if let Some(f) = &self.sf {
            return Ok(f(x));
        }
        if let Some(f) = &self.cdf {
            return Ok(1.0 - f(x));
        }
        if x > self.median {
            self.upper_mass(x)
        } else {
            Ok(1.0 - self.lower_mass(x)?)
        }
    }
}

pub(crate) fn central_difference(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    // fourth-order stencil
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Builder for [`DistributionSpec`].
pub struct SpecBuilder {
    name: String,
    support: SupportInterval,
    density: RealFn,
    log_density: Option<RealFn>,
    gamma: RealFn,
    gamma_derivative: Option<RealFn>,
    psi: Option<RealFn>,
    cdf: Option<RealFn>,
    sf: Option<RealFn>,
    known_eta: Option<RealFn>,
    exponents: Option<EndpointExponents>,
    breaks: Vec<f64>,
    quad: Quadrature,
    normalized: bool,
    mean: Option<f64>,
    median: Option<f64>,
}

impl SpecBuilder {
    pub fn new(name: &str, support: SupportInterval, density: RealFn, gamma: RealFn) -> Self {
        Self {
            name: name.to_string(),
            support,
            density,
            log_density: None,
            gamma,
            gamma_derivative: None,
            psi: None,
            cdf: None,
            sf: None,
            known_eta: None,
            exponents: None,
            breaks: Vec::new(),
            quad: Quadrature::default(),
            normalized: true,
            mean: None,
            median: None,
        }
    }

    pub fn log_density(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.log_density = Some(Arc::new(f));
        self
    }

    pub fn gamma_derivative(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.gamma_derivative = Some(Arc::new(f));
        self
    }

    pub fn psi(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.psi = Some(Arc::new(f));
        self
    }

    pub fn cdf(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.cdf = Some(Arc::new(f));
        self
    }

    pub fn sf(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sf = Some(Arc::new(f));
        self
    }

    /// Closed form of `η`, used in place of quadrature by solutions and
    /// [`DistributionSpec::known_eta`] consumers.
    pub fn known_eta(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.known_eta = Some(Arc::new(f));
        self
    }

    pub(crate) fn known_eta_arc(mut self, f: RealFn) -> Self {
        self.known_eta = Some(f);
        self
    }

    pub(crate) fn psi_arc(mut self, f: RealFn) -> Self {
        self.psi = Some(f);
        self
    }

    pub fn exponents(mut self, lower: f64, upper: f64) -> Self {
        self.exponents = Some(EndpointExponents::new(lower, upper));
        self
    }

    pub fn breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    pub fn quadrature(mut self, quad: Quadrature) -> Self {
        self.quad = quad;
        self
    }

    /// Marks the density as known only up to a constant; `build` divides by
    /// the numerically computed mass.
    pub fn unnormalized(mut self) -> Self {
        self.normalized = false;
        self
    }

    pub fn mean(mut self, mean: f64) -> Self {
        self.mean = Some(mean);
        self
    }

    pub fn median(mut self, median: f64) -> Self {
        self.median = Some(median);
        self
    }

    pub fn build(self) -> Result<DistributionSpec> {
        let support = self.support;
        let exponents = match self.exponents {
            Some(e) => e,
            None => estimate_exponents(&*self.density, support),
        };
        for e in [exponents.lower, exponents.upper] {
            if e <= -1.0 {
                return Err(Error::Condition(format!(
                    "density exponent {e} at an endpoint is not integrable"
                )));
            }
        }
        let mut breaks: Vec<f64> = self
            .breaks
            .into_iter()
            .filter(|&x| support.contains_open(x))
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut spec = DistributionSpec {
            name: self.name,
            support,
            density: self.density,
            log_density: self.log_density,
            gamma: self.gamma,
            gamma_derivative: self.gamma_derivative,
            psi: self.psi,
            cdf: self.cdf,
            sf: self.sf,
            known_eta: self.known_eta,
            exponents,
            breaks: Arc::new(breaks),
            quad: self.quad,
            mass: 1.0,
            mean: self.mean,
            median: f64::NAN,
            x0: None,
            core: (support.lower, support.upper),
        };

        let raw = spec.density.clone();
        let mass = spec
            .integrate(|t| raw(t), support.lower, support.upper)
            .map_err(|e| match e {
                Error::NoConvergence { .. } => {
                    Error::Condition(format!("normalization of '{}' diverges: {e}", spec.name))
                }
                other => other,
            })?
            .value;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Condition(format!(
                "density of '{}' has mass {mass}",
                spec.name
            )));
        }
        spec.mass = mass;
        if self.normalized {
            if (mass - 1.0).abs() > 1e-8 {
                return Err(Error::Condition(format!(
                    "density of '{}' integrates to {mass}, not 1",
                    spec.name
                )));
            }
        } else {
            let log_mass = mass.ln();
            spec.density = Arc::new(move |x| raw(x) / mass);
            if let Some(lp) = spec.log_density.take() {
                spec.log_density = Some(Arc::new(move |x| lp(x) - log_mass));
            }
            if let Some(c) = spec.cdf.take() {
                spec.cdf = Some(Arc::new(move |x| c(x) / mass));
            }
            if let Some(s) = spec.sf.take() {
                spec.sf = Some(Arc::new(move |x| s(x) / mass));
            }
        }

        spec.median = match self.median {
            Some(m) => m,
            None => find_median(&spec)?,
        };
        if spec.mean.is_none() {
            spec.mean = spec.expect(|t| t).ok().filter(|m| m.is_finite());
        }
        spec.core = core_range(&spec)?;
        spec.x0 = super::coefficients::find_x0(&spec).ok();
        Ok(spec)
    }
}

/// Two-point log-slope estimate of the density exponent at finite ends.
fn estimate_exponents(p: &dyn Fn(f64) -> f64, support: SupportInterval) -> EndpointExponents {
    let slope = |end: f64, dir: f64| -> f64 {
        if !end.is_finite() {
            return 0.0;
        }
        let width = if support.is_bounded() {
            support.upper - support.lower
        } else {
            1.0
        };
        let scale = if end == 0.0 { 1e-10 } else { 1e-7 };
        let d1 = scale * width;
        let d2 = 10.0 * d1;
        let (p1, p2) = (p(end + dir * d1), p(end + dir * d2));
        if !(p1 > 0.0 && p2 > 0.0 && p1.is_finite() && p2.is_finite()) {
            return 0.0;
        }
        let e = (p2 / p1).ln() / 10f64.ln();
        if e > -1.0 && e < -1e-3 {
            e
        } else {
            0.0
        }
    };
    EndpointExponents::new(slope(support.lower, 1.0), slope(support.upper, -1.0))
}

fn find_median(spec: &DistributionSpec) -> Result<f64> {
    let support = spec.support;
    let below = |x: f64| -> Result<bool> {
        Ok(match &spec.cdf {
            Some(f) => f(x) < 0.5,
            None => spec.lower_mass(x)? < 0.5,
        })
    };
    let start = if support.is_bounded() {
        0.5 * (support.lower + support.upper)
    } else if support.lower.is_finite() {
        support.lower + 1.0
    } else if support.upper.is_finite() {
        support.upper - 1.0
    } else {
        0.0
    };
    let (mut lo, mut hi) = (support.lower, support.upper);
    if !lo.is_finite() || !hi.is_finite() {
        let go_right = below(start)?;
        let mut step = 1.0;
        let mut inner = start;
        loop {
            let next = if go_right { start + step } else { start - step };
            if !support.contains_open(next) {
                break;
            }
            if below(next)? != go_right {
                if go_right {
                    lo = inner;
                    hi = next;
                } else {
                    lo = next;
                    hi = inner;
                }
                break;
            }
            inner = next;
            step *= 2.0;
            if step > 1e300 {
                return Err(Error::Condition("median search did not bracket".into()));
            }
        }
        if !lo.is_finite() {
            lo = if go_right { start } else { support.lower.max(-1e300) };
        }
        if !hi.is_finite() {
            hi = if go_right { support.upper.min(1e300) } else { start };
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * mid.abs().max(1.0) {
            break;
        }
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn core_range(spec: &DistributionSpec) -> Result<(f64, f64)> {
    let support = spec.support;
    let m = spec.median;
    let cut = |dir: f64| -> Result<f64> {
        let tail = |x: f64| -> Result<f64> {
            if dir > 0.0 {
                spec.sf(x)
            } else {
                spec.cdf(x)
            }
        };
        let mut inner = m;
        let mut step = 1.0;
        let mut outer = m + dir * step;
        while tail(outer)? > CORE_TAIL_MASS {
            inner = outer;
            step *= 2.0;
            outer = m + dir * step;
            if step > 1e12 {
                return Err(Error::Condition(format!(
                    "tail of '{}' is too heavy for a core range",
                    spec.name
                )));
            }
        }
        for _ in 0..40 {
            let mid = 0.5 * (inner + outer);
            if tail(mid)? > CORE_TAIL_MASS {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        Ok(outer)
    };
    let lo = if support.lower.is_finite() {
        support.lower
    } else {
        cut(-1.0)?
    };
    let hi = if support.upper.is_finite() {
        support.upper
    } else {
        cut(1.0)?
    };
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_validation() {
        assert!(SupportInterval::new(1.0, 0.0).is_err());
        assert!(SupportInterval::new(0.0, 0.0).is_err());
        assert!(SupportInterval::new(f64::NAN, 1.0).is_err());
        let s = SupportInterval::new(f64::NEG_INFINITY, 2.0).unwrap();
        assert!(s.contains_open(-1e300));
        assert!(!s.contains_open(2.0));
        assert!(s.contains_closed(2.0));
    }

    #[test]
    fn unnormalized_density_is_rescaled() {
        let spec = DistributionSpec::builder(
            "triangle",
            SupportInterval::unit(),
            |x| 3.0 * x,
            |x| 2.0 - 3.0 * x,
        )
        .unnormalized()
        .build()
        .unwrap();
        assert!((spec.mass() - 1.5).abs() < 1e-14);
        assert!((spec.density(0.5) - 1.0).abs() < 1e-14);
        assert!((spec.mean().unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert!((spec.median() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((spec.x0().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_mass_is_rejected() {
        let err = DistributionSpec::builder("bad", SupportInterval::unit(), |_| 2.0, |x| 0.5 - x)
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::Condition(_)));
    }

    #[test]
    fn exponent_estimate_detects_singularity() {
        let e = estimate_exponents(&|x: f64| 0.5 / x.sqrt(), SupportInterval::unit());
        assert!((e.lower + 0.5).abs() < 1e-6);
        assert_eq!(e.upper, 0.0);
    }

    #[test]
    fn numeric_cdf_and_sf_are_complementary() {
        let spec = DistributionSpec::builder(
            "quadratic",
            SupportInterval::unit(),
            |x| 3.0 * x * x,
            |x| 0.75 - x,
        )
        .build()
        .unwrap();
        for x in [0.1, 0.5, 0.9] {
            let f = spec.cdf(x).unwrap();
            assert!((f - x * x * x).abs() < 1e-14);
            assert!((f + spec.sf(x).unwrap() - 1.0).abs() < 1e-14);
        }
    }
}
