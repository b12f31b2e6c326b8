//! The coefficient pair `(γ, η)`: validation, `I`, `η`, the sign change `x0`,
//! Mills-ratio diagnostics and density reconstruction.

use std::sync::Arc;

use serde::Serialize;

use super::spec::{DistributionSpec, RealFn, SupportInterval};
use crate::error::{Error, Result};
use crate::quad::{EndpointExponents, Quadrature};
use crate::supnorm::{chebyshev_grid, GridKind};

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub grid_size: usize,
    pub density_positive: bool,
    pub min_density: f64,
    /// Number of grid steps on which `γ` increases.
    pub monotonicity_violations: usize,
    pub max_increase: f64,
    pub gamma_monotone: bool,
    /// `|∫ γ p|`.
    pub gamma_mean_abs: f64,
    pub gamma_mean_zero: bool,
    pub gamma_changes_sign: bool,
    pub passed: bool,
}

/// Checks positivity of the density, monotonicity of `γ` and `E[γ(Z)] = 0`.
///
/// A non-positive density value on the grid is a hard error.
pub fn validate_spec(spec: &DistributionSpec, grid_size: usize) -> Result<ValidationReport> {
    let (lo, hi) = spec.core_range();
    let grid = chebyshev_grid(lo, hi, grid_size.max(3), GridKind::Open);
    let mut min_density = f64::INFINITY;
    for &x in &grid {
        let p = spec.density(x);
        if !(p > 0.0) {
            return Err(Error::Condition(format!(
                "density of '{}' is {p} at x = {x}",
                spec.name()
            )));
        }
        min_density = min_density.min(p);
    }
    let gammas: Vec<f64> = grid.iter().map(|&x| spec.gamma(x)).collect();
    let scale = gammas.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1.0);
    let mut violations = 0;
    let mut max_increase: f64 = 0.0;
    for w in gammas.windows(2) {
        let rise = w[1] - w[0];
        if rise > 1e-12 * scale {
            violations += 1;
            max_increase = max_increase.max(rise);
        }
    }
    let g = spec.gamma_fn();
    let est = spec.integrate(
        |t| {
            let p = spec.density(t);
            if p == 0.0 {
                0.0
            } else {
                g(t) * p
            }
        },
        spec.support().lower(),
        spec.support().upper(),
    )?;
    let gamma_mean_abs = est.value.abs();
    let gamma_mean_zero = gamma_mean_abs <= 1e-10 * est.abs_value.max(1.0);
    let gamma_changes_sign =
        gammas.first().is_some_and(|&g| g > 0.0) && gammas.last().is_some_and(|&g| g < 0.0);
    let gamma_monotone = violations == 0;
    Ok(ValidationReport {
        grid_size: grid.len(),
        density_positive: true,
        min_density,
        monotonicity_violations: violations,
        max_increase,
        gamma_monotone,
        gamma_mean_abs,
        gamma_mean_zero,
        gamma_changes_sign,
        passed: gamma_monotone && gamma_mean_zero,
    })
}

/// `sup{x : γ(x) > 0}` by bisection on the nonincreasing `γ`.
///
/// On a zero plateau this is the left edge of the plateau, the supremum of
/// the set where `γ` is strictly positive.
pub fn find_x0(spec: &DistributionSpec) -> Result<f64> {
    let support = spec.support();
    let (lo, hi) = spec.core_range();
    let kind = if support.is_bounded() {
        GridKind::Closed
    } else {
        GridKind::Open
    };
    let grid = chebyshev_grid(lo, hi, 513, kind);
    let first_nonpositive = grid.iter().position(|&x| !(spec.gamma(x) > 0.0));
    let j = match first_nonpositive {
        None => {
            return Err(Error::Condition(format!(
                "γ of '{}' is positive on the whole grid",
                spec.name()
            )))
        }
        Some(0) => {
            return Err(Error::Condition(format!(
                "γ of '{}' is nonpositive on the whole grid",
                spec.name()
            )))
        }
        Some(j) => j,
    };
    let (mut a, mut b) = (grid[j - 1], grid[j]);
    while b - a > 1e-13 * b.abs().max(1.0) {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if spec.gamma(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn check_open(spec: &DistributionSpec, x: f64, what: &'static str) -> Result<Option<f64>> {
    let s = spec.support();
    if x == s.lower() || x == s.upper() {
        return Ok(Some(0.0));
    }
    if !s.contains_open(x) {
        return Err(Error::domain(what, x));
    }
    Ok(None)
}

/// `I(x) = ∫_a^x γ p`, integrated over the side of `x0` containing `x` so the
/// integrand has one sign. Vanishes at finite endpoints.
pub fn gamma_integral(spec: &DistributionSpec, x: f64) -> Result<f64> {
    if let Some(v) = check_open(spec, x, "gamma_integral")? {
        return Ok(v);
    }
    let g = spec.gamma_fn();
    let p = spec.density_fn();
    let f = |t: f64| {
        let d = p(t);
        if d == 0.0 {
            0.0
        } else {
            g(t) * d
        }
    };
    let s = spec.support();
    let upper_side = spec.x0().is_some_and(|x0| x > x0);
    let value = if upper_side {
        -spec.integrate(f, x, s.upper())?.value
    } else {
        spec.integrate(f, s.lower(), x)?.value
    };
    Ok(value.max(0.0))
}

/// `η(x) = I(x) / p(x)`, always by quadrature; zero at finite endpoints.
pub fn compute_eta(spec: &DistributionSpec, x: f64) -> Result<f64> {
    if let Some(v) = check_open(spec, x, "compute_eta")? {
        return Ok(v);
    }
    let p = spec.density(x);
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Condition(format!(
            "density of '{}' is {p} at x = {x}",
            spec.name()
        )));
    }
    Ok(gamma_integral(spec, x)? / p)
}

/// `η(x)`, from the closed form when the spec has one.
pub fn eta_at(spec: &DistributionSpec, x: f64) -> Result<f64> {
    if let Some(v) = check_open(spec, x, "eta_at")? {
        return Ok(v);
    }
    match spec.known_eta() {
        Some(f) => Ok(f(x)),
        None => compute_eta(spec, x),
    }
}

/// `I(x) = η(x) p(x)`, from the closed form of `η` when available.
pub fn gamma_integral_fast(spec: &DistributionSpec, x: f64) -> Result<f64> {
    if let Some(v) = check_open(spec, x, "gamma_integral")? {
        return Ok(v);
    }
    match spec.known_eta() {
        Some(f) => Ok(f(x) * spec.density(x)),
        None => gamma_integral(spec, x),
    }
}

/// Stein kernel `τ(x) = (1/p(x)) ∫_a^x (E[Z] - t) p(t) dt`.
pub fn stein_kernel(spec: &DistributionSpec, x: f64) -> Result<f64> {
    if let Some(v) = check_open(spec, x, "stein_kernel")? {
        return Ok(v);
    }
    let mean = spec
        .mean()
        .ok_or_else(|| Error::Condition(format!("'{}' has no finite mean", spec.name())))?;
    let p = spec.density_fn();
    let f = |t: f64| {
        let d = p(t);
        if d == 0.0 {
            0.0
        } else {
            (mean - t) * d
        }
    };
    let s = spec.support();
    let value = if x > mean {
        -spec.integrate(f, x, s.upper())?.value
    } else {
        spec.integrate(f, s.lower(), x)?.value
    };
    Ok(value.max(0.0) / spec.density(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MillsVerdict {
    /// Values decrease along the sequence and end below the tolerance.
    PlausiblyHolds,
    /// The sequence is not monotone.
    Inconclusive,
    /// The sequence is monotone but does not approach zero.
    Fails,
}

#[derive(Debug, Clone, Serialize)]
pub struct MillsEstimate {
    pub endpoint: Endpoint,
    /// `(x_k, ratio_k)` along the geometric sequence.
    pub sequence: Vec<(f64, f64)>,
    pub last: f64,
    pub monotone: bool,
    pub verdict: MillsVerdict,
}

/// Evaluates `F(x)/p(x)` (or `(1 - F(x))/p(x)`) along `x_k = end ± w 2^-k`.
pub fn mills_limit_estimate(
    spec: &DistributionSpec,
    endpoint: Endpoint,
    steps: usize,
    tol: f64,
) -> Result<MillsEstimate> {
    let s = spec.support();
    let (end, dir) = match endpoint {
        Endpoint::Lower => (s.lower(), 1.0),
        Endpoint::Upper => (s.upper(), -1.0),
    };
    if !end.is_finite() {
        return Err(Error::InvalidParameter(
            "the Mills ratio limit needs a finite endpoint".into(),
        ));
    }
    let width = 0.5 * (spec.median() - end).abs();
    let mut sequence = Vec::with_capacity(steps);
    for k in 1..=steps {
        let x = end + dir * width * 2f64.powi(-(k as i32));
        if x == end {
            break;
        }
        let mass = match endpoint {
            Endpoint::Lower => spec.cdf(x)?,
            Endpoint::Upper => spec.sf(x)?,
        };
        sequence.push((x, mass / spec.density(x)));
    }
    let last = sequence.last().map_or(f64::NAN, |p| p.1);
    let monotone = sequence
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9) + 1e-300);
    let verdict = if !monotone {
        MillsVerdict::Inconclusive
    } else if last <= tol {
        MillsVerdict::PlausiblyHolds
    } else {
        MillsVerdict::Fails
    };
    Ok(MillsEstimate {
        endpoint,
        sequence,
        last,
        monotone,
        verdict,
    })
}

/// Relative distance to a finite nonzero endpoint below which `Q` is
/// extrapolated logarithmically instead of integrated.
const RESOLVED_DISTANCE: f64 = 1e-6;

/// Trend of `Q(x) = ∫_{x0}^x γ/η` toward one endpoint.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceTrend {
    pub endpoint: Endpoint,
    pub last_q: f64,
    /// Decrease of `Q` over the last halving of the distance to the endpoint.
    pub last_step: f64,
    /// `Q` is decreasing and either below -30 or still dropping by a stable
    /// amount per halving (logarithmic divergence).
    pub plausible: bool,
}

/// A density rebuilt from `(γ, η)` together with the diagnostics of the
/// reconstruction.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub spec: DistributionSpec,
    /// `K` from numeric normalization.
    pub k_numeric: f64,
    /// `E|γ(Z)|/2` under the rebuilt density.
    pub k_formula: f64,
    pub trends: Vec<DivergenceTrend>,
}

/// Rebuilds `p(x) = K/η(x) exp(∫_{x0}^x γ/η)` on `support`.
///
/// `Q = ∫_{x0}^x γ/η` is tabulated at anchors accumulating toward both ends;
/// the density at a point integrates from the nearest anchor.
pub fn density_from_coefficients(
    name: &str,
    gamma: RealFn,
    eta: RealFn,
    support: SupportInterval,
    x0_hint: Option<f64>,
) -> Result<Reconstruction> {
    // Q is a logarithm: an absolute error of 1e-15 is a relative one in p
    let quad = Quadrature::new(1e-15, 1e-12);
    let x0 = match x0_hint {
        Some(x) => x,
        None => locate_sign_change(&*gamma, support)?,
    };
    if !support.contains_open(x0) {
        return Err(Error::InvalidParameter(format!(
            "x0 = {x0} is outside the support {support}"
        )));
    }
    let ratio = {
        let (g, e) = (gamma.clone(), eta.clone());
        Arc::new(move |t: f64| g(t) / e(t)) as RealFn
    };
    let mut anchors: Vec<(f64, f64)> = vec![(x0, 0.0)];
    let mut trends = Vec::new();
    // (end, outermost anchor, Q there, decrease of Q per halving)
    let mut tails: Vec<(f64, f64, f64, f64)> = Vec::new();
    for endpoint in [Endpoint::Lower, Endpoint::Upper] {
        let (points, trend, cut) = anchor_walk(&quad, &ratio, x0, support, endpoint)?;
        if cut {
            if let Some(&(x, q)) = points.last() {
                let end = match endpoint {
                    Endpoint::Lower => support.lower(),
                    Endpoint::Upper => support.upper(),
                };
                tails.push((end, x, q, trend.last_step));
            }
        }
        anchors.extend(points);
        trends.push(trend);
    }
    anchors.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(t) = trends.iter().find(|t| !t.plausible) {
        return Err(Error::Condition(format!(
            "∫ γ/η does not diverge to -∞ toward the {:?} endpoint (last value {})",
            t.endpoint, t.last_q
        )));
    }
    let anchors = Arc::new(anchors);
    let unnormalized = {
        let (anchors, ratio, eta) = (anchors.clone(), ratio.clone(), eta.clone());
        let tails = tails.clone();
        move |x: f64| -> f64 {
            if !support.contains_open(x) {
                return 0.0;
            }
            for &(end, ax, aq, step) in tails.iter() {
                let (d, d_anchor) = ((end - x).abs(), (end - ax).abs());
                if d < d_anchor && (x - ax).signum() == (end - ax).signum() {
                    // Q ≈ Q(anchor) + (step / ln 2) ln(d / d_anchor)
                    let q = aq + step / std::f64::consts::LN_2 * (d / d_anchor).ln();
                    return q.exp() / eta(x);
                }
            }
            let i = anchors.partition_point(|a| a.0 <= x);
            let below = i.checked_sub(1).map(|j| anchors[j]);
            let above = anchors.get(i).copied();
            let (ax, aq) = match (below, above) {
                (Some(b), Some(a)) => {
                    if x - b.0 <= a.0 - x {
                        b
                    } else {
                        a
                    }
                }
                (Some(b), None) => b,
                (None, Some(a)) => a,
                (None, None) => return f64::NAN,
            };
            let q = aq
                + quad
                    .integrate(|t| ratio(t), ax, x)
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN);
            q.exp() / eta(x)
        }
    };
    let unnormalized = Arc::new(unnormalized);
    let u = unnormalized.clone();
    let g = gamma.clone();
    let e = eta.clone();
    let probe = DistributionSpec::builder(name, support, move |x| u(x), move |x| g(x))
        .known_eta_arc(e.clone())
        .psi_arc({
            let (g, e) = (gamma.clone(), eta.clone());
            Arc::new(move |x: f64| {
                // p = K exp(Q)/η gives p'/p = (γ - η')/η
                let h = 1e-6 * x.abs().max(1.0);
                let de = (e(x + h) - e(x - h)) / (2.0 * h);
                (g(x) - de) / e(x)
            })
        })
        .unnormalized()
        .build()?;
    let k_numeric = 1.0 / probe.mass();
    let g = gamma.clone();
    let k_formula = 0.5 * probe.expect(|t| g(t).abs())?;
    Ok(Reconstruction {
        spec: probe,
        k_numeric,
        k_formula,
        trends,
    })
}

fn locate_sign_change(gamma: &dyn Fn(f64) -> f64, support: SupportInterval) -> Result<f64> {
    let (mut a, mut b) = match (support.lower().is_finite(), support.upper().is_finite()) {
        (true, true) => (support.lower(), support.upper()),
        _ => {
            let mut r = 1.0;
            loop {
                let a = if support.lower().is_finite() {
                    support.lower()
                } else {
                    -r
                };
                let b = if support.upper().is_finite() {
                    support.upper()
                } else {
                    r
                };
                if gamma(a) > 0.0 && !(gamma(b) > 0.0) {
                    break (a, b);
                }
                r *= 2.0;
                if r > 1e300 {
                    return Err(Error::Condition("γ has no sign change".into()));
                }
            }
        }
    };
    if !(gamma(a) > 0.0) || gamma(b) > 0.0 {
        return Err(Error::Condition("γ has no sign change".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if gamma(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Tabulates `Q` at points approaching one endpoint and judges its trend.
fn anchor_walk(
    quad: &Quadrature,
    ratio: &RealFn,
    x0: f64,
    support: SupportInterval,
    endpoint: Endpoint,
) -> Result<(Vec<(f64, f64)>, DivergenceTrend, bool)> {
    let (end, dir) = match endpoint {
        Endpoint::Lower => (support.lower(), -1.0),
        Endpoint::Upper => (support.upper(), 1.0),
    };
    let point = |k: i32| -> f64 {
        if end.is_finite() {
            end - dir * (end - x0).abs() * 2f64.powi(-k)
        } else {
            x0 + dir * 2f64.powi(k - 1)
        }
    };
    let mut out = Vec::new();
    let mut prev_x = x0;
    let mut q = 0.0;
    let mut steps: Vec<f64> = Vec::new();
    let mut cut = false;
    for k in 1..=1100 {
        let x = point(k);
        if x == prev_x || !support.contains_open(x) {
            break;
        }
        // closer than this, `end - t` at the quadrature nodes loses too many
        // digits; the remaining stretch is extrapolated
        if end.is_finite() && (end - x).abs() <= RESOLVED_DISTANCE * end.abs() {
            cut = true;
            break;
        }
        let piece = quad
            .integrate_singular(|t| ratio(t), prev_x, x, EndpointExponents::REGULAR)?
            .value;
        q += piece;
        steps.push(-piece);
        out.push((x, q));
        prev_x = x;
        if q < -750.0 {
            break;
        }
    }
    let last_q = out.last().map_or(0.0, |p| p.1);
    let last_step = steps.last().copied().unwrap_or(0.0);
    let tail: Vec<f64> = steps.iter().rev().take(10).copied().collect();
    let decreasing = steps.iter().skip(1).all(|&s| s >= -1e-12);
    let stable = tail.len() == 10
        && tail.iter().all(|&s| s > 1e-3)
        && tail.iter().fold(f64::INFINITY, |m, &s| m.min(s))
            >= 0.5 * tail.iter().fold(0.0f64, |m, &s| m.max(s));
    let plausible = decreasing && (last_q < -30.0 || stable);
    Ok((
        out,
        DivergenceTrend {
            endpoint,
            last_q,
            last_step,
            plausible,
        },
        cut,
    ))
}
