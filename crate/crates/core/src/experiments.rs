//! Reproduction studies: the `1/n` rate for the Pólya urn, the small-shape
//! limit of the rate constant, the exponential bounds and the Mills-ratio
//! counterexample.

use rayon::prelude::*;
use serde::Serialize;

use crate::beta::{piecewise_expectation, raw_moments, theorem_mt_bound, BetaSteinContext};
use crate::error::{Error, Result};
use crate::framework::{
    density_from_coefficients, derivative_lift, measurement_range, standard_solution, sup_abs, BoundReport, DistributionSpec,
    Sawtooth, TestFunction,
};
use crate::polya::{expectation_of, simulate_summary, PolyaModel};
use crate::special::BetaParams;
use crate::supnorm::{chebyshev_grid, GridKind, DEFAULT_GRID};

/// Distances below this are treated as exact zeros.
pub const DEGENERATE_DISTANCE: f64 = 1e-14;

/// Smallest `n` entering the slope fit.
pub const FIT_MIN_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStudyResult {
    pub a: f64,
    pub b: f64,
    pub h: String,
    pub n_values: Vec<usize>,
    /// `|E h(W) - E h(Z)|`.
    pub distances: Vec<f64>,
    pub bounds: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// Least-squares slope of `log distance` against `log n` over the
    /// non-degenerate points with `n ≥ FIT_MIN_N`.
    pub loglog_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub fit_points: usize,
    pub norm_h1: f64,
    pub norm_h2: f64,
    /// Set when a norm was estimated on a grid rather than declared.
    pub advisory: bool,
}

impl RateStudyResult {
    pub fn all_degenerate(&self) -> bool {
        self.degenerate.iter().all(|&d| d)
    }

    /// `distance ≤ bound + 1e-12` at every `n`.
    pub fn within_bounds(&self) -> bool {
        self.distances
            .iter()
            .zip(&self.bounds)
            .all(|(d, b)| *d <= b + 1e-12)
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.n_values
            .iter()
            .zip(&self.distances)
            .zip(&self.bounds)
            .map(|((n, d), b)| (*n, *d, *b))
    }
}

/// `E[h(Z)]` for `Z ~ Beta(a, b)`: exact moments for polynomials and
/// piecewise polynomials, quadrature split at the kinks of `h` otherwise.
pub fn beta_expectation(ctx: &BetaSteinContext, h: &TestFunction) -> Result<f64> {
    if let Some(c) = h.polynomial_coefficients() {
        let m = raw_moments(ctx.params(), c.len() - 1);
        return Ok(c.iter().zip(&m).map(|(c, m)| c * m).sum());
    }
    if let Some(pieces) = h.pieces() {
        return piecewise_expectation(ctx.params(), pieces);
    }
    ctx.spec().expect_with_breaks(|x| h.eval(x), h.kinks())
}

/// Ordinary least squares of `y` on `x`: slope and its standard error.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<(f64, Option<f64>)> {
    let m = x.len();
    if m < 2 || y.len() != m {
        return None;
    }
    let mx = x.iter().sum::<f64>() / m as f64;
    let my = y.iter().sum::<f64>() / m as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let stderr = (m > 2).then(|| {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(u, v)| (v - my - slope * (u - mx)).powi(2))
            .sum();
        (ssr / (m as f64 - 2.0) / sxx).sqrt()
    });
    Some((slope, stderr))
}

/// Exact `|E h(S_n/n) - E h(Z)|` next to the rate bound for each `n`.
pub fn rate_study(p: BetaParams, h: &TestFunction, n_values: &[usize]) -> Result<RateStudyResult> {
    h.require_order(2)?;
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("no values of n given".into()));
    }
    let ctx = BetaSteinContext::new(p)?;
    let ez = beta_expectation(&ctx, h)?;
    let n1 = h.norm(1, 0.0, 1.0)?;
    let n2 = h.norm(2, 0.0, 1.0)?;
    let rows = n_values
        .par_iter()
        .map(|&n| {
            let model = PolyaModel::new(p.a(), p.b(), n)?;
            let ew = expectation_of(&model, |x| h.eval(x));
            Ok(((ew - ez).abs(), theorem_mt_bound(n as u64, p, n1.value, n2.value)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let distances: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let bounds: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let degenerate: Vec<bool> = distances.iter().map(|&d| d < DEGENERATE_DISTANCE).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = n_values
        .iter()
        .zip(&distances)
        .zip(&degenerate)
        .filter(|((n, _), deg)| **n >= FIT_MIN_N && !**deg)
        .map(|((n, d), _)| ((*n as f64).ln(), d.ln()))
        .unzip();
    let fit = fit_slope(&lx, &ly);
    Ok(RateStudyResult {
        a: p.a(),
        b: p.b(),
        h: h.name().to_string(),
        n_values: n_values.to_vec(),
        distances,
        bounds,
        degenerate,
        loglog_slope: fit.map(|f| f.0),
        slope_stderr: fit.and_then(|f| f.1),
        fit_points: lx.len(),
        norm_h1: n1.value,
        norm_h2: n2.value,
        advisory: n1.estimated || n2.estimated,
    })
}

/// Rate constant at `a = b = 1e-8` with unit norms, against `9/(2n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntroComparison {
    pub n: usize,
    pub ours: f64,
    pub theirs: f64,
    /// `(2/(3n))(1 - 1/n)`.
    pub limit: f64,
}

pub const SMALL_SHAPE: f64 = 1e-8;

pub fn intro_comparison(n: usize) -> Result<IntroComparison> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    let nf = n as f64;
    let p = BetaParams::new(SMALL_SHAPE, SMALL_SHAPE)?;
    let ours = theorem_mt_bound(n as u64, p, 1.0, 1.0);
    let theirs = 9.0 / (2.0 * nf);
    if ours >= theirs {
        return Err(Error::Condition(format!(
            "bound {ours} is not below 9/(2n) = {theirs} at n = {n}"
        )));
    }
    Ok(IntroComparison {
        n,
        ours,
        theirs,
        limit: 2.0 / (3.0 * nf) * (1.0 - 1.0 / nf),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialCheck {
    pub alpha: f64,
    pub h: String,
    /// `‖g‖`, `‖g'‖` and `‖g''‖` against their bounds.
    pub reports: Vec<BoundReport>,
    /// L¹ distance of the normalized lifted density to Gamma(2, α).
    pub lift_l1: f64,
    pub warnings: Vec<String>,
}

impl ExponentialCheck {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }
}

/// L¹ distance between the normalized derivative lift of `spec` and `target`.
pub fn lift_l1_distance(spec: &DistributionSpec, target: &DistributionSpec) -> Result<f64> {
    derivative_lift(spec)?.l1_distance(|x| target.density(x))
}

/// Checks `‖g‖ ≤ ‖h'‖/α`, `‖g'‖ ≤ ‖h'‖` and
/// `‖g''‖ ≤ (2α/3)‖h'‖ + (2/3)‖h''‖` on a grid for Exponential(α).
pub fn exponential_check(alpha: f64, h: &TestFunction, grid: usize) -> Result<ExponentialCheck> {
    h.require_order(2)?;
    let spec = DistributionSpec::exponential(alpha)?;
    let sol = standard_solution(&spec, h)?;
    let (_, hi) = spec.core_range();
    let n1 = h.norm(1, 0.0, hi)?;
    let n2 = h.norm(2, 0.0, hi)?;
    let advisory = n1.estimated || n2.estimated;
    let dh = h.derivative_fn(1)?;
    // x g'' + (2 - αx) g' - α g = h'
    let second = |x: f64| -> Result<f64> {
        let g = sol.eval(x)?;
        let dg = sol.deriv(x)?;
        Ok((dh(x) + alpha * g - (2.0 - alpha * x) * dg) / x)
    };
    let mut reports = Vec::with_capacity(3);
    let mut warnings = Vec::new();
    let bounds = [
        ("sup|g| <= sup|h'| / alpha", n1.value / alpha),
        ("sup|g'| <= sup|h'|", n1.value),
        (
            "sup|g''| <= (2 alpha/3) sup|h'| + (2/3) sup|h''|",
            2.0 * alpha / 3.0 * n1.value + 2.0 / 3.0 * n2.value,
        ),
    ];
    for (k, (label, bound)) in bounds.into_iter().enumerate() {
        let (lo, hi, kind) = measurement_range(&spec, k);
        let sup = match k {
            0 => sup_abs(|x| sol.eval(x), lo, hi, grid, kind)?,
            1 => sup_abs(|x| sol.deriv(x), lo, hi, grid, kind)?,
            _ => sup_abs(second, lo, hi, grid, kind)?,
        };
        if sup.argmax >= hi - 1e-3 * (hi - lo) {
            warnings.push(format!(
                "{label}: maximum at the truncation point {:.6}; the estimate may depend on truncation",
                sup.argmax
            ));
        }
        reports.push(BoundReport::new(label, bound, sup, advisory));
    }
    let target = DistributionSpec::gamma_shape(2.0, alpha)?;
    Ok(ExponentialCheck {
        alpha,
        h: h.name().to_string(),
        reports,
        lift_l1: lift_l1_distance(&spec, &target)?,
        warnings,
    })
}

pub const MAX_MILLS_LEVELS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MillsRow {
    /// Level `m`; the node is `x_{2m}`.
    pub level: usize,
    pub node: f64,
    /// `F(x_{2m}) / p(x_{2m})`.
    pub ratio: f64,
    /// Normalized density at the node.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MillsReport {
    pub levels: usize,
    pub rows: Vec<MillsRow>,
    pub min_ratio: f64,
    /// All ratios at least `1/2 - tol`.
    pub ratios_hold: bool,
    pub density_decreasing: bool,
    /// Numerical `∫ p`.
    pub integral: f64,
    pub normalized: bool,
}

impl MillsReport {
    pub fn passed(&self) -> bool {
        self.ratios_hold && self.density_decreasing && self.normalized
    }
}

/// Mills ratios of the sawtooth density along `x_{2m}`, `m = 1..=levels`.
pub fn mills_counterexample(levels: usize) -> Result<MillsReport> {
    if levels == 0 || levels > MAX_MILLS_LEVELS {
        return Err(Error::InvalidParameter(format!(
            "levels must be in 1..={MAX_MILLS_LEVELS}, got {levels}"
        )));
    }
    let saw = Sawtooth::new();
    let rows: Vec<MillsRow> = (1..=levels)
        .map(|m| {
            let node = Sawtooth::node(2 * m);
            MillsRow {
                level: m,
                node,
                ratio: saw.mills_ratio_at_node(2 * m),
                density: saw.density(node),
            }
        })
        .collect();
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let density_decreasing = rows.windows(2).all(|w| w[1].density < w[0].density);
    let spec = saw.spec()?;
    let integral = spec.integrate(|x| saw.density(x), 0.0, 1.0)?.value;
    Ok(MillsReport {
        levels,
        rows,
        min_ratio,
        ratios_hold: min_ratio >= 0.499,
        density_decreasing,
        integral,
        normalized: (integral - 1.0).abs() <= 1e-10,
    })
}

/// Monte Carlo `E h(W)` against the exact value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCheck {
    pub model: PolyaModel,
    pub h: String,
    pub reps: usize,
    pub seed: u64,
    pub exact: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Total variation of the empirical pmf to the exact one.
    pub total_variation: f64,
    pub tv_threshold: f64,
    /// Total variation between the empirical laws of `W` and `W'`.
    pub marginal_gap: f64,
    pub mean_w: f64,
}

impl MonteCarloCheck {
    pub fn passed(&self) -> bool {
        (self.estimate - self.exact).abs() <= 4.0 * self.stderr && self.total_variation < self.tv_threshold
    }
}

pub fn monte_carlo_check(
    model: &PolyaModel,
    h: &TestFunction,
    reps: usize,
    seed: u64,
) -> Result<MonteCarloCheck> {
    let summary = simulate_summary(model, reps, seed)?;
    let n = model.n() as f64;
    let r = reps as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (k, &c) in summary.counts.iter().enumerate() {
        let v = h.eval(k as f64 / n);
        s1 += c as f64 * v;
        s2 += c as f64 * v * v;
    }
    let estimate = s1 / r;
    let var = (s2 / r - estimate * estimate).max(0.0) * r / (r - 1.0).max(1.0);
    Ok(MonteCarloCheck {
        model: *model,
        h: h.name().to_string(),
        reps,
        seed,
        exact: expectation_of(model, |x| h.eval(x)),
        estimate,
        stderr: (var / r).sqrt(),
        total_variation: summary.total_variation(),
        tv_threshold: summary.tv_threshold(),
        marginal_gap: summary.marginal_gap(),
        mean_w: summary.mean_w,
    })
}

/// A density rebuilt from the `(γ, η)` pair of a known law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRoundTrip {
    pub name: String,
    pub l1: f64,
    pub k_numeric: f64,
    pub k_formula: f64,
    pub divergence_plausible: bool,
    /// `(x, rebuilt p(x), p(x))` on a grid over the core range.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Rebuilds `spec`'s density from its `γ` and `η` and measures the L¹ error.
pub fn density_round_trip(spec: &DistributionSpec, grid: usize) -> Result<DensityRoundTrip> {
    let eta = match spec.known_eta() {
        Some(e) => e.clone(),
        None => {
            let s = spec.clone();
            std::sync::Arc::new(move |x| crate::framework::eta_at(&s, x).unwrap_or(f64::NAN))
        }
    };
    let rebuilt = density_from_coefficients(
        &format!("rebuilt {}", spec.name()),
        spec.gamma_fn(),
        eta,
        spec.support(),
        spec.x0(),
    )?;
    let l1 = rebuilt.spec.l1_distance(|x| spec.density(x))?;
    let (lo, hi) = spec.core_range();
    let samples = chebyshev_grid(lo, hi, grid, GridKind::Open)
        .into_iter()
        .map(|x| (x, rebuilt.spec.density(x), spec.density(x)))
        .collect();
    Ok(DensityRoundTrip {
        name: spec.name().to_string(),
        l1,
        k_numeric: rebuilt.k_numeric,
        k_formula: rebuilt.k_formula,
        divergence_plausible: rebuilt.trends.iter().all(|t| t.plausible),
        samples,
    })
}

/// Default grid for the exponential check.
pub const EXP_GRID: usize = DEFAULT_GRID;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn params(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn identity_is_degenerate() {
        let r = rate_study(params(2.0, 3.0), &fixtures::identity(0.0, 1.0), &[10, 20, 50]).unwrap();
        assert!(r.all_degenerate());
        assert_eq!(r.loglog_slope, None);
        assert!(r.within_bounds());
    }

    #[test]
    fn square_has_unit_rate() {
        let ns = [10, 20, 50, 100, 200, 500, 1000];
        let r = rate_study(params(2.0, 3.0), &fixtures::square(0.0, 1.0), &ns).unwrap();
        let s = r.loglog_slope.unwrap();
        assert!((s + 1.0).abs() <= 0.15, "{s}");
        assert!(r.within_bounds());
        assert!(r.bounds.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn slope_fit() {
        let x = [0.0, 1.0, 2.0];
        let (s, e) = fit_slope(&x, &[1.0, -1.0, -3.0]).unwrap();
        assert!((s + 2.0).abs() < 1e-15 && e.unwrap() < 1e-15);
        assert!(fit_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn intro_values() {
        let c = intro_comparison(10).unwrap();
        assert!((c.ours - 0.06).abs() < 1e-4);
        assert_eq!(c.theirs, 0.45);
        let c = intro_comparison(2).unwrap();
        assert!((c.ours - 1.0 / 6.0).abs() < 1e-4);
        let c = intro_comparison(100_000).unwrap();
        assert!((c.ours / c.theirs - 4.0 / 27.0).abs() < 1e-4);
        assert!(intro_comparison(1).is_err());
    }

    #[test]
    fn exponential_bounds() {
        let r = exponential_check(1.0, &fixtures::sine(), 513).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert!(r.lift_l1 < 1e-8, "{}", r.lift_l1);
        let r = exponential_check(2.0, &fixtures::identity(0.0, 1.0), 257).unwrap();
        assert!(r.lift_l1 < 1e-8, "{}", r.lift_l1);
        assert!((r.reports[2].bound - 4.0 / 3.0).abs() < 1e-15);
        assert!(r.passed(), "{r:#?}");
    }

    #[test]
    fn round_trips() {
        for spec in [
            DistributionSpec::beta(params(2.0, 3.0)).unwrap(),
            DistributionSpec::exponential(1.0).unwrap(),
            DistributionSpec::standard_normal().unwrap(),
        ] {
            let r = density_round_trip(&spec, 9).unwrap();
            assert!(r.l1 <= 1e-8, "{}: {}", r.name, r.l1);
            assert!(r.divergence_plausible);
        }
    }

    #[test]
    fn mills_ratios() {
        let r = mills_counterexample(10).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert!(mills_counterexample(41).is_err());
    }

    #[test]
    fn monte_carlo_agrees() {
        let m = PolyaModel::new(2.0, 3.0, 10).unwrap();
        let c = monte_carlo_check(&m, &fixtures::square(0.0, 1.0), 100_000, 11).unwrap();
        assert!(c.passed(), "{c:#?}");
        assert!(c.marginal_gap < c.tv_threshold);
    }
}
