//! The Beta(a, b) specialization: `x(1-x) g' + (a + b)(a/(a+b) - x) g = h̃`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::{
    characterization_residual, measurement_range, standard_solution, sup_abs, BoundReport,
    DistributionSpec, Measure, PairRegressionReport, PolynomialPiece, SteinSolution, TestFunction,
};
use crate::quad::Quadrature;
use crate::special::{incbeta_pair, lgamma, ln_beta, BetaParams, SQRT_PI};
use crate::supnorm::{GridKind, SupEstimate};

/// Highest polynomial degree solved through incomplete beta functions.
pub const CLOSED_FORM_DEGREE: usize = 6;

/// Beta(a, b) with its Stein coefficients and the bridged general spec.
#[derive(Debug, Clone)]
pub struct BetaSteinContext {
    params: BetaParams,
    spec: DistributionSpec,
}

impl BetaSteinContext {
    pub fn new(params: BetaParams) -> Result<Self> {
        Ok(Self {
            params,
            spec: DistributionSpec::beta(params)?,
        })
    }

    pub fn params(&self) -> BetaParams {
        self.params
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn mean(&self) -> f64 {
        self.params.mean()
    }

    /// `γ(x) = (a + b)(a/(a + b) - x)`.
    pub fn gamma(&self, x: f64) -> f64 {
        self.params.a() - (self.params.a() + self.params.b()) * x
    }

    /// `η(x) = x(1 - x)`.
    pub fn eta(&self, x: f64) -> f64 {
        x * (1.0 - x)
    }

    /// Context for Beta(a + 1, b + 1), the law whose standard solutions are
    /// the derivatives of ours.
    pub fn lifted(&self) -> Result<Self> {
        Self::new(self.params.shifted(1))
    }
}

/// `C(a, b)` from the Lipschitz bound `‖g_h'‖ ≤ C(a, b) ‖h'‖`.
///
/// The symmetric formula applies only when `a == b` exactly.
pub fn c_constant(p: BetaParams) -> f64 {
    ln_c_constant(p).exp()
}

fn ln_c_constant(p: BetaParams) -> f64 {
    let (a, b) = (p.a(), p.b());
    if a == b {
        return if a < 1.0 {
            4f64.ln()
        } else {
            (2.0 * a).ln() + SQRT_PI.ln() + lgamma(a) - lgamma(a + 0.5)
        };
    }
    let base = (2.0 * (a + b)).ln();
    base + match (a <= 1.0, b <= 1.0) {
        (true, true) => ln_beta(p),
        (true, false) => -a.ln(),
        (false, true) => -b.ln(),
        (false, false) => -a.ln() - b.ln() - ln_beta(p),
    }
}

/// `E[Z^k] = Π_{j<k} (a + j)/(a + b + j)` for `k = 0..=degree`.
pub fn raw_moments(p: BetaParams, degree: usize) -> Vec<f64> {
    let (a, s) = (p.a(), p.a() + p.b());
    let mut out = Vec::with_capacity(degree + 1);
    let mut m = 1.0;
    for j in 0..=degree {
        out.push(m);
        m *= (a + j as f64) / (s + j as f64);
    }
    out
}

/// `E[h(Z)]` for piecewise polynomial `h`. Constant pieces and pieces that
/// reach an endpoint use `Σ_k c_k E[Z^k] (I_hi(a + k, b) - I_lo(a + k, b))`;
/// interior pieces, where the monomial sum cancels badly, use Gauss-Kronrod
/// on the smooth integrand.
pub fn piecewise_expectation(p: BetaParams, pieces: &[PolynomialPiece]) -> Result<f64> {
    let median = crate::special::beta_median(p)?;
    let quad = Quadrature::new(0.0, 1e-15).with_max_panels(200);
    let mut total = 0.0;
    for piece in pieces {
        let (lo, hi) = (piece.lo.max(0.0), piece.hi.min(1.0));
        if lo >= hi {
            continue;
        }
        let c = &piece.coefficients;
        if c.len() > 1 && lo > 0.0 && hi < 1.0 {
            let ln_norm = ln_beta(p);
            let (a, b) = (p.a(), p.b());
            let est = quad.integrate(
                |x| {
                    let poly = c.iter().rev().fold(0.0, |acc, v| acc * x + v);
                    poly * ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_norm).exp()
                },
                lo,
                hi,
            );
            // the tolerance may be below what rounding allows; take the estimate
            total += match est {
                Ok(e) => e.value,
                Err(Error::NoConvergence { estimate, .. }) => estimate,
                Err(e) => return Err(e),
            };
            continue;
        }
        let moments = raw_moments(p, c.len().saturating_sub(1));
        for (k, (c, m)) in c.iter().zip(&moments).enumerate() {
            if *c == 0.0 {
                continue;
            }
            let shape = p.a() + k as f64;
            let (f_lo, s_lo) = incbeta_pair(lo, shape, p.b())?;
            let (f_hi, s_hi) = incbeta_pair(hi, shape, p.b())?;
            let mass = if hi <= median { f_hi - f_lo } else { s_lo - s_hi };
            total += c * m * mass;
        }
    }
    Ok(total)
}

/// Solves the Beta Stein equation for `h`.
///
/// Polynomials of degree up to [`CLOSED_FORM_DEGREE`] use
/// `∫_0^x t^k p = E[Z^k] I_x(a + k, b)`; everything else goes through
/// quadrature. Boundary values are `(h(0+) - E h)/a` and `(h(1-) - E h)/(-b)`.
pub fn solve(ctx: &BetaSteinContext, h: &TestFunction) -> Result<SteinSolution> {
    let coeffs = match h.polynomial_coefficients() {
        Some(c) if c.len() <= CLOSED_FORM_DEGREE + 1 => c.to_vec(),
        _ => return reflected_solution(ctx, h),
    };
    let p = ctx.params();
    let moments = raw_moments(p, coeffs.len() - 1);
    let eh: f64 = coeffs.iter().zip(&moments).map(|(c, m)| c * m).sum();
    let median = ctx.spec().median();
    let weighted: Vec<(f64, f64)> = coeffs
        .iter()
        .zip(&moments)
        .enumerate()
        .map(|(k, (c, m))| (c * m, k as f64))
        .collect();
    let (a, b) = (p.a(), p.b());
    let numerator = Arc::new(move |x: f64| -> Result<f64> {
        let (f, sf) = incbeta_pair(x, a, b)?;
        if x <= median {
            let mut sum = -eh * f;
            for &(w, k) in &weighted {
                if w != 0.0 {
                    sum += w * incbeta_pair(x, a + k, b)?.0;
                }
            }
            Ok(sum)
        } else {
            let mut sum = eh * sf;
            for &(w, k) in &weighted {
                if w != 0.0 {
                    sum -= w * incbeta_pair(x, a + k, b)?.1;
                }
            }
            Ok(sum)
        }
    });
    SteinSolution::assemble(ctx.spec(), h, eh, Some(numerator))
}

/// Quadrature solution whose upper-tail numerator is integrated on the
/// mirrored law `Beta(b, a)` over `[0, 1 - x]`, so points near 1 never pass
/// through the rounding of `1 - u`.
fn reflected_solution(ctx: &BetaSteinContext, h: &TestFunction) -> Result<SteinSolution> {
    let base = standard_solution(ctx.spec(), h)?;
    let eh = base.eh();
    let p = ctx.params();
    let spec = ctx.spec().clone();
    let mirror = DistributionSpec::beta(BetaParams::new(p.b(), p.a())?)?;
    let median = spec.median();
    let kinks = h.kinks().to_vec();
    let mirrored_kinks: Vec<f64> = kinks.iter().map(|k| 1.0 - k).collect();
    let hf = h.clone();
    let numerator = Arc::new(move |x: f64| -> Result<f64> {
        if x <= median {
            let dens = spec.density_fn();
            let f = |t: f64| {
                let d = dens(t);
                if d == 0.0 {
                    0.0
                } else {
                    (hf.eval(t) - eh) * d
                }
            };
            Ok(spec.integrate_with_breaks(f, 0.0, x, &kinks)?.value)
        } else {
            let dens = mirror.density_fn();
            let f = |u: f64| {
                let d = dens(u);
                if d == 0.0 {
                    0.0
                } else {
                    (hf.eval(1.0 - u) - eh) * d
                }
            };
            Ok(-mirror.integrate_with_breaks(f, 0.0, 1.0 - x, &mirrored_kinks)?.value)
        }
    });
    SteinSolution::assemble(ctx.spec(), h, eh, Some(numerator))
}

/// `g_h^(k)(x)` for `k ≥ 2` from the differentiated equation
/// `x(1-x) g^(k) + (a + k - 1 - (a + b + 2k - 2) x) g^(k-1) = h^(k-1) + c_k g^(k-2)`
/// with `c_k = (k - 1)(a + b + k - 2)`.
pub fn higher_derivative(sol: &SteinSolution, p: BetaParams, order: usize, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain("higher_derivative", x));
    }
    let h = sol.test_function();
    let mut prev = sol.eval(x)?;
    if order == 0 {
        return Ok(prev);
    }
    let mut cur = sol.deriv(x)?;
    let (a, s) = (p.a(), p.a() + p.b());
    for k in 2..=order {
        let kf = k as f64;
        let ck = (kf - 1.0) * (s + kf - 2.0);
        let drift = a + kf - 1.0 - (s + 2.0 * kf - 2.0) * x;
        let hk = h.eval_derivative(k - 1, x)?;
        let next = (hk + ck * prev - drift * cur) / (x * (1.0 - x));
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Coefficients of `‖h^(j)‖`, `j = 1..=m`, in the bound on `‖g_h^(m)‖`:
/// `C(a+m-1, b+m-1) Π_{l=j}^{m-1} l (a+b+l-1) C(a+l-1, b+l-1)`.
///
/// Products are accumulated in log space from `m = 8` on.
pub fn derivative_bound_coefficients(p: BetaParams, m: usize) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let s = p.a() + p.b();
    let shifted = |l: usize| p.shifted(l as u32);
    if m < 8 {
        let lead = c_constant(shifted(m - 1));
        (1..=m)
            .map(|j| {
                let prod: f64 = (j..m)
                    .map(|l| l as f64 * (s + l as f64 - 1.0) * c_constant(shifted(l - 1)))
                    .product();
                lead * prod
            })
            .collect()
    } else {
        let lead = ln_c_constant(shifted(m - 1));
        (1..=m)
            .map(|j| {
                let log_prod: f64 = (j..m)
                    .map(|l| {
                        (l as f64).ln() + (s + l as f64 - 1.0).ln() + ln_c_constant(shifted(l - 1))
                    })
                    .sum();
                (lead + log_prod).exp()
            })
            .collect()
    }
}

/// `Σ_j coef_j ‖h^(j)‖` with `norms[j - 1] = ‖h^(j)‖`.
pub fn derivative_bound(p: BetaParams, norms: &[f64]) -> f64 {
    derivative_bound_coefficients(p, norms.len())
        .iter()
        .zip(norms)
        .map(|(c, n)| if *n == 0.0 { 0.0 } else { c * n })
        .sum()
}

/// `‖g_h''‖ ≤ C(a+1, b+1) ‖h''‖ + (a + b) C(a+1, b+1) C(a, b) ‖h'‖`.
pub fn second_derivative_bound(p: BetaParams, norm_h1: f64, norm_h2: f64) -> f64 {
    let c1 = c_constant(p.shifted(1));
    c1 * norm_h2 + (p.a() + p.b()) * c1 * c_constant(p) * norm_h1
}

/// `‖g_h‖ ≤ ‖h - E h‖ / (2 m (1 - m) p(m))` with `m` the median.
pub fn bounded_bound(ctx: &BetaSteinContext, centred_norm: f64) -> f64 {
    let m = ctx.spec().median();
    centred_norm / (2.0 * ctx.eta(m) * ctx.spec().density(m))
}

/// Bounds on `‖g_h^(k)‖` for `k = 0..=order` next to their grid measurements.
pub fn bound_suite(
    ctx: &BetaSteinContext,
    h: &TestFunction,
    order: usize,
    grid: usize,
) -> Result<Vec<BoundReport>> {
    h.require_order(order as u32)?;
    let p = ctx.params();
    let s = p.a() + p.b();
    let sol = solve(ctx, h)?;
    let measure = |k: usize| -> Result<SupEstimate> {
        let (lo, hi, kind) = measurement_range(ctx.spec(), k);
        match k {
            0 => sup_abs(|x| sol.eval(x), lo, hi, grid, kind),
            1 => sup_abs(|x| sol.deriv(x), lo, hi, grid, kind),
            _ => sup_abs(|x| higher_derivative(&sol, p, k, x), lo, hi, grid, kind),
        }
    };
    let mut norms = Vec::with_capacity(order);
    let mut advisory = false;
    for j in 1..=order {
        let n = h.norm(j, 0.0, 1.0)?;
        advisory |= n.estimated;
        norms.push(n.value);
    }
    let mut out = Vec::with_capacity(order + 1);
    if order == 0 {
        let n = h.centred_norm(sol.eh(), 0.0, 1.0);
        out.push(BoundReport::new(
            "sup|g| <= sup|h - Eh| / (2 m(1-m) p(m))",
            bounded_bound(ctx, n.value),
            measure(0)?,
            n.estimated,
        ));
        return Ok(out);
    }
    out.push(BoundReport::new(
        "sup|g| <= sup|h'| / (a+b)",
        norms[0] / s,
        measure(0)?,
        advisory,
    ));
    out.push(BoundReport::new(
        "sup|g'| <= C(a,b) sup|h'|",
        c_constant(p) * norms[0],
        measure(1)?,
        advisory,
    ));
    for k in 2..=order {
        out.push(BoundReport::new(
            format!("sup|g^({k})| <= sum_j coef_j sup|h^(j)|"),
            derivative_bound(p, &norms[..k]),
            measure(k)?,
            advisory,
        ));
    }
    Ok(out)
}

/// The rate bound for the Pólya urn:
/// `C(a,b)/n ‖h'‖ (ab/(a+b) + (a+b) C(a+1,b+1)/6 (1 + (a+b-1)/n))
///  + C(a+1,b+1)/(6n) ‖h''‖ (1 + (a+b-1)/n)`.
pub fn theorem_mt_bound(n: u64, p: BetaParams, norm_h1: f64, norm_h2: f64) -> f64 {
    let (a, b) = (p.a(), p.b());
    let s = a + b;
    let n = n as f64;
    let c = c_constant(p);
    let c1 = c_constant(p.shifted(1));
    let growth = 1.0 + (s - 1.0) / n;
    let first = if norm_h1 == 0.0 {
        0.0
    } else {
        c / n * norm_h1 * (a * b / s + s * c1 / 6.0 * growth)
    };
    let second = if norm_h2 == 0.0 {
        0.0
    } else {
        c1 / (6.0 * n) * norm_h2 * growth
    };
    first + second
}

/// Plug-in bound for an exchangeable pair with Beta regression coefficients:
/// `‖h'‖ (E|R|/(a+b) + C(a,b) E|S|)
///  + (C(a+1,b+1) ‖h''‖ + (a+b) C(a+1,b+1) C(a,b) ‖h'‖)/(6λ) E|W'-W|^3`.
pub fn beta_plugin_bound(
    pair: &PairRegressionReport,
    p: BetaParams,
    norm_h1: f64,
    norm_h2: f64,
) -> f64 {
    let s = p.a() + p.b();
    let c = c_constant(p);
    let c1 = c_constant(p.shifted(1));
    let first = norm_h1 * (pair.e_abs_r / s + c * pair.e_abs_s);
    let third = (c1 * norm_h2 + s * c1 * c * norm_h1) / (6.0 * pair.lambda) * pair.e_abs_cube;
    first + third
}

/// `E[X(1-X) f'(X)] - (a+b) E[(X - a/(a+b)) f(X)]` under `measure`.
pub fn characterization_check(
    ctx: &BetaSteinContext,
    f: &TestFunction,
    measure: Measure<'_>,
) -> Result<f64> {
    characterization_residual(ctx.spec(), f, measure)
}

/// Sup norm `S(z) = F(z)(1 - F(z)) / (z(1-z) p(z))` of the solution for
/// `h = 1{x ≤ z}`.
pub fn kolmogorov_sup(ctx: &BetaSteinContext, z: f64) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::domain("kolmogorov_sup", z));
    }
    let p = ctx.params();
    let (f, sf) = incbeta_pair(z, p.a(), p.b())?;
    Ok(f * sf / (ctx.eta(z) * ctx.spec().density(z)))
}

/// `∫_0^x F` and `∫_x^1 (1 - F)` in closed form.
fn cdf_integrals(p: BetaParams, x: f64) -> Result<(f64, f64)> {
    let (a, b) = (p.a(), p.b());
    let mu = p.mean();
    let (f, sf) = incbeta_pair(x, a, b)?;
    let (f1, sf1) = incbeta_pair(x, a + 1.0, b)?;
    Ok((x * f - mu * f1, mu * sf1 - x * sf))
}

/// `B(x) = (2/(a+b)) H(x) G(x) / (x^2 (1-x)^2 p(x))`, the pointwise factor in
/// `|g_h'(x)| ≤ ‖h'‖ B(x)`. Tends to `2/(a+1)` at 0 and `2/(b+1)` at 1.
pub fn derivative_ratio(ctx: &BetaSteinContext, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain("derivative_ratio", x));
    }
    let p = ctx.params();
    let s = p.a() + p.b();
    let (lower, upper) = cdf_integrals(p, x)?;
    let eta = ctx.eta(x);
    Ok(2.0 * s * lower * upper / (eta * eta * ctx.spec().density(x)))
}

/// Numeric look at the sup of [`derivative_ratio`], next to the boundary
/// limits. Nothing is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioProfile {
    pub a: f64,
    pub b: f64,
    pub grid_sup: f64,
    pub argmax: f64,
    pub lower_limit: f64,
    pub upper_limit: f64,
    /// `2 / (min(a, b) + 1)`.
    pub boundary_value: f64,
}

pub fn explore_derivative_ratio(p: BetaParams, grid: usize) -> Result<RatioProfile> {
    let ctx = BetaSteinContext::new(p)?;
    let sup = sup_abs(|x| derivative_ratio(&ctx, x), 1e-9, 1.0 - 1e-9, grid, GridKind::Closed)?;
    Ok(RatioProfile {
        a: p.a(),
        b: p.b(),
        grid_sup: sup.value,
        argmax: sup.argmax,
        lower_limit: 2.0 / (p.a() + 1.0),
        upper_limit: 2.0 / (p.b() + 1.0),
        boundary_value: 2.0 / (p.a().min(p.b()) + 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn params(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn c_constant_examples() {
        assert_eq!(c_constant(params(0.5, 0.5)), 4.0);
        assert!((c_constant(params(1.0, 1.0)) - 4.0).abs() < 1e-13);
        assert!((c_constant(params(0.5, 2.0)) - 10.0).abs() < 1e-13);
        // generic branch next to the diagonal differs from the symmetric one
        let near = c_constant(params(0.5, 0.5 + 1e-12));
        let generic = 2.0 * 1.0 * std::f64::consts::PI;
        assert!((near - generic).abs() < 1e-9);
    }

    #[test]
    fn closed_solution_of_identity() {
        let ctx = BetaSteinContext::new(params(2.0, 3.0)).unwrap();
        let sol = solve(&ctx, &fixtures::identity(0.0, 1.0)).unwrap();
        for x in [0.0, 1e-12, 0.3, 0.7, 1.0 - 1e-12, 1.0] {
            assert!((sol.eval(x).unwrap() + 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn piecewise_expectation_matches_quadrature() {
        let h = fixtures::smooth_step();
        for (a, b) in [(0.5, 0.5), (2.0, 3.0), (0.7, 4.0)] {
            let p = params(a, b);
            let exact = piecewise_expectation(p, h.pieces().unwrap()).unwrap();
            let spec = DistributionSpec::beta(p).unwrap();
            let quad = spec.expect_with_breaks(|x| h.eval(x), h.kinks()).unwrap();
            assert!((exact - quad).abs() < 1e-11, "{exact} vs {quad}");
        }
        let exact = piecewise_expectation(params(0.5, 0.5), h.pieces().unwrap()).unwrap();
        assert!((exact - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_and_quadrature_agree() {
        let ctx = BetaSteinContext::new(params(0.7, 2.5)).unwrap();
        let h = fixtures::cube(0.0, 1.0);
        let closed = solve(&ctx, &h).unwrap();
        let quad = standard_solution(ctx.spec(), &h).unwrap();
        for x in [0.01, 0.2, 0.5, 0.9] {
            let (c, q) = (closed.eval(x).unwrap(), quad.eval(x).unwrap());
            assert!((c - q).abs() < 1e-10, "x = {x}: {c} vs {q}");
        }
    }

    #[test]
    fn order_two_matches_recursion() {
        for (a, b) in [(0.5, 0.5), (0.3, 2.0), (2.5, 7.0), (1.0, 1.0)] {
            let p = params(a, b);
            let (n1, n2) = (1.7, 0.3);
            let d = derivative_bound(p, &[n1, n2]);
            let c = second_derivative_bound(p, n1, n2);
            assert!((d - c).abs() <= 1e-12 * c, "{d} vs {c}");
            assert_eq!(derivative_bound(p, &[n1]), c_constant(p) * n1);
        }
    }

    #[test]
    fn log_space_coefficients_are_continuous() {
        let p = params(1.5, 2.0);
        let direct: Vec<f64> = {
            let s = p.a() + p.b();
            let m = 8;
            let lead = c_constant(p.shifted(m as u32 - 1));
            (1..=m)
                .map(|j| {
                    lead * (j..m)
                        .map(|l| l as f64 * (s + l as f64 - 1.0) * c_constant(p.shifted(l as u32 - 1)))
                        .product::<f64>()
                })
                .collect()
        };
        for (x, y) in derivative_bound_coefficients(p, 8).iter().zip(&direct) {
            assert!((x - y).abs() <= 1e-12 * y);
        }
    }

    #[test]
    fn mt_bound_small_shape_limit() {
        for n in [2u64, 10, 100] {
            let nf = n as f64;
            let v = theorem_mt_bound(n, params(1e-8, 1e-8), 1.0, 1.0);
            assert!((v - 2.0 / (3.0 * nf) * (1.0 - 1.0 / nf)).abs() < 1e-4);
            assert!(v < 4.5 / nf);
        }
        assert_eq!(theorem_mt_bound(10, params(2.0, 3.0), 0.0, 0.0), 0.0);
    }

    #[test]
    fn plugin_reproduces_mt() {
        let p = params(1.0, 2.0);
        let n = 100u64;
        let nf = n as f64;
        let lambda = 1.0 / (nf * (3.0 + nf - 1.0));
        let pair = PairRegressionReport::new(lambda, 0.0, 2.0 / (3.0 * nf), nf.powi(-3)).unwrap();
        let a = beta_plugin_bound(&pair, p, 1.3, 0.4);
        let b = theorem_mt_bound(n, p, 1.3, 0.4);
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn boundary_values() {
        let ctx = BetaSteinContext::new(params(2.0, 3.0)).unwrap();
        let sol = solve(&ctx, &fixtures::square(0.0, 1.0)).unwrap();
        let eh = sol.eh();
        assert!((eh - 0.2).abs() < 1e-15);
        assert!((sol.eval(0.0).unwrap() - (0.0 - eh) / 2.0).abs() < 1e-15);
        assert!((sol.eval(1.0).unwrap() - (1.0 - eh) / -3.0).abs() < 1e-15);
        for k in 10..=30 {
            let e = 2f64.powi(-k);
            assert!((sol.eval(e).unwrap() - sol.eval(0.0).unwrap()).abs() < 1e-6 * 2f64.powi(20 - k).max(1.0));
        }
    }

    #[test]
    fn ratio_boundary_limits() {
        let ctx = BetaSteinContext::new(params(0.5, 3.0)).unwrap();
        assert!((derivative_ratio(&ctx, 1e-9).unwrap() - 2.0 / 1.5).abs() < 1e-5);
        assert!((derivative_ratio(&ctx, 1.0 - 1e-7).unwrap() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn kolmogorov_limits() {
        let ctx = BetaSteinContext::new(params(0.6, 2.0)).unwrap();
        assert!((kolmogorov_sup(&ctx, 1e-12).unwrap() - 1.0 / 0.6).abs() < 1e-6);
        assert!((kolmogorov_sup(&ctx, 1.0 - 1e-9).unwrap() - 0.5).abs() < 1e-6);
        let ctx = BetaSteinContext::new(params(2.0, 2.0)).unwrap();
        assert!((kolmogorov_sup(&ctx, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn higher_derivative_matches_lift() {
        let ctx = BetaSteinContext::new(params(2.0, 3.0)).unwrap();
        let h = fixtures::cube(0.0, 1.0);
        let sol = solve(&ctx, &h).unwrap();
        // g'' by central difference of g'
        for x in [0.2, 0.5, 0.8] {
            let d = 1e-4;
            let fd = (sol.deriv(x + d).unwrap() - sol.deriv(x - d).unwrap()) / (2.0 * d);
            let rec = higher_derivative(&sol, ctx.params(), 2, x).unwrap();
            assert!((fd - rec).abs() < 1e-6, "{fd} vs {rec}");
        }
    }

    #[test]
    fn suite_for_smooth_step() {
        let ctx = BetaSteinContext::new(params(0.5, 2.0)).unwrap();
        let r = bound_suite(&ctx, &fixtures::smooth_step(), 2, 513).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|b| b.passed), "{r:#?}");
        assert!(bound_suite(&ctx, &fixtures::kinked_abs(0.5), 2, 65).is_err());
    }
}
