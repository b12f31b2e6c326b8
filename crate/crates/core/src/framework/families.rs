//! Ready-made specs for the distributions used throughout the crate.

use std::f64::consts::PI;
use std::sync::Arc;

use super::spec::{DistributionSpec, SupportInterval};
use crate::error::{Error, Result};
use crate::special::{beta_ln_pdf, beta_median, incbeta_pair, lgamma, BetaParams};

impl DistributionSpec {
    /// Beta(a, b) with `γ(x) = (a + b)(a/(a + b) - x)` and `η(x) = x(1 - x)`.
    pub fn beta(params: BetaParams) -> Result<Self> {
        let (a, b) = (params.a(), params.b());
        let s = a + b;
        let density = move |x: f64| -> f64 {
            if x > 0.0 && x < 1.0 {
                beta_ln_pdf(x, params).exp()
            } else if x == 0.0 || x == 1.0 {
                let shape = if x == 0.0 { a } else { b };
                let other = if x == 0.0 { b } else { a };
                if shape < 1.0 {
                    f64::INFINITY
                } else if shape > 1.0 {
                    0.0
                } else {
                    other
                }
            } else {
                0.0
            }
        };
        let cdf = move |x: f64| incbeta_pair(x, a, b).map(|p| p.0).unwrap_or(f64::NAN);
        let sf = move |x: f64| incbeta_pair(x, a, b).map(|p| p.1).unwrap_or(f64::NAN);
        DistributionSpec::builder(
            &format!("Beta({a}, {b})"),
            SupportInterval::unit(),
            density,
            move |x| a - s * x,
        )
        .log_density(move |x| beta_ln_pdf(x, params))
        .gamma_derivative(move |_| -s)
        .psi(move |x| (a - 1.0) / x - (b - 1.0) / (1.0 - x))
        .cdf(cdf)
        .sf(sf)
        .known_eta(|x| x * (1.0 - x))
        .exponents(a - 1.0, b - 1.0)
        .mean(a / s)
        .median(beta_median(params)?)
        .build()
    }

    /// N(0, 1) with `γ(x) = -x`, for which `η ≡ 1`.
    pub fn standard_normal() -> Result<Self> {
        let norm = (2.0 * PI).sqrt().recip();
        DistributionSpec::builder(
            "N(0, 1)",
            SupportInterval::real_line(),
            move |x| norm * (-0.5 * x * x).exp(),
            |x| -x,
        )
        .log_density(move |x| norm.ln() - 0.5 * x * x)
        .gamma_derivative(|_| -1.0)
        .psi(|x| -x)
        .known_eta(|_| 1.0)
        .mean(0.0)
        .median(0.0)
        .build()
    }

    /// Exponential(α) with `γ(x) = 1 - αx` and `η(x) = x`.
    pub fn exponential(alpha: f64) -> Result<Self> {
        Self::gamma_shape(1.0, alpha)
    }

    /// Gamma(k, α) (rate α) with `γ(x) = k - αx` and `η(x) = x`.
    pub fn gamma_shape(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0 && rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Gamma shape and rate must be positive, got ({shape}, {rate})"
            )));
        }
        let log_norm = shape * rate.ln() - lgamma(shape);
        let log_density = move |x: f64| log_norm + (shape - 1.0) * x.ln() - rate * x;
        let density = move |x: f64| -> f64 {
            if x > 0.0 {
                log_density(x).exp()
            } else if x == 0.0 {
                if shape < 1.0 {
                    f64::INFINITY
                } else if shape > 1.0 {
                    0.0
                } else {
                    rate
                }
            } else {
                0.0
            }
        };
        let name = if shape == 1.0 {
            format!("Exp({rate})")
        } else {
            format!("Gamma({shape}, {rate})")
        };
        let mut builder = DistributionSpec::builder(
            &name,
            SupportInterval::positive_half_line(),
            density,
            move |x| shape - rate * x,
        )
        .log_density(log_density)
        .gamma_derivative(move |_| -rate)
        .psi(move |x| (shape - 1.0) / x - rate)
        .known_eta(|x| x)
        .exponents((shape - 1.0).min(0.0), 0.0)
        .mean(shape / rate);
        if shape == 1.0 {
            builder = builder
                .cdf(move |x| -(-rate * x).exp_m1())
                .sf(move |x| (-rate * x).exp())
                .median(std::f64::consts::LN_2 / rate);
        } else if shape == 2.0 {
            builder = builder
                .cdf(move |x| {
                    let t = rate * x;
                    -(-t).exp_m1() - t * (-t).exp()
                })
                .sf(move |x| {
                    let t = rate * x;
                    (1.0 + t) * (-t).exp()
                });
        }
        builder.build()
    }

    /// Spec for a density with coefficient `γ(x) = c (E[Z] - x)`.
    pub fn with_mean_reverting_gamma(
        name: &str,
        support: SupportInterval,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rate: f64,
    ) -> Result<Self> {
        let density = Arc::new(density);
        let d = density.clone();
        let probe = DistributionSpec::builder(name, support, move |x| d(x), |x| -x).build()?;
        let mean = probe
            .mean()
            .ok_or_else(|| Error::Condition(format!("'{name}' has no finite mean")))?;
        DistributionSpec::builder(name, support, move |x| density(x), move |x| rate * (mean - x))
            .gamma_derivative(move |_| -rate)
            .mean(mean)
            .median(probe.median())
            .build()
    }
}

/// Piecewise-linear density on (0, 1] whose Mills ratio at 0 does not vanish.
///
/// With `δ_n = 2^-n` the nodes are `x_n = 2^-(n-1)`, `q(1) = 1/2`,
/// `q(x_{2m}) = 2^-4m` and `q(x_{2m+1}) = 2^-2m`, and `q` is linear between
/// consecutive nodes. The density is `q / Z` with `Z` the exact trapezoid sum.
#[derive(Debug, Clone)]
pub struct Sawtooth {
    /// `tail[n]` is `∫_0^{x_{n+1}} q`, the unnormalized mass below node `n+1`.
    tail: Arc<Vec<f64>>,
    normalizer: f64,
    mean: f64,
}

/// Nodes beyond this index carry mass below the f64 resolution.
const SAWTOOTH_NODES: usize = 1100;

impl Sawtooth {
    pub fn new() -> Self {
        let mut pieces = vec![0.0; SAWTOOTH_NODES + 2];
        let mut first_moment = 0.0;
        for n in 1..=SAWTOOTH_NODES {
            let (x_hi, x_lo) = (Self::node(n), Self::node(n + 1));
            let (q_hi, q_lo) = (Self::node_value(n), Self::node_value(n + 1));
            pieces[n] = 0.5 * (x_hi - x_lo) * (q_hi + q_lo);
            first_moment += (x_hi - x_lo) / 6.0 * (x_lo * (2.0 * q_lo + q_hi) + x_hi * (q_lo + 2.0 * q_hi));
        }
        let mut tail = vec![0.0; SAWTOOTH_NODES + 2];
        for n in (1..SAWTOOTH_NODES).rev() {
            tail[n] = tail[n + 1] + pieces[n + 1];
        }
        let normalizer = tail[1] + pieces[1];
        Self {
            tail: Arc::new(tail),
            normalizer,
            mean: first_moment / normalizer,
        }
    }

    /// `x_n = 2^-(n-1)`.
    pub fn node(n: usize) -> f64 {
        2f64.powi(1 - n as i32)
    }

    /// Unnormalized value `q(x_n)`.
    pub fn node_value(n: usize) -> f64 {
        if n == 1 {
            0.5
        } else if n % 2 == 0 {
            2f64.powi(-4 * (n / 2) as i32)
        } else {
            2f64.powi(-2 * (n / 2) as i32)
        }
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Index `n` with `x` in `[x_{n+1}, x_n]`.
    fn interval(x: f64) -> usize {
        // x in [2^e, 2^(e+1)) lies in I_n with n = -e
        let e = x.log2().floor();
        let mut n = (-e) as usize;
        if Self::node(n + 1) > x {
            n += 1;
        }
        if n > 1 && Self::node(n) < x {
            n -= 1;
        }
        n.max(1)
    }

    fn q(&self, x: f64) -> f64 {
        if !(x > 0.0 && x <= 1.0) {
            return 0.0;
        }
        let n = Self::interval(x);
        if n >= SAWTOOTH_NODES {
            return 0.0;
        }
        let (x_lo, x_hi) = (Self::node(n + 1), Self::node(n));
        let (q_lo, q_hi) = (Self::node_value(n + 1), Self::node_value(n));
        q_lo + (q_hi - q_lo) * (x - x_lo) / (x_hi - x_lo)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.q(x) / self.normalizer
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let n = Self::interval(x);
        if n >= SAWTOOTH_NODES {
            return 0.0;
        }
        let x_lo = Self::node(n + 1);
        let partial = 0.5 * (x - x_lo) * (Self::node_value(n + 1) + self.q(x));
        (self.tail[n] + partial) / self.normalizer
    }

    /// Mills ratio `F(x_n) / p(x_n)` at a node.
    pub fn mills_ratio_at_node(&self, n: usize) -> f64 {
        let below = if n <= 1 {
            self.normalizer
        } else {
            self.tail[n - 1]
        };
        below / Self::node_value(n)
    }

    /// The sawtooth as a [`DistributionSpec`] with `γ(x) = E[Z] - x`.
    pub fn spec(&self) -> Result<DistributionSpec> {
        let (d, c, s) = (self.clone(), self.clone(), self.clone());
        let mean = self.mean;
        let breaks: Vec<f64> = (2..=64).map(Self::node).collect();
        DistributionSpec::builder(
            "sawtooth",
            SupportInterval::unit(),
            move |x| d.density(x),
            move |x| mean - x,
        )
        .gamma_derivative(|_| -1.0)
        .cdf(move |x| c.cdf(x))
        .sf(move |x| 1.0 - s.cdf(x))
        .exponents(0.0, 0.0)
        .breaks(breaks)
        .mean(mean)
        .build()
    }
}

impl Default for Sawtooth {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_spec_caches() {
        let spec = DistributionSpec::beta(BetaParams::new(2.0, 3.0).unwrap()).unwrap();
        assert!((spec.mass() - 1.0).abs() < 1e-12);
        assert_eq!(spec.mean(), Some(0.4));
        assert!((spec.x0().unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(spec.core_range(), (0.0, 1.0));
    }

    #[test]
    fn singular_beta_normalizes() {
        let spec = DistributionSpec::beta(BetaParams::new(0.5, 0.3).unwrap()).unwrap();
        assert!((spec.mass() - 1.0).abs() < 1e-10, "{}", spec.mass());
    }

    #[test]
    fn normal_core_range_is_symmetric() {
        let spec = DistributionSpec::standard_normal().unwrap();
        let (lo, hi) = spec.core_range();
        assert!((lo + hi).abs() < 1e-6);
        assert!(hi > 7.0 && hi < 8.5, "{hi}");
        assert!((spec.x0().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn exponential_spec() {
        let spec = DistributionSpec::exponential(2.0).unwrap();
        assert_eq!(spec.mean(), Some(0.5));
        assert!((spec.x0().unwrap() - 0.5).abs() < 1e-12);
        assert!((spec.cdf(1.0).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn sawtooth_nodes_and_mass() {
        let saw = Sawtooth::new();
        assert_eq!(Sawtooth::node(1), 1.0);
        assert_eq!(Sawtooth::node(4), 0.125);
        assert_eq!(Sawtooth::node_value(4), 2f64.powi(-8));
        assert_eq!(Sawtooth::node_value(5), 2f64.powi(-4));
        assert!((saw.cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((saw.cdf(0.999_999_999) - 1.0).abs() < 1e-8);
        // density continuous at a node
        let x = Sawtooth::node(6);
        assert!((saw.density(x * (1.0 + 1e-12)) - saw.density(x * (1.0 - 1e-12))).abs() < 1e-9);
        let spec = saw.spec().unwrap();
        assert!((spec.mass() - 1.0).abs() < 1e-10);
    }
}
