use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::spec::RealFn;
use crate::error::{Error, Result};
use crate::supnorm::{chebyshev_grid, sup_from_samples, sup_norm, GridKind, DEFAULT_GRID};

/// Smoothness class of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Smoothness {
    BoundedMeasurable,
    Lipschitz,
    /// Continuously differentiable with Lipschitz derivative.
    C1Lipschitz,
    /// `m` times differentiable with bounded `m`-th derivative.
    Cm(u32),
}

impl Smoothness {
    /// Highest derivative order whose sup norm the class controls.
    pub fn order(self) -> u32 {
        match self {
            Smoothness::BoundedMeasurable => 0,
            Smoothness::Lipschitz => 1,
            Smoothness::C1Lipschitz => 2,
            Smoothness::Cm(m) => m,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::BoundedMeasurable => write!(f, "bounded measurable"),
            Smoothness::Lipschitz => write!(f, "Lipschitz"),
            Smoothness::C1Lipschitz => write!(f, "C1 with Lipschitz derivative"),
            Smoothness::Cm(m) => write!(f, "C{m}"),
        }
    }
}

/// A norm value and whether it was declared or estimated from a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norm {
    pub value: f64,
    pub estimated: bool,
}

impl Norm {
    pub fn declared(value: f64) -> Self {
        Self {
            value,
            estimated: false,
        }
    }

    pub fn estimated(value: f64) -> Self {
        Self {
            value,
            estimated: true,
        }
    }
}

/// Result of comparing a declared derivative norm with a grid measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormCheck {
    pub order: usize,
    pub declared: f64,
    pub measured: f64,
    pub ok: bool,
}

/// A scalar test function with smoothness and norm metadata.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    value: RealFn,
    derivatives: Vec<RealFn>,
    smoothness: Smoothness,
    range: Option<(f64, f64)>,
    norms: Vec<Option<f64>>,
    polynomial: Option<Arc<Vec<f64>>>,
    pieces: Option<Arc<Vec<PolynomialPiece>>>,
    kinks: Vec<f64>,
    continuous: bool,
}

/// `Σ c_k x^k` on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPiece {
    pub lo: f64,
    pub hi: f64,
    pub coefficients: Vec<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .field("range", &self.range)
            .field("norms", &self.norms)
            .field("polynomial", &self.polynomial)
            .finish_non_exhaustive()
    }
}

impl TestFunction {
    pub fn new(
        name: &str,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        smoothness: Smoothness,
    ) -> Self {
        Self {
            name: name.to_string(),
            value: Arc::new(value),
            derivatives: Vec::new(),
            smoothness,
            range: None,
            norms: Vec::new(),
            polynomial: None,
            pieces: None,
            kinks: Vec::new(),
            continuous: smoothness != Smoothness::BoundedMeasurable,
        }
    }

    /// Polynomial `Σ c_k x^k`. Derivatives of every order are available;
    /// norms and the range are computed over `[lo, hi]`.
    pub fn polynomial(name: &str, coefficients: &[f64], lo: f64, hi: f64) -> Self {
        let coeffs: Vec<f64> = {
            let mut c = coefficients.to_vec();
            while c.len() > 1 && c.last() == Some(&0.0) {
                c.pop();
            }
            if c.is_empty() {
                c.push(0.0);
            }
            c
        };
        let degree = coeffs.len() - 1;
        let shared = Arc::new(coeffs);
        let c = shared.clone();
        let mut h = Self::new(name, move |x| horner(&c, x), Smoothness::Cm(64));
        let mut derivs = Vec::new();
        let mut current = shared.as_ref().clone();
        for _ in 0..=degree {
            current = differentiate(&current);
            let d = Arc::new(current.clone());
            derivs.push(Arc::new(move |x: f64| horner(&d, x)) as RealFn);
        }
        h.derivatives = derivs;
        h.polynomial = Some(shared.clone());
        let bounded = lo.is_finite() && hi.is_finite();
        let mut norms = Vec::new();
        let mut current = shared.as_ref().clone();
        for _ in 0..=degree {
            current = differentiate(&current);
            let n = if current.iter().all(|&c| c == 0.0) {
                0.0
            } else if current.len() == 1 {
                current[0].abs()
            } else if bounded {
                let d = current.clone();
                sup_norm(|x| horner(&d, x), lo, hi, DEFAULT_GRID, GridKind::Closed).value
            } else {
                f64::INFINITY
            };
            norms.push(Some(n));
        }
        h.norms = norms;
        h.range = if degree == 0 {
            Some((shared[0], shared[0]))
        } else if bounded {
            let p = shared.clone();
            let grid = chebyshev_grid(lo, hi, DEFAULT_GRID, GridKind::Closed);
            let values: Vec<f64> = grid.iter().map(|&x| horner(&p, x)).collect();
            let top = values.iter().copied().fold(f64::MIN, f64::max);
            let bottom = values.iter().copied().fold(f64::MAX, f64::min);
            let above: Vec<f64> = values.iter().map(|v| v - bottom).collect();
            let below: Vec<f64> = values.iter().map(|v| top - v).collect();
            let up = sup_from_samples(&|x| horner(&p, x) - bottom, &grid, &above);
            let down = sup_from_samples(&|x| top - horner(&p, x), &grid, &below);
            Some((top - down.value, bottom + up.value))
        } else {
            None
        };
        h
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivatives.push(Arc::new(d));
        self
    }

    /// Declares `‖h^(order)‖` (order ≥ 1).
    pub fn with_norm(mut self, order: usize, value: f64) -> Self {
        assert!(order >= 1, "norm order starts at 1");
        if self.norms.len() < order {
            self.norms.resize(order, None);
        }
        self.norms[order - 1] = Some(value);
        self
    }

    /// Declares the infimum and supremum of `h` on the support.
    pub fn with_range(mut self, inf: f64, sup: f64) -> Self {
        self.range = Some((inf, sup));
        self
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    /// Declares `h` as piecewise polynomial; the pieces must cover the
    /// support and agree with the value function.
    pub fn with_pieces(mut self, pieces: Vec<PolynomialPiece>) -> Self {
        self.pieces = Some(Arc::new(pieces));
        self
    }

    pub fn discontinuous(mut self) -> Self {
        self.continuous = false;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn value_fn(&self) -> RealFn {
        self.value.clone()
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    pub fn pieces(&self) -> Option<&[PolynomialPiece]> {
        self.pieces.as_deref().map(|v| v.as_slice())
    }

    pub fn polynomial_coefficients(&self) -> Option<&[f64]> {
        self.polynomial.as_deref().map(|v| v.as_slice())
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        self.range
    }

    pub fn derivative_count(&self) -> usize {
        self.derivatives.len()
    }

    pub fn derivative_fn(&self, order: usize) -> Result<RealFn> {
        if order == 0 {
            return Ok(self.value.clone());
        }
        if let Some(coeffs) = &self.polynomial {
            let mut c = coeffs.as_ref().clone();
            for _ in 0..order {
                c = differentiate(&c);
            }
            return Ok(Arc::new(move |x| horner(&c, x)));
        }
        self.derivatives
            .get(order - 1)
            .cloned()
            .ok_or_else(|| Error::Smoothness {
                name: self.name.clone(),
                needed: format!("derivative of order {order}"),
            })
    }

    pub fn eval_derivative(&self, order: usize, x: f64) -> Result<f64> {
        Ok(self.derivative_fn(order)?(x))
    }

    pub fn declared_norm(&self, order: usize) -> Option<f64> {
        if order == 0 {
            return None;
        }
        if let Some(c) = &self.polynomial {
            if order >= c.len() {
                return Some(0.0);
            }
        }
        self.norms.get(order - 1).copied().flatten()
    }

    pub fn require_order(&self, order: u32) -> Result<()> {
        if self.smoothness.order() >= order {
            Ok(())
        } else {
            Err(Error::Smoothness {
                name: self.name.clone(),
                needed: format!("smoothness of order {order} (declared {})", self.smoothness),
            })
        }
    }

    /// `‖h^(order)‖` over `[lo, hi]`: the declared value if there is one,
    /// otherwise a grid estimate marked as such. Without a derivative
    /// callable the estimate is the largest difference quotient of the
    /// previous derivative.
    pub fn norm(&self, order: usize, lo: f64, hi: f64) -> Result<Norm> {
        if order == 0 {
            let s = sup_norm(|x| self.eval(x), lo, hi, DEFAULT_GRID, GridKind::Closed);
            return Ok(Norm::estimated(s.value));
        }
        if let Some(v) = self.declared_norm(order) {
            return Ok(Norm::declared(v));
        }
        if let Ok(d) = self.derivative_fn(order) {
            let (a, b) = crate::supnorm::inset_interval(lo, hi, order.saturating_sub(1));
            let s = sup_norm(|x| d(x), a, b, DEFAULT_GRID, GridKind::Closed);
            return Ok(Norm::estimated(s.value));
        }
        let prev = self.derivative_fn(order - 1)?;
        let grid = chebyshev_grid(lo, hi, DEFAULT_GRID, GridKind::Closed);
        let mut best: f64 = 0.0;
        for w in grid.windows(2) {
            let q = (prev(w[1]) - prev(w[0])) / (w[1] - w[0]);
            if q.is_finite() {
                best = best.max(q.abs());
            }
        }
        Ok(Norm::estimated(best))
    }

    /// `‖h - c‖` over the support, from the declared range when available.
    pub fn centred_norm(&self, centre: f64, lo: f64, hi: f64) -> Norm {
        match self.range {
            Some((inf, sup)) => Norm::declared((sup - centre).max(centre - inf)),
            None => {
                let grid = chebyshev_grid(lo, hi, DEFAULT_GRID, GridKind::Closed);
                let v = grid
                    .iter()
                    .map(|&x| (self.eval(x) - centre).abs())
                    .filter(|v| v.is_finite())
                    .fold(0.0, f64::max);
                Norm::estimated(v)
            }
        }
    }

    /// One-sided limit of `h` at `end`, approached from direction `dir`
    /// (`+1` from the right). Continuous functions are evaluated directly;
    /// otherwise the limit is taken numerically along `end + dir w 2^-k`.
    pub fn limit_at(&self, end: f64, dir: f64, width: f64) -> (f64, bool) {
        if self.continuous {
            let v = self.eval(end);
            if v.is_finite() {
                return (v, true);
            }
        }
        let mut last = f64::NAN;
        let mut stable = 0;
        for k in 10..=60 {
            let x = end + dir * width * 2f64.powi(-k);
            if x == end {
                break;
            }
            let v = self.eval(x);
            if (v - last).abs() <= 1e-12 * v.abs().max(1.0) {
                stable += 1;
            } else {
                stable = 0;
            }
            last = v;
        }
        (last, stable >= 5)
    }

    /// Compares declared derivative norms with grid maxima on `[lo, hi]`.
    pub fn check_declared_norms(&self, lo: f64, hi: f64, tol: f64) -> Vec<NormCheck> {
        let mut out = Vec::new();
        for order in 1..=self.norms.len().max(self.derivatives.len()) {
            let (Some(declared), Ok(d)) = (self.declared_norm(order), self.derivative_fn(order))
            else {
                continue;
            };
            let grid = chebyshev_grid(lo, hi, DEFAULT_GRID, GridKind::Closed);
            let measured = grid
                .iter()
                .map(|&x| d(x).abs())
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max);
            out.push(NormCheck {
                order,
                declared,
                measured,
                ok: measured <= declared + tol,
            });
        }
        out
    }
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

pub(crate) fn differentiate(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| k as f64 * ck)
        .collect()
}
