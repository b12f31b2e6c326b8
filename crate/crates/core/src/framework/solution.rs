use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::coefficients::{eta_at, gamma_integral_fast};
use super::spec::DistributionSpec;
use super::test_function::{Smoothness, TestFunction};
use crate::error::{Error, Result};

/// Below this value of `η p` the quotient formula is replaced by the
/// boundary form `(h(x) - E h) / γ(x)`.
const UNDERFLOW_GUARD: f64 = 1e-290;

type Numerator = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// The standard solution `g_h(x) = (1/(η(x) p(x))) ∫_a^x (h - E h) p`.
#[derive(Clone)]
pub struct SteinSolution {
    spec: DistributionSpec,
    h: TestFunction,
    eh: f64,
    numerator: Option<Numerator>,
    lower_value: Option<f64>,
    upper_value: Option<f64>,
    boundary_converged: bool,
}

impl fmt::Debug for SteinSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SteinSolution")
            .field("spec", &self.spec.name())
            .field("h", &self.h.name())
            .field("eh", &self.eh)
            .field("closed_numerator", &self.numerator.is_some())
            .field("lower_value", &self.lower_value)
            .field("upper_value", &self.upper_value)
            .finish()
    }
}

/// Builds the standard solution for `h` with `E[h(Z)]` by quadrature.
pub fn standard_solution(spec: &DistributionSpec, h: &TestFunction) -> Result<SteinSolution> {
    let eh = spec.expect_with_breaks(|t| h.eval(t), h.kinks())?;
    if !eh.is_finite() {
        return Err(Error::Condition(format!(
            "E[h(Z)] is not finite for '{}'",
            h.name()
        )));
    }
    SteinSolution::assemble(spec, h, eh, None)
}

impl SteinSolution {
    /// Builds a solution from a known `E[h(Z)]` and optionally a closed form
    /// of the numerator `∫_a^x (h - E h) p`.
    pub fn assemble(
        spec: &DistributionSpec,
        h: &TestFunction,
        eh: f64,
        numerator: Option<Numerator>,
    ) -> Result<Self> {
        let s = spec.support();
        let mut converged = true;
        let mut boundary = |end: f64, dir: f64| -> Option<f64> {
            if !end.is_finite() {
                return None;
            }
            let width = (spec.median() - end).abs();
            let (limit, ok) = h.limit_at(end, dir, width);
            converged &= ok;
            let g = spec.gamma(end);
            if g.is_infinite() {
                Some(0.0)
            } else {
                Some((limit - eh) / g)
            }
        };
        let lower_value = boundary(s.lower(), 1.0);
        let upper_value = boundary(s.upper(), -1.0);
        Ok(Self {
            spec: spec.clone(),
            h: h.clone(),
            eh,
            numerator,
            lower_value,
            upper_value,
            boundary_converged: converged,
        })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn test_function(&self) -> &TestFunction {
        &self.h
    }

    /// Cached `E[h(Z)]`.
    pub fn eh(&self) -> f64 {
        self.eh
    }

    /// `h(x) - E[h(Z)]`.
    pub fn centred(&self, x: f64) -> f64 {
        self.h.eval(x) - self.eh
    }

    pub fn lower_value(&self) -> Option<f64> {
        self.lower_value
    }

    pub fn upper_value(&self) -> Option<f64> {
        self.upper_value
    }

    /// Whether the one-sided limits of `h` used for the boundary values
    /// converged (always true for continuous `h`).
    pub fn boundary_converged(&self) -> bool {
        self.boundary_converged
    }

    /// `∫_a^x (h - E h) p`, using the lower tail left of the median and the
    /// negated upper tail right of it.
    pub fn numerator(&self, x: f64) -> Result<f64> {
        if let Some(n) = &self.numerator {
            return n(x);
        }
        let p = self.spec.density_fn();
        let f = |t: f64| {
            let d = p(t);
            if d == 0.0 {
                0.0
            } else {
                (self.h.eval(t) - self.eh) * d
            }
        };
        let s = self.spec.support();
        if x <= self.spec.median() {
            Ok(self
                .spec
                .integrate_with_breaks(f, s.lower(), x, self.h.kinks())?
                .value)
        } else {
            Ok(-self
                .spec
                .integrate_with_breaks(f, x, s.upper(), self.h.kinks())?
                .value)
        }
    }

    /// `g_h(x)` on the closed support.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let s = self.spec.support();
        if x == s.lower() {
            return self.lower_value.ok_or(Error::domain("SteinSolution::eval", x));
        }
        if x == s.upper() {
            return self.upper_value.ok_or(Error::domain("SteinSolution::eval", x));
        }
        if !s.contains_open(x) {
            return Err(Error::domain("SteinSolution::eval", x));
        }
        let i = gamma_integral_fast(&self.spec, x)?;
        if !(i > UNDERFLOW_GUARD) || !i.is_finite() {
            return Ok(self.boundary_form(x));
        }
        Ok(self.numerator(x)? / i)
    }

    fn boundary_form(&self, x: f64) -> f64 {
        let s = self.spec.support();
        let near_lower = (x - s.lower()).abs() <= (s.upper() - x).abs();
        let end_value = if near_lower {
            self.lower_value
        } else {
            self.upper_value
        };
        match end_value {
            Some(v) => v,
            None => {
                let g = self.spec.gamma(x);
                if g == 0.0 {
                    0.0
                } else {
                    self.centred(x) / g
                }
            }
        }
    }

    /// `g_h'(x) = (h̃(x) - γ(x) g_h(x)) / η(x)` on the open support.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        if !self.spec.support().contains_open(x) {
            return Err(Error::domain("SteinSolution::deriv", x));
        }
        let g = self.eval(x)?;
        let eta = eta_at(&self.spec, x)?;
        Ok((self.centred(x) - self.spec.gamma(x) * g) / eta)
    }

    /// `η g' + γ g - h̃` with `g'` supplied by the caller.
    pub fn residual_with(&self, x: f64, derivative: f64) -> Result<f64> {
        let g = self.eval(x)?;
        let eta = eta_at(&self.spec, x)?;
        Ok(eta * derivative + self.spec.gamma(x) * g - self.centred(x))
    }

    pub fn eval_grid(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.par_iter().map(|&x| self.eval(x)).collect()
    }

    pub fn deriv_grid(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.par_iter().map(|&x| self.deriv(x)).collect()
    }
}

/// Solution for `h = 1_{(a, z]}` and its sup norm
/// `S(z) = F(z)(1 - F(z)) / I(z)`.
pub fn kolmogorov_solution(spec: &DistributionSpec, z: f64) -> Result<(SteinSolution, f64)> {
    if !spec.support().contains_open(z) {
        return Err(Error::domain("kolmogorov_solution", z));
    }
    let fz = spec.cdf(z)?;
    let sz = spec.sf(z)?;
    let h = TestFunction::new(
        &format!("1(x <= {z})"),
        move |x| if x <= z { 1.0 } else { 0.0 },
        Smoothness::BoundedMeasurable,
    )
    .with_range(0.0, 1.0)
    .with_kinks(vec![z]);
    let s2 = spec.clone();
    let numerator: Numerator = Arc::new(move |x: f64| {
        if x <= z {
            Ok(s2.cdf(x)? * sz)
        } else {
            Ok(fz * s2.sf(x)?)
        }
    });
    let sol = SteinSolution::assemble(spec, &h, fz, Some(numerator))?;
    let s_value = fz * sz / gamma_integral_fast(spec, z)?;
    Ok((sol, s_value))
}

/// Law under which a characterization residual is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum Measure<'a> {
    /// The target law of the spec itself.
    Target,
    Density(&'a DistributionSpec),
    /// Atoms `(x, weight)`; weights should sum to one.
    Discrete(&'a [(f64, f64)]),
    /// Empirical law of a sample.
    Sample(&'a [f64]),
    PointMass(f64),
}

/// `E[η(X) f'(X) + γ(X) f(X)]` for `X` distributed according to `measure`.
pub fn characterization_residual(
    spec: &DistributionSpec,
    f: &TestFunction,
    measure: Measure<'_>,
) -> Result<f64> {
    let df = f.derivative_fn(1)?;
    let term = |x: f64| -> Result<f64> {
        let eta = eta_at(spec, x)?;
        let d = if eta == 0.0 { 0.0 } else { eta * df(x) };
        Ok(d + spec.gamma(x) * f.eval(x))
    };
    match measure {
        Measure::Target => integrate_against(spec, spec, f, &term),
        Measure::Density(other) => integrate_against(spec, other, f, &term),
        Measure::Discrete(atoms) => {
            let mut sum = 0.0;
            let mut comp = 0.0;
            for &(x, w) in atoms {
                if w != 0.0 {
                    neumaier(&mut sum, &mut comp, w * term(x)?);
                }
            }
            Ok(sum + comp)
        }
        Measure::Sample(xs) => {
            if xs.is_empty() {
                return Err(Error::InvalidParameter("empty sample".into()));
            }
            let mut sum = 0.0;
            let mut comp = 0.0;
            for &x in xs {
                neumaier(&mut sum, &mut comp, term(x)?);
            }
            Ok((sum + comp) / xs.len() as f64)
        }
        Measure::PointMass(x) => term(x),
    }
}

fn integrate_against(
    spec: &DistributionSpec,
    law: &DistributionSpec,
    f: &TestFunction,
    term: &dyn Fn(f64) -> Result<f64>,
) -> Result<f64> {
    let failure = std::sync::Mutex::new(None);
    let p = law.density_fn();
    let integrand = |t: f64| -> f64 {
        let d = p(t);
        if d == 0.0 || !spec.support().contains_open(t) {
            return 0.0;
        }
        match term(t) {
            Ok(v) => v * d,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                0.0
            }
        }
    };
    let s = law.support();
    let value = law
        .integrate_with_breaks(integrand, s.lower(), s.upper(), f.kinks())?
        .value;
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

pub(crate) fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::BetaParams;

    fn beta(a: f64, b: f64) -> DistributionSpec {
        DistributionSpec::beta(BetaParams::new(a, b).unwrap()).unwrap()
    }

    fn identity() -> TestFunction {
        TestFunction::new("x", |x| x, Smoothness::Cm(8))
            .with_derivative(|_| 1.0)
            .with_derivative(|_| 0.0)
            .with_norm(1, 1.0)
            .with_norm(2, 0.0)
    }

    #[test]
    fn identity_gives_constant_solution() {
        let spec = beta(2.0, 3.0);
        let sol = standard_solution(&spec, &identity()).unwrap();
        for x in [0.0, 1e-9, 0.2, 0.5, 0.9, 1.0 - 1e-9, 1.0] {
            let g = sol.eval(x).unwrap();
            assert!((g + 0.2).abs() < 1e-9, "x = {x}: {g}");
        }
    }

    #[test]
    fn constant_gives_zero() {
        let spec = DistributionSpec::standard_normal().unwrap();
        let h = TestFunction::new("c", |_| 3.0, Smoothness::Cm(8)).with_range(3.0, 3.0);
        let sol = standard_solution(&spec, &h).unwrap();
        for x in [-3.0, 0.0, 2.0] {
            assert!(sol.eval(x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_values() {
        let spec = beta(2.0, 3.0);
        let h = TestFunction::polynomial("x2", &[0.0, 0.0, 1.0], 0.0, 1.0);
        let sol = standard_solution(&spec, &h).unwrap();
        let eh = sol.eh();
        assert!((sol.lower_value().unwrap() - (0.0 - eh) / 2.0).abs() < 1e-15);
        assert!((sol.upper_value().unwrap() - (1.0 - eh) / -3.0).abs() < 1e-15);
        let g_eps = sol.eval(2f64.powi(-30)).unwrap();
        assert!((g_eps - sol.lower_value().unwrap()).abs() < 1e-6);
    }

    #[test]
    fn exponential_indicator_derivative() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let z = 0.7;
        let (sol, s) = kolmogorov_solution(&spec, z).unwrap();
        for x in [1.0, 2.0, 5.0] {
            let expect = ((-z).exp() - 1.0) / (x * x);
            assert!((sol.deriv(x).unwrap() - expect).abs() < 1e-10);
        }
        assert!((sol.eval(z).unwrap() - s).abs() < 1e-14);
    }

    #[test]
    fn kolmogorov_beta22_centre() {
        let (_, s) = kolmogorov_solution(&beta(2.0, 2.0), 0.5).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn residual_under_target_vanishes() {
        let spec = beta(2.0, 3.0);
        let f = TestFunction::polynomial("x2", &[0.0, 0.0, 1.0], 0.0, 1.0);
        let r = characterization_residual(&spec, &f, Measure::Target).unwrap();
        assert!(r.abs() < 1e-12);
        let one = TestFunction::polynomial("1", &[1.0], 0.0, 1.0);
        let x0 = spec.x0().unwrap();
        assert!(characterization_residual(&spec, &one, Measure::PointMass(x0)).unwrap().abs() < 1e-11);
    }
}
