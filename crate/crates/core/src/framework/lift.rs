//! The derivative lift: `g_h'` is the standard solution for the law with
//! density proportional to `η p` and coefficient `η' + γ`.

use std::sync::Arc;

use super::coefficients::eta_at;
use super::solution::SteinSolution;
use super::spec::{DistributionSpec, RealFn};
use super::test_function::{Smoothness, TestFunction};
use crate::error::Result;

/// The lifted spec with density `∝ η p`, coefficient `γ̃ = η' + γ = 2γ - ψη`
/// and the same `η`.
pub fn derivative_lift(spec: &DistributionSpec) -> Result<DistributionSpec> {
    let base = spec.clone();
    let eta: RealFn = match spec.known_eta() {
        Some(f) => f.clone(),
        None => {
            let s = spec.clone();
            Arc::new(move |x| eta_at(&s, x).unwrap_or(f64::NAN))
        }
    };
    let support = spec.support();
    let (e1, e2) = (eta.clone(), eta.clone());
    let (b1, b2) = (base.clone(), base.clone());
    let density = move |x: f64| {
        if support.contains_open(x) {
            e1(x) * b1.density(x)
        } else {
            0.0
        }
    };
    let gamma = move |x: f64| {
        let g = b2.gamma(x);
        if support.contains_open(x) {
            2.0 * g - b2.psi(x) * e2(x)
        } else {
            g
        }
    };
    let (b3, e3) = (base.clone(), eta.clone());
    let psi: RealFn = Arc::new(move |x| b3.gamma(x) / e3(x));
    let lift = |e: f64, end: f64| if end.is_finite() { e + 1.0 } else { e };
    let exps = spec.exponents();
    let b4 = base.clone();
    let e4 = eta.clone();
    DistributionSpec::builder(&format!("lift of {}", spec.name()), support, density, gamma)
        .log_density(move |x| e4(x).ln() + b4.log_density(x))
        .psi_arc(psi)
        .known_eta_arc(eta)
        .exponents(
            lift(exps.lower, support.lower()),
            lift(exps.upper, support.upper()),
        )
        .breaks(spec.breaks().to_vec())
        .unnormalized()
        .build()
}

/// `h_2 = h' - γ' g_h`, the test function whose standard solution for the
/// lifted law is `g_h'`.
pub fn lift_test_function(sol: &SteinSolution) -> Result<TestFunction> {
    let h = sol.test_function();
    let dh = h.derivative_fn(1)?;
    let s = sol.clone();
    let name = format!("h2[{}]", h.name());
    let smoothness = match h.smoothness() {
        Smoothness::Cm(m) if m >= 2 => Smoothness::Cm(m - 1),
        Smoothness::C1Lipschitz => Smoothness::Lipschitz,
        _ => Smoothness::BoundedMeasurable,
    };
    let value = move |x: f64| {
        let g = s.eval(x).unwrap_or(f64::NAN);
        dh(x) - s.spec().gamma_derivative(x) * g
    };
    Ok(TestFunction::new(&name, value, smoothness).with_kinks(h.kinks().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::solution::standard_solution;
    use crate::special::{beta_pdf, BetaParams};

    #[test]
    fn beta_lifts_to_shifted_beta() {
        let p = BetaParams::new(2.0, 3.0).unwrap();
        let spec = DistributionSpec::beta(p).unwrap();
        let lifted = derivative_lift(&spec).unwrap();
        let target = BetaParams::new(3.0, 4.0).unwrap();
        for x in [0.1, 0.35, 0.6, 0.95] {
            let want = beta_pdf(x, target).unwrap().finite().unwrap();
            assert!((lifted.density(x) - want).abs() < 1e-10 * want.max(1.0));
            assert!((lifted.gamma(x) - (3.0 - 7.0 * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_lifts_to_erlang() {
        let spec = DistributionSpec::exponential(1.5).unwrap();
        let lifted = derivative_lift(&spec).unwrap();
        for x in [0.2, 1.0, 4.0] {
            let want = 1.5f64.powi(2) * x * (-1.5 * x).exp();
            assert!((lifted.density(x) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn lifted_test_function_has_mean_zero() {
        let spec = DistributionSpec::beta(BetaParams::new(2.0, 3.0).unwrap()).unwrap();
        let h = TestFunction::polynomial("x2", &[0.0, 0.0, 1.0], 0.0, 1.0);
        let sol = standard_solution(&spec, &h).unwrap();
        let h2 = lift_test_function(&sol).unwrap();
        let lifted = derivative_lift(&spec).unwrap();
        let m = lifted.expect(|x| h2.eval(x)).unwrap();
        assert!(m.abs() < 1e-9, "{m}");
    }
}
