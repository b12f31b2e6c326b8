//! Named test functions shared by the library, the CLI and the test suites.

use crate::error::{Error, Result};
use crate::framework::{DistributionSpec, PolynomialPiece, Smoothness, TestFunction};
use crate::special::BetaParams;

/// Names accepted by [`named`], with a parameter placeholder where needed.
pub const FIXTURE_NAMES: &[&str] = &[
    "x",
    "x2",
    "x3",
    "smoothstep",
    "sin",
    "const:<c>",
    "indicator:<z>",
    "abs:<c>",
    "poly:<c0>,<c1>,...",
];

pub fn identity(lo: f64, hi: f64) -> TestFunction {
    TestFunction::polynomial("x", &[0.0, 1.0], lo, hi)
}

pub fn square(lo: f64, hi: f64) -> TestFunction {
    TestFunction::polynomial("x2", &[0.0, 0.0, 1.0], lo, hi)
}

pub fn cube(lo: f64, hi: f64) -> TestFunction {
    TestFunction::polynomial("x3", &[0.0, 0.0, 0.0, 1.0], lo, hi)
}

pub fn constant(c: f64) -> TestFunction {
    TestFunction::polynomial(&format!("const:{c}"), &[c], 0.0, 1.0)
}

pub fn polynomial(coefficients: &[f64], lo: f64, hi: f64) -> TestFunction {
    let name = coefficients
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",");
    TestFunction::polynomial(&format!("poly:{name}"), coefficients, lo, hi)
}

const STEP_LO: f64 = 0.25;
const STEP_HI: f64 = 0.75;

/// Cubic smoothstep rising from 0 at 1/4 to 1 at 3/4, constant outside.
/// `‖h'‖ = 3` and `‖h''‖ = 24`.
pub fn smooth_step() -> TestFunction {
    let w = STEP_HI - STEP_LO;
    let s = move |x: f64| ((x - STEP_LO) / w).clamp(0.0, 1.0);
    TestFunction::new(
        "smoothstep",
        move |x| {
            let t = s(x);
            t * t * (3.0 - 2.0 * t)
        },
        Smoothness::C1Lipschitz,
    )
    .with_derivative(move |x| {
        let t = s(x);
        6.0 * t * (1.0 - t) / w
    })
    .with_derivative(move |x| {
        if x <= STEP_LO || x >= STEP_HI {
            0.0
        } else {
            6.0 * (1.0 - 2.0 * s(x)) / (w * w)
        }
    })
    .with_norm(1, 1.5 / w)
    .with_norm(2, 6.0 / (w * w))
    .with_range(0.0, 1.0)
    .with_kinks(vec![STEP_LO, STEP_HI])
    .with_pieces(vec![
        PolynomialPiece {
            lo: f64::NEG_INFINITY,
            hi: STEP_LO,
            coefficients: vec![0.0],
        },
        PolynomialPiece {
            lo: STEP_LO,
            hi: STEP_HI,
            coefficients: vec![1.0, -9.0, 24.0, -16.0],
        },
        PolynomialPiece {
            lo: STEP_HI,
            hi: f64::INFINITY,
            coefficients: vec![1.0],
        },
    ])
}

pub fn sine() -> TestFunction {
    TestFunction::new("sin", f64::sin, Smoothness::Cm(8))
        .with_derivative(f64::cos)
        .with_derivative(|x| -x.sin())
        .with_derivative(|x| -x.cos())
        .with_norm(1, 1.0)
        .with_norm(2, 1.0)
        .with_norm(3, 1.0)
        .with_range(-1.0, 1.0)
}

/// `1{x ≤ z}`.
pub fn indicator(z: f64) -> TestFunction {
    TestFunction::new(
        &format!("indicator:{z}"),
        move |x| if x <= z { 1.0 } else { 0.0 },
        Smoothness::BoundedMeasurable,
    )
    .with_range(0.0, 1.0)
    .with_kinks(vec![z])
}

/// `|x - c|`, Lipschitz with constant 1.
pub fn kinked_abs(c: f64) -> TestFunction {
    TestFunction::new(&format!("abs:{c}"), move |x| (x - c).abs(), Smoothness::Lipschitz)
        .with_derivative(move |x| if x < c { -1.0 } else { 1.0 })
        .with_norm(1, 1.0)
        .with_kinks(vec![c])
}

/// `-|x - c|`: derivative `+1` left of `c` and `-1` right of it.
pub fn tent(c: f64) -> TestFunction {
    TestFunction::new(&format!("tent:{c}"), move |x| -(x - c).abs(), Smoothness::Lipschitz)
        .with_derivative(move |x| if x < c { 1.0 } else { -1.0 })
        .with_norm(1, 1.0)
        .with_kinks(vec![c])
}

/// Looks up a fixture by name; polynomial norms are taken over `[lo, hi]`.
pub fn named(name: &str, lo: f64, hi: f64) -> Result<TestFunction> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let number = |what: &str| -> Result<f64> {
        let a = arg.ok_or_else(|| {
            Error::InvalidParameter(format!("fixture '{head}' needs a parameter, e.g. {head}:{what}"))
        })?;
        a.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidParameter(format!("bad parameter '{a}' for '{head}'")))
    };
    let plain = |f: TestFunction| -> Result<TestFunction> {
        match arg {
            None => Ok(f),
            Some(_) => Err(Error::InvalidParameter(format!(
                "fixture '{head}' takes no parameter"
            ))),
        }
    };
    match head {
        "x" => plain(identity(lo, hi)),
        "x2" => plain(square(lo, hi)),
        "x3" => plain(cube(lo, hi)),
        "smoothstep" => plain(smooth_step()),
        "sin" => plain(sine()),
        "const" => Ok(constant(number("1")?)),
        "indicator" => Ok(indicator(number("0.5")?)),
        "abs" => Ok(kinked_abs(number("0.5")?)),
        "tent" => Ok(tent(number("0.5")?)),
        "poly" => {
            let coeffs = parse_coefficients(arg.unwrap_or(""))?;
            Ok(polynomial(&coeffs, lo, hi))
        }
        _ => Err(Error::InvalidParameter(format!(
            "unknown test function '{name}'; expected one of {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

/// Names accepted by [`named_distribution`].
pub const DISTRIBUTION_NAMES: &[&str] = &["beta:<a>,<b>", "exp:<alpha>", "gamma:<shape>,<rate>", "normal"];

/// Looks up a target law by name.
pub fn named_distribution(name: &str) -> Result<DistributionSpec> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, a),
        None => (name, ""),
    };
    let args = if arg.is_empty() {
        Vec::new()
    } else {
        parse_coefficients(arg)?
    };
    let want = |k: usize| -> Result<()> {
        if args.len() == k {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "distribution '{head}' takes {k} parameter(s), got {}",
                args.len()
            )))
        }
    };
    match head {
        "beta" => {
            want(2)?;
            DistributionSpec::beta(BetaParams::new(args[0], args[1])?)
        }
        "exp" => {
            want(1)?;
            DistributionSpec::exponential(args[0])
        }
        "gamma" => {
            want(2)?;
            DistributionSpec::gamma_shape(args[0], args[1])
        }
        "normal" => {
            want(0)?;
            DistributionSpec::standard_normal()
        }
        _ => Err(Error::InvalidParameter(format!(
            "unknown distribution '{name}'; expected one of {}",
            DISTRIBUTION_NAMES.join(", ")
        ))),
    }
}

/// Parses `c0,c1,...` into polynomial coefficients.
pub fn parse_coefficients(text: &str) -> Result<Vec<f64>> {
    let coeffs = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidParameter(format!("bad coefficient '{s}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if coeffs.is_empty() {
        return Err(Error::InvalidParameter("empty coefficient list".into()));
    }
    Ok(coeffs)
}

/// Smooth fixtures used by the rate and bound studies.
pub fn smooth_suite() -> Vec<TestFunction> {
    vec![square(0.0, 1.0), cube(0.0, 1.0), smooth_step()]
}

/// Lipschitz fixtures on the unit interval.
pub fn lipschitz_suite() -> Vec<TestFunction> {
    vec![
        identity(0.0, 1.0),
        square(0.0, 1.0),
        cube(0.0, 1.0),
        smooth_step(),
        sine(),
        kinked_abs(0.3),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_shape() {
        let h = smooth_step();
        assert_eq!(h.eval(0.1), 0.0);
        assert_eq!(h.eval(0.9), 1.0);
        assert!((h.eval(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(h.declared_norm(1), Some(3.0));
        assert_eq!(h.declared_norm(2), Some(24.0));
        assert!(h.check_declared_norms(0.0, 1.0, 1e-12).iter().all(|c| c.ok));
        for piece in h.pieces().unwrap() {
            for x in [0.0, 0.1, 0.25, 0.3, 0.5, 0.61, 0.75, 0.9, 1.0] {
                if x >= piece.lo && x <= piece.hi {
                    let poly: f64 = piece.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c);
                    assert!((poly - h.eval(x)).abs() < 1e-14, "{x}");
                }
            }
        }
    }

    #[test]
    fn polynomial_norms() {
        let h = cube(0.0, 1.0);
        assert!((h.declared_norm(1).unwrap() - 3.0).abs() < 1e-12);
        assert!((h.declared_norm(2).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(h.declared_norm(4), Some(0.0));
    }

    #[test]
    fn lookup() {
        assert_eq!(named("x2", 0.0, 1.0).unwrap().eval(3.0), 9.0);
        assert_eq!(named("indicator:0.3", 0.0, 1.0).unwrap().eval(0.3), 1.0);
        assert_eq!(named("poly:1,0,2", 0.0, 1.0).unwrap().eval(2.0), 9.0);
        assert!(named("x2:3", 0.0, 1.0).is_err());
        assert!(named("nope", 0.0, 1.0).is_err());
        assert!(named("const", 0.0, 1.0).is_err());
        assert!(named("poly:1,a", 0.0, 1.0).is_err());
        assert_eq!(named_distribution("beta:2,3").unwrap().name(), DistributionSpec::beta(BetaParams::new(2.0, 3.0).unwrap()).unwrap().name());
        assert!(named_distribution("normal").is_ok());
        assert!(named_distribution("exp").is_err());
        assert!(named_distribution("cauchy").is_err());
    }

    #[test]
    fn declared_norms_are_upper_bounds() {
        for h in lipschitz_suite() {
            for c in h.check_declared_norms(0.0, 1.0, 1e-12) {
                assert!(c.ok, "{}: {c:?}", h.name());
            }
        }
    }
}
