//! Values checked against independent computations: exact rational
//! arithmetic for the urn and a tanh-sinh rule for Beta integrals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use betastein::beta::{c_constant, solve, theorem_mt_bound, BetaSteinContext};
use betastein::fixtures;
use betastein::polya::{pmf, regression_first, regression_second, PolyaModel};
use betastein::BetaParams;

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn rising(x: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, i| acc * (x + BigRational::from_integer(i.into())))
}

fn binomial(n: usize, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, i| {
        acc * BigRational::from_integer((n - i).into()) / BigRational::from_integer((i + 1).into())
    })
}

/// `P(S_n = k) = C(n, k) (a)_k (b)_{n-k} / (a + b)_n`.
fn exact_pmf(a: &BigRational, b: &BigRational, n: usize) -> Vec<BigRational> {
    let total = rising(&(a + b), n);
    (0..=n)
        .map(|k| binomial(n, k) * rising(a, k) * rising(b, n - k) / &total)
        .collect()
}

const SHAPES: [(i64, i64); 4] = [(1, 2), (1, 1), (2, 1), (37, 10)];

#[test]
fn pmf_matches_rational_arithmetic() {
    for &(an, ad) in &SHAPES {
        for &(bn, bd) in &SHAPES {
            let (a, b) = (ratio(an, ad), ratio(bn, bd));
            for n in [1usize, 7, 30, 120] {
                let exact = exact_pmf(&a, &b, n);
                let sum: BigRational = exact.iter().fold(BigRational::zero(), |s, p| s + p);
                assert!(sum.is_one());
                let model = PolyaModel::new(an as f64 / ad as f64, bn as f64 / bd as f64, n).unwrap();
                let got = pmf(&model).probs();
                for (k, (g, e)) in got.iter().zip(&exact).enumerate() {
                    let e = e.to_f64().unwrap();
                    assert!((g - e).abs() <= 1e-14 * e.max(1e-300) + 1e-300, "n={n} k={k}: {g} vs {e}");
                }
            }
        }
    }
}

#[test]
fn regressions_match_rational_enumeration() {
    for &(an, ad) in &SHAPES {
        for &(bn, bd) in &SHAPES {
            let (a, b) = (ratio(an, ad), ratio(bn, bd));
            for n in [2usize, 5, 40] {
                let model = PolyaModel::new(an as f64 / ad as f64, bn as f64 / bd as f64, n).unwrap();
                let nr = BigRational::from_integer(n.into());
                let d = &a + &b + &nr - BigRational::one();
                for k in 0..=n {
                    let kr = BigRational::from_integer(k.into());
                    let mut first = BigRational::zero();
                    let mut second = BigRational::zero();
                    for last in [0i64, 1] {
                        let p_last = if last == 1 { &kr / &nr } else { BigRational::one() - &kr / &nr };
                        let p_red = (&a + &kr - BigRational::from_integer(last.into())) / &d;
                        for new in [0i64, 1] {
                            let p_new = if new == 1 { p_red.clone() } else { BigRational::one() - &p_red };
                            let step = BigRational::from_integer((new - last).into()) / &nr;
                            first += &p_last * &p_new * &step;
                            second += &p_last * &p_new * &step * &step;
                        }
                    }
                    let (direct, closed) = regression_first(&model, k).unwrap();
                    let f = first.to_f64().unwrap();
                    assert!((direct - f).abs() < 1e-15 && (closed - f).abs() < 1e-15);
                    let s = regression_second(&model, k).unwrap();
                    let sf = second.to_f64().unwrap();
                    assert!((s.direct - sf).abs() < 1e-15 && (s.closed - sf).abs() < 1e-15);
                }
            }
        }
    }
}

/// Tanh-sinh rule on `[0, 1]`; `f` receives `(x, 1 - x)` with both computed
/// without cancellation.
fn tanh_sinh(f: impl Fn(f64, f64) -> f64) -> f64 {
    let step = 1.0 / 64.0;
    let mut sum = 0.0;
    for i in -384i32..=384 {
        let t = i as f64 * step;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let x = 1.0 / (1.0 + (-2.0 * u).exp());
        let y = 1.0 / (1.0 + (2.0 * u).exp());
        if x == 0.0 || y == 0.0 {
            continue;
        }
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (2.0 * u.cosh().powi(2));
        sum += w * f(x, y);
    }
    sum * step
}

#[test]
fn solution_matches_tanh_sinh_beta_2_3() {
    let p = BetaParams::new(2.0, 3.0).unwrap();
    let density = |t: f64, s: f64| 12.0 * t * s * s;
    let eh = tanh_sinh(|x, y| x.sin() * density(x, y));
    let sol = solve(&BetaSteinContext::new(p).unwrap(), &fixtures::sine()).unwrap();
    assert!((sol.eh() - eh).abs() < 1e-14, "{} vs {eh}", sol.eh());
    for x in [0.05, 0.3, 0.5, 0.8, 0.97] {
        let numerator = tanh_sinh(|s, _| {
            let t = x * s;
            x * (t.sin() - eh) * density(t, 1.0 - t)
        });
        let g = numerator / (x * (1.0 - x) * density(x, 1.0 - x));
        let got = sol.eval(x).unwrap();
        assert!((got - g).abs() <= 1e-11 * g.abs().max(1.0), "x={x}: {got} vs {g}");
    }
}

#[test]
fn solution_matches_tanh_sinh_arcsine() {
    let p = BetaParams::new(0.5, 0.5).unwrap();
    let density = |t: f64, s: f64| 1.0 / (std::f64::consts::PI * (t * s).sqrt());
    let eh = tanh_sinh(|x, y| x.sin() * density(x, y));
    // E sin(X) = sin(1/2) J0(1/2) for the arcsine law
    let bessel_j0_half = 0.938_469_807_240_812_9;
    assert!((eh - 0.5f64.sin() * bessel_j0_half).abs() < 1e-14);
    let sol = solve(&BetaSteinContext::new(p).unwrap(), &fixtures::sine()).unwrap();
    assert!((sol.eh() - eh).abs() < 1e-13);
    for x in [1e-6, 0.2, 0.7, 0.99, 1.0 - 1e-6] {
        // upper tail mirrored onto [0, 1 - x] so the endpoint sits at 0
        let numerator = if x <= 0.5 {
            tanh_sinh(|s, _| x * ((s * x).sin() - eh) * density(s * x, 1.0 - s * x))
        } else {
            let r = 1.0 - x;
            -tanh_sinh(|s, _| r * ((1.0 - s * r).sin() - eh) * density(s * r, 1.0 - s * r))
        };
        let g = numerator / ((x * (1.0 - x)).sqrt() / std::f64::consts::PI);
        let got = sol.eval(x).unwrap();
        assert!((got - g).abs() <= 1e-10 * g.abs().max(1.0), "x={x}: {got} vs {g}");
    }
}

#[test]
fn frozen_constants() {
    let c = |a, b| c_constant(BetaParams::new(a, b).unwrap());
    assert!((c(0.5, 0.5) - 4.0).abs() < 1e-14);
    assert!((c(1.0, 1.0) - 4.0).abs() < 1e-14);
    assert!((c(2.0, 2.0) - 16.0 / 3.0).abs() < 1e-13);
    // C = 4 and C(2, 2) = 16/3 give 0.4 (1/2 + 1.1 * 16/9) + 1.1 * 16/180 = 1.08
    let mt = theorem_mt_bound(10, BetaParams::new(1.0, 1.0).unwrap(), 1.0, 1.0);
    assert!((mt - 1.08).abs() < 1e-13, "{mt}");
}
