//! The Pólya urn: `n` draws with reinforcement, `S_n` red draws, `W = S_n/n`.
//! The exchangeable pair resamples the last draw given the first `n - 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::{neumaier, PairRegressionReport, TestFunction};
use crate::special::BetaParams;

/// Largest `n` for which the `2^n` joint vectors may be enumerated.
pub const MAX_ENUMERATION: usize = 24;

/// Samples per random stream in [`simulate_pair`]; the stream layout does not
/// depend on the number of threads.
const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyaModel {
    a: f64,
    b: f64,
    n: usize,
}

impl PolyaModel {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        BetaParams::new(a, b)?;
        if n == 0 {
            return Err(Error::InvalidParameter("the urn needs at least one draw".into()));
        }
        Ok(Self { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> BetaParams {
        BetaParams::new(self.a, self.b).expect("validated in new")
    }

    /// `a + b + n - 1`.
    fn denominator(&self) -> f64 {
        self.a + self.b + self.n as f64 - 1.0
    }

    /// `λ = 1/(n(a + b + n - 1))`.
    pub fn lambda(&self) -> f64 {
        1.0 / (self.n as f64 * self.denominator())
    }

    /// `(a + b)(a/(a + b) - x)`.
    pub fn gamma(&self, x: f64) -> f64 {
        self.a - (self.a + self.b) * x
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.n {
            return Err(Error::InvalidParameter(format!(
                "k = {k} outside 0..={}",
                self.n
            )));
        }
        Ok(())
    }
}

/// `log P(S_n = k)` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyaPmf {
    pub log_weights: Vec<f64>,
}

impl PolyaPmf {
    pub fn prob(&self, k: usize) -> f64 {
        self.log_weights.get(k).map_or(0.0, |w| w.exp())
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn log_total(&self) -> f64 {
        log_sum_exp(&self.log_weights)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// The law of `S_n` from the product form
/// `C(n,k) Π_{i<k}(a+i) Π_{j<n-k}(b+j) / Π_{l<n}(a+b+l)`.
///
/// Successive log ratios `log[(n-k)(a+k) / ((k+1)(b+n-k-1))]` are summed with
/// compensation and the result is normalized by log-sum-exp.
pub fn pmf(model: &PolyaModel) -> PolyaPmf {
    let n = model.n;
    let (a, b) = (model.a, model.b);
    let mut raw = Vec::with_capacity(n + 1);
    let (mut sum, mut comp) = (0.0, 0.0);
    raw.push(0.0);
    for k in 0..n {
        let kf = k as f64;
        let nk = (n - k) as f64;
        let step = (nk / (kf + 1.0)).ln() + ((a + kf) / (b + nk - 1.0)).ln();
        neumaier(&mut sum, &mut comp, step);
        raw.push(sum + comp);
    }
    let total = log_sum_exp(&raw);
    PolyaPmf {
        log_weights: raw.into_iter().map(|w| w - total).collect(),
    }
}

/// `P(X_1 = x_1, ..., X_n = x_n)`.
pub fn joint_prob(model: &PolyaModel, x: &[bool]) -> Result<f64> {
    if x.len() != model.n {
        return Err(Error::LengthMismatch {
            expected: model.n,
            got: x.len(),
        });
    }
    if model.n > MAX_ENUMERATION {
        return Err(Error::InvalidParameter(format!(
            "joint probabilities are enumerated only for n <= {MAX_ENUMERATION}, got {}",
            model.n
        )));
    }
    let (mut red, mut white) = (0.0, 0.0);
    let mut log_p = 0.0;
    for (l, &xi) in x.iter().enumerate() {
        let total = model.a + model.b + l as f64;
        if xi {
            log_p += ((model.a + red) / total).ln();
            red += 1.0;
        } else {
            log_p += ((model.b + white) / total).ln();
            white += 1.0;
        }
    }
    Ok(log_p.exp())
}

/// Conditional moments of `(X_n, X_n')` given `S_n = k`:
/// `P(X_n = 1 | S_n = k) = k/n` and
/// `P(X_n' = 1 | X_1..X_{n-1}) = (a + S_{n-1})/(a + b + n - 1)`.
fn gibbs_moments(model: &PolyaModel, k: usize) -> (f64, f64) {
    let n = model.n as f64;
    let kf = k as f64;
    let d = model.denominator();
    let last_red = kf / n;
    let up = (model.a + kf) / d;
    let stay = (model.a + kf - 1.0) / d;
    let first = last_red * (stay - 1.0) + (1.0 - last_red) * up;
    let second = last_red * (1.0 - stay) + (1.0 - last_red) * up;
    (first / n, second / (n * n))
}

/// `E[W' - W | S_n = k]` by direct summation, and `λγ(k/n)`.
pub fn regression_first(model: &PolyaModel, k: usize) -> Result<(f64, f64)> {
    model.check_k(k)?;
    let direct = gibbs_moments(model, k).0;
    let closed = model.lambda() * model.gamma(k as f64 / model.n as f64);
    Ok((direct, closed))
}

/// Second conditional moment of the pair at `S_n = k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoment {
    /// Direct summation over the Gibbs step.
    pub direct: f64,
    /// `((2n + b - a) W - 2n W^2 + a) / (n^2 (a + b + n - 1))`.
    pub closed: f64,
    /// `2λ (W(1 - W) + S)`.
    pub via_remainder: f64,
    /// `S = (b - a) W/(2n) + a/(2n)`.
    pub remainder: f64,
}

impl SecondMoment {
    pub fn value(&self) -> f64 {
        self.closed
    }
}

pub fn regression_second(model: &PolyaModel, k: usize) -> Result<SecondMoment> {
    model.check_k(k)?;
    let n = model.n as f64;
    let w = k as f64 / n;
    let (a, b) = (model.a, model.b);
    let remainder = (b - a) * w / (2.0 * n) + a / (2.0 * n);
    let closed = ((2.0 * n + b - a) * w - 2.0 * n * w * w + a) / (n * n * model.denominator());
    Ok(SecondMoment {
        direct: gibbs_moments(model, k).1,
        closed,
        via_remainder: 2.0 * model.lambda() * (w * (1.0 - w) + remainder),
        remainder,
    })
}

/// Largest deviations of the regression identities over `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionCheck {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub max_first_error: f64,
    pub max_second_error: f64,
    pub max_remainder_error: f64,
}

impl RegressionCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_first_error <= tol && self.max_second_error <= tol && self.max_remainder_error <= tol
    }
}

pub fn check_regressions(model: &PolyaModel) -> RegressionCheck {
    let mut out = RegressionCheck {
        a: model.a,
        b: model.b,
        n: model.n,
        max_first_error: 0.0,
        max_second_error: 0.0,
        max_remainder_error: 0.0,
    };
    for k in 0..=model.n {
        let (d, c) = regression_first(model, k).expect("k in range");
        let s = regression_second(model, k).expect("k in range");
        out.max_first_error = out.max_first_error.max((d - c).abs());
        out.max_second_error = out.max_second_error.max((s.direct - s.closed).abs());
        out.max_remainder_error = out.max_remainder_error.max((s.via_remainder - s.closed).abs());
    }
    out
}

/// `E[h(W)] = Σ_k h(k/n) P(S_n = k)`.
pub fn exact_expectation(model: &PolyaModel, h: &TestFunction) -> f64 {
    expectation_of(model, |x| h.eval(x))
}

pub fn expectation_of(model: &PolyaModel, h: impl Fn(f64) -> f64) -> f64 {
    let n = model.n as f64;
    let (mut sum, mut comp) = (0.0, 0.0);
    for (k, lw) in pmf(model).log_weights.iter().enumerate() {
        neumaier(&mut sum, &mut comp, h(k as f64 / n) * lw.exp());
    }
    sum + comp
}

/// The pmf of `W` as `(k/n, P(S_n = k))` pairs.
pub fn support_weights(model: &PolyaModel) -> Vec<(f64, f64)> {
    let n = model.n as f64;
    pmf(model)
        .probs()
        .into_iter()
        .enumerate()
        .map(|(k, p)| (k as f64 / n, p))
        .collect()
}

/// Inputs of the plug-in bound for the urn pair: `R = 0`,
/// `E|S| = ab/((a+b)n)` and `|W' - W| ≤ 1/n`.
pub fn theorem_inputs(model: &PolyaModel) -> PairRegressionReport {
    let n = model.n as f64;
    let (a, b) = (model.a, model.b);
    PairRegressionReport::new(model.lambda(), 0.0, a * b / ((a + b) * n), n.powi(-3))
        .expect("urn moments are valid")
}

/// Exact pair moments; `E|W' - W|^3 = E[(W' - W)^2]/n` because the step is
/// `0` or `±1/n`.
pub fn exact_pair_report(model: &PolyaModel) -> PairRegressionReport {
    let n = model.n as f64;
    let probs = pmf(model).probs();
    let (mut abs_s, mut cube) = (0.0, 0.0);
    for (k, p) in probs.iter().enumerate() {
        let s = regression_second(model, k).expect("k in range");
        abs_s += p * s.remainder.abs();
        cube += p * s.direct / n;
    }
    PairRegressionReport::new(model.lambda(), 0.0, abs_s, cube).expect("urn moments are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSample {
    pub w: f64,
    pub w_prime: f64,
    pub x_n: bool,
    pub x_n_prime: bool,
}

fn draw_pair(model: &PolyaModel, rng: &mut ChaCha8Rng) -> (usize, bool, bool) {
    let (a, b) = (model.a, model.b);
    let mut red = 0usize;
    for m in 0..model.n - 1 {
        if rng.gen::<f64>() * (a + b + m as f64) < a + red as f64 {
            red += 1;
        }
    }
    let last = rng.gen::<f64>() * model.denominator() < a + red as f64;
    let resampled = rng.gen::<f64>() * model.denominator() < a + red as f64;
    (red, last, resampled)
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn chunks(reps: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let count = reps.div_ceil(CHUNK);
    (0..count)
        .into_par_iter()
        .map(move |c| (c, CHUNK.min(reps - c * CHUNK)))
}

/// `reps` independent draws of `(W, W')`. Each block of samples has its own
/// ChaCha stream, so the output depends only on `seed`.
pub fn simulate_pair(model: &PolyaModel, reps: usize, seed: u64) -> Result<Vec<PairSample>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let n = model.n as f64;
    let blocks: Vec<Vec<PairSample>> = chunks(reps)
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, c);
            (0..len)
                .map(|_| {
                    let (red, last, resampled) = draw_pair(model, &mut rng);
                    let s = (red + last as usize) as f64;
                    let s_prime = (red + resampled as usize) as f64;
                    PairSample {
                        w: s / n,
                        w_prime: s_prime / n,
                        x_n: last,
                        x_n_prime: resampled,
                    }
                })
                .collect()
        })
        .collect();
    Ok(blocks.concat())
}

/// Aggregate of a simulation run, without storing the samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub model: PolyaModel,
    pub reps: usize,
    pub seed: u64,
    /// Counts of `S_n = k`.
    pub counts: Vec<u64>,
    /// Counts of `S_n' = k`.
    pub counts_prime: Vec<u64>,
    pub mean_w: f64,
    pub mean_step: f64,
    pub mean_square_step: f64,
    pub max_abs_step: f64,
}

impl SimulationSummary {
    pub fn empirical_pmf(&self) -> Vec<f64> {
        let r = self.reps as f64;
        self.counts.iter().map(|&c| c as f64 / r).collect()
    }

    pub fn empirical_pmf_prime(&self) -> Vec<f64> {
        let r = self.reps as f64;
        self.counts_prime.iter().map(|&c| c as f64 / r).collect()
    }

    /// Total variation to the exact pmf.
    pub fn total_variation(&self) -> f64 {
        total_variation(&self.empirical_pmf(), &pmf(&self.model).probs())
    }

    /// Total variation between the empirical laws of `W` and `W'`.
    pub fn marginal_gap(&self) -> f64 {
        total_variation(&self.empirical_pmf(), &self.empirical_pmf_prime())
    }

    /// `4 sqrt((n + 1)/reps)`.
    pub fn tv_threshold(&self) -> f64 {
        4.0 * ((self.model.n as f64 + 1.0) / self.reps as f64).sqrt()
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    0.5 * (0..len)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[derive(Default)]
struct Tally {
    counts: Vec<u64>,
    counts_prime: Vec<u64>,
    sum_s: u64,
    sum_step: i64,
    sum_sq: u64,
}

/// Same streams as [`simulate_pair`], reduced to counts in a fixed order.
pub fn simulate_summary(model: &PolyaModel, reps: usize, seed: u64) -> Result<SimulationSummary> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let size = model.n + 1;
    let tallies: Vec<Tally> = chunks(reps)
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, c);
            let mut t = Tally {
                counts: vec![0; size],
                counts_prime: vec![0; size],
                ..Tally::default()
            };
            for _ in 0..len {
                let (red, last, resampled) = draw_pair(model, &mut rng);
                let s = red + last as usize;
                let s_prime = red + resampled as usize;
                t.counts[s] += 1;
                t.counts_prime[s_prime] += 1;
                t.sum_s += s as u64;
                let step = s_prime as i64 - s as i64;
                t.sum_step += step;
                t.sum_sq += (step * step) as u64;
            }
            t
        })
        .collect();
    let mut total = Tally {
        counts: vec![0; size],
        counts_prime: vec![0; size],
        ..Tally::default()
    };
    for t in &tallies {
        for k in 0..size {
            total.counts[k] += t.counts[k];
            total.counts_prime[k] += t.counts_prime[k];
        }
        total.sum_s += t.sum_s;
        total.sum_step += t.sum_step;
        total.sum_sq += t.sum_sq;
    }
    let n = model.n as f64;
    let r = reps as f64;
    let max_abs_step = if total.sum_sq > 0 { 1.0 / n } else { 0.0 };
    Ok(SimulationSummary {
        model: *model,
        reps,
        seed,
        counts: total.counts,
        counts_prime: total.counts_prime,
        mean_w: total.sum_s as f64 / (n * r),
        mean_step: total.sum_step as f64 / (n * r),
        mean_square_step: total.sum_sq as f64 / (n * n * r),
        max_abs_step,
    })
}
