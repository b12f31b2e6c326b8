//! Grid-based sup-norm estimation.
//!
//! A Chebyshev-spaced grid clusters points near the interval ends, where Stein
//! solutions and their derivatives change fastest. The grid maximum is then
//! refined by golden-section search on the two cells around the argmax.

use serde::Serialize;

pub const DEFAULT_GRID: usize = 4097;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Chebyshev extrema; includes both endpoints.
    Closed,
    /// Chebyshev roots; strictly inside the interval.
    Open,
}

pub fn chebyshev_grid(lo: f64, hi: f64, n: usize, kind: GridKind) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    match kind {
        GridKind::Closed => {
            if n < 2 {
                return vec![mid];
            }
            let last = (n - 1) as f64;
            (0..n)
                .map(|j| {
                    if j == 0 {
                        lo
                    } else if j == n - 1 {
                        hi
                    } else {
                        mid - half * (std::f64::consts::PI * j as f64 / last).cos()
                    }
                })
                .collect()
        }
        GridKind::Open => (0..n)
            .map(|j| mid - half * (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos())
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: f64,
    /// Amount by which refinement raised the grid maximum.
    pub gap: f64,
}

/// Estimates `sup |f|` over `[lo, hi]`. Non-finite values of `f` are skipped.
pub fn sup_norm<F>(f: F, lo: f64, hi: f64, n: usize, kind: GridKind) -> SupEstimate
where
    F: Fn(f64) -> f64,
{
    let grid = chebyshev_grid(lo, hi, n, kind);
    let values: Vec<f64> = grid.iter().map(|&x| f(x).abs()).collect();
    sup_from_samples(&f, &grid, &values)
}

/// Refines a maximum of `|f|` from precomputed samples on a sorted grid.
pub fn sup_from_samples<F>(f: &F, grid: &[f64], values: &[f64]) -> SupEstimate
where
    F: Fn(f64) -> f64,
{
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && v > best_value {
            best = i;
            best_value = v;
        }
    }
    if grid.is_empty() || !best_value.is_finite() {
        return SupEstimate {
            value: 0.0,
            argmax: grid.first().copied().unwrap_or(f64::NAN),
            gap: 0.0,
        };
    }
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(grid.len() - 1)];
    let (x, v) = golden_max(|x| f(x).abs(), left, right);
    if v.is_finite() && v > best_value {
        SupEstimate {
            value: v,
            argmax: x,
            gap: v - best_value,
        }
    } else {
        SupEstimate {
            value: best_value,
            argmax: grid[best],
            gap: 0.0,
        }
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if hi - lo <= 1e-15 * (lo.abs() + hi.abs()).max(1e-300) {
            break;
        }
        if f1 >= f2 || f2.is_nan() {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid bounds for derivatives of order `k`: derivative estimates degrade at
/// the boundary, so higher orders are sampled on a slightly inset interval.
pub fn inset_interval(lo: f64, hi: f64, order: usize) -> (f64, f64) {
    let w = hi - lo;
    let inset = match order {
        0 => 0.0,
        1 => 1e-6,
        2 => 1e-3,
        _ => 1e-2,
    } * w;
    (lo + inset, hi - inset)
}
