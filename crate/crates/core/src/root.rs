//! Bisection on monotone maps.

use crate::error::{Error, Result};

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is false
/// then true along the interval. Stops once the bracket is narrower than `xtol`
/// or after `max_iter` halvings, and returns the upper end of the final bracket.
pub(crate) fn bisect_predicate<P>(
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
    mut pred: P,
) -> f64
where
    P: FnMut(f64) -> bool,
{
    for _ in 0..max_iter {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Solves `size(s) = target` for a continuous nonincreasing `size`.
///
/// The bracket is grown by doubling from `[-1, 1]` until it straddles `target`
/// or exceeds `limit`; bisection then runs until the bracket is below `xtol`
/// and the size is within `ytol` of the target.
pub(crate) fn solve_decreasing<S>(
    mut size: S,
    target: f64,
    limit: f64,
    xtol: f64,
    ytol: f64,
) -> Result<f64>
where
    S: FnMut(f64) -> f64,
{
    let mut lo = -1.0;
    let mut hi = 1.0;
    while size(lo) < target {
        lo *= 2.0;
        if lo < -limit {
            return Err(Error::BracketFailure { target, limit });
        }
    }
    while size(hi) > target {
        hi *= 2.0;
        if hi > limit {
            return Err(Error::BracketFailure { target, limit });
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..400 {
        mid = 0.5 * (lo + hi);
        let s = size(mid);
        if (s - target).abs() <= ytol && hi - lo <= xtol {
            break;
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if s > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}
