//! Bracketed scalar root finding.
//!
//! Everything in this crate that inverts a monotone map goes through
//! [`bisect`]. Bisection is slow next to Brent's method but it cannot fail once
//! a sign change is bracketed, and every residual solved here is monotone in
//! its argument, so the root is unique inside the bracket.

use crate::error::{Error, Result};

const MAX_ITER: usize = 2_000;

fn converged(lo: f64, hi: f64) -> bool {
    let scale = lo.abs().max(hi.abs());
    (hi - lo).abs() <= (2.0 * f64::EPSILON * scale).max(1e-16)
}

/// Finds the root of `f` on `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them must vanish).
/// The bracket is halved until its endpoints are within a couple of ulps, and
/// the endpoint with the smaller residual is returned.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    let mut f_hi = f_hi;
    for _ in 0..MAX_ITER {
        if converged(lo, hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

/// Locates the boundary of `{x : pred(x)}` inside `[lo, hi]` when the set is
/// an initial segment: `pred(lo)` holds and `pred(hi)` does not. Returns the
/// largest probed point where the predicate still held.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut pred: P, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_ITER {
        if converged(lo, hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Walks `start` downward (doubling the distance from `anchor`) until
/// `stop(x)` holds. Gives up once `|x|` exceeds `limit`.
pub fn expand_down<P: FnMut(f64) -> bool>(anchor: f64, mut stop: P, limit: f64) -> Option<f64> {
    let mut step = 1.0;
    loop {
        let x = anchor - step;
        if x.abs() > limit {
            return None;
        }
        if stop(x) {
            return Some(x);
        }
        step *= 2.0;
    }
}

/// Mirror image of [`expand_down`].
pub fn expand_up<P: FnMut(f64) -> bool>(anchor: f64, mut stop: P, limit: f64) -> Option<f64> {
    let mut step = 1.0;
    loop {
        let x = anchor + step;
        if x.abs() > limit {
            return None;
        }
        if stop(x) {
            return Some(x);
        }
        step *= 2.0;
    }
}
