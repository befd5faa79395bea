use serde::Serialize;

use crate::{Error, Result};

/// `f(x) = K + x^α / (4(2K)^{α−1}) − x`.
pub fn f_value(x: f64, k: f64, alpha: f64) -> f64 {
    k + x.powf(alpha) / (4.0 * (2.0 * k).powf(alpha - 1.0)) - x
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RootsReport {
    pub k: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    /// `4^{1/(α−1)} · 2K`, the upper end of the bracket for `c2`.
    pub upper: f64,
}

fn bisect(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f(lo) and f(hi) have opposite signs
    let (mut lo, mut hi) = (lo, hi);
    let lo_positive = f(lo) > 0.0;
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The two positive zeros `c1 < 2K < c2` of `f`, by bisection on
/// `[0, 2K]` and `[2K, 4^{1/(α−1)}·2K]` (where `f` equals `K`, `−K/2` and `K`
/// at the bracket ends).
pub fn f_roots(k: f64, alpha: f64) -> Result<RootsReport> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("K = {k} must be positive")));
    }
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must exceed 1")));
    }
    let upper = 4f64.powf(1.0 / (alpha - 1.0)) * 2.0 * k;
    if !upper.is_finite() {
        return Err(Error::InvalidInput(format!("alpha = {alpha} too close to 1")));
    }
    let f = |x: f64| f_value(x, k, alpha);
    let c1 = bisect(0.0, 2.0 * k, f);
    let c2 = bisect(2.0 * k, upper, f);
    Ok(RootsReport {
        k,
        alpha,
        c1,
        c2,
        upper,
    })
}
