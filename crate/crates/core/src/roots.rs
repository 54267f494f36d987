//! Scalar root finding and one-dimensional maximization.

use crate::error::{Error, Result};

const MAX_ITER: usize = 400;

/// Bisection on a sign change of `f` over `[lo, hi]`, to interval width `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.signum() != fhi.signum()) || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Bracket { lo, hi });
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Safeguarded Newton: bisection shrinks the bracket to `1e-4` of its width,
/// then Newton steps polish, falling back to bisection whenever a step
/// leaves the bracket. Stops after one final polish once `|f| ≤ tol`, or when
/// the bracket is below `tol`.
pub fn bisect_newton<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Bracket { lo, hi });
    }
    let coarse = 1e-4 * (hi - lo);
    while hi - lo > coarse {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let fx = f(x);
        if fx == 0.0 || hi - lo <= tol * lo.abs().max(hi.abs()).max(1.0) * 1e-4 {
            return Ok(x);
        }
        if fx.abs() <= tol {
            // A small residual can still hide a large error in x when f is
            // flat; one more Newton step costs little and squares the error.
            let d = df(x);
            let polished = x - fx / d;
            return Ok(if d != 0.0 && polished >= lo && polished <= hi && f(polished).abs() <= fx.abs() {
                polished
            } else {
                x
            });
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let d = df(x);
        let step = x - fx / d;
        x = if d != 0.0 && step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`. Ties move the
/// bracket to the right, so on a plateau the rightmost maximizer wins.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    golden_max_ties(f, lo, hi, tol, 0.0)
}

/// As [`golden_max`], treating values within `tie` of each other as equal.
pub fn golden_max_ties<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64, tie: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_ITER {
        if hi - lo <= tol {
            break;
        }
        if fc > fd + tie {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    // The endpoints themselves are candidates: maxima often sit on them.
    let mut best = (hi, f(hi));
    for (x, v) in [(d, fd), (c, fc), (lo, f(lo))] {
        if v > best.1 + tie {
            best = (x, v);
        }
    }
    best
}
