//! Scalar root finding and one-dimensional minimisation.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `xtol` or `f` vanishes exactly.
/// Returns the midpoint of the final bracket.
pub fn bisect<T, F>(mut f: F, mut lo: T, mut hi: T, xtol: T, what: &str) -> Result<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::BracketNotFound(format!(
            "{what}: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    let half: T = lit(0.5);
    for _ in 0..400 {
        let mid = half * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(half * (lo + hi))
}

/// Expands `[lo, hi]` geometrically until `f` changes sign, within `limit`.
pub fn bracket<T, F>(mut f: F, mut lo: T, mut hi: T, limit: T, what: &str) -> Result<(T, T)>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let center = lit::<T>(0.5) * (lo + hi);
    for _ in 0..200 {
        let (flo, fhi) = (f(lo), f(hi));
        if flo.signum() != fhi.signum() || flo == T::zero() || fhi == T::zero() {
            return Ok((lo, hi));
        }
        if center - lo >= limit && hi - center >= limit {
            break;
        }
        let w = (hi - lo) * lit(0.5);
        lo = (lo - w).max(center - limit);
        hi = (hi + w).min(center + limit);
    }
    Err(Error::BracketNotFound(format!(
        "{what}: no sign change within {limit} of {center}"
    )))
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
///
/// Returns `(argmin, min)`, also considering both endpoints so a monotone
/// objective yields its boundary value.
pub fn golden_min<T, F>(mut f: F, mut a: T, mut b: T, rel_tol: T) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (a0, b0) = (a, b);
    let invphi: T = lit(0.618_033_988_749_894_9);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= rel_tol * (c.abs() + d.abs()) + T::min_positive_value() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    for x in [a0, b0] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14, "sqrt").unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_reports_missing_bracket() {
        assert!(matches!(
            bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, "none"),
            Err(Error::BracketNotFound(_))
        ));
    }

    #[test]
    fn bracket_expands() {
        let (lo, hi) = bracket(|x: f64| x - 7.5, -1.0, 1.0, 20.0, "shift").unwrap();
        assert!(lo <= 7.5 && hi >= 7.5);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_min(|x: f64| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-13);
    }

    #[test]
    fn golden_handles_monotone_objective() {
        let (x, _) = golden_min(|x: f64| 1.0 / x, 0.1, 3.0, 1e-10);
        assert_eq!(x, 3.0);
    }
}
