//! Law of the sum of independent draws from a bounded `g` and any `f`.

use std::sync::Arc;

use rayon::prelude::*;

use super::{Density, Tabulated};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::{count, lit, Scalar};

/// Number of knots in a convolution tabulation.
pub const CONVOLUTION_POINTS: usize = 4096;
/// Probability left outside the grid on each side.
const TAIL: f64 = 1e-13;

/// Tabulates the density and CDF of `Γ + E` with `Γ ~ g`, `E ~ f`.
///
/// Knot values come from adaptive quadrature over the window of `g`'s support
/// where `f(x - γ)` is non-negligible; the CDF adds the mass of `g` lying
/// entirely to the left of that window.
pub fn convolve<T: Scalar>(g: &Density<T>, f: &Density<T>) -> Result<Density<T>> {
    if !g.is_bounded() {
        return Err(Error::invalid("convolution needs a bounded first law"));
    }
    let (gl, gu) = g.support();
    let e_lo = f.quantile(lit(TAIL)).max(f.effective_support().0);
    let e_hi = f.inverse_sf(lit(TAIL)).min(f.effective_support().1);
    let (w_lo, w_hi) = f.effective_support();
    let (x_lo, x_hi) = (gl + e_lo, gu + e_hi);
    if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
        return Err(Error::numeric("convolve", format!("degenerate grid [{x_lo}, {x_hi}]")));
    }
    let n = CONVOLUTION_POINTS;
    let step = (x_hi - x_lo) / count(n - 1);
    if !(step > T::zero()) || step < (x_hi.abs() + x_lo.abs()) * T::epsilon() * lit(8.0) {
        return Err(Error::numeric("convolve", "grid spacing underflows"));
    }

    let opts = QuadOptions::default();
    let values: Vec<(T, T, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = if i == n - 1 { x_hi } else { x_lo + step * count(i) };
            // γ such that x - γ lies in f's effective support.
            let lo = gl.max(x - w_hi);
            let hi = gu.min(x - w_lo);
            let knots = [x, x - e_lo, x - e_hi];
            let (pdf, cdf_part) = if lo < hi {
                let p = integrate(|gam| g.pdf(gam) * f.pdf(x - gam), lo, hi, &knots, &opts);
                let c = integrate(|gam| g.pdf(gam) * f.cdf(x - gam), lo, hi, &knots, &opts);
                (p.value, c.value)
            } else {
                (T::zero(), T::zero())
            };
            // Types left of the window see F(x - γ) = 1.
            let left = g.cdf(lo.min(gu));
            (x, pdf.max(T::zero()), (left + cdf_part).min(T::one()))
        })
        .collect();

    let mut xs = Vec::with_capacity(n);
    let mut pdf = Vec::with_capacity(n);
    let mut cdf = Vec::with_capacity(n);
    let mut running = T::zero();
    for (x, p, c) in values {
        // Quadrature noise must not break monotonicity.
        running = running.max(c);
        xs.push(x);
        pdf.push(p);
        cdf.push(running);
    }
    let tab = Tabulated::new(xs, pdf, cdf).map_err(|e| Error::numeric("convolve", e.to_string()))?;
    Ok(Density::Tabulated(Arc::new(tab)))
}
