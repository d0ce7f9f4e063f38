//! Laws given by a CDF tabulation, interpolated by monotone cubic Hermite
//! splines whose knot slopes are the density values.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated<T: Scalar> {
    x: Vec<T>,
    cdf: Vec<T>,
    slope: Vec<T>,
    /// `∫_{x_0}^{x_i} F` at each knot.
    cum_int: Vec<T>,
    mean: T,
    variance: T,
}

/// Hermite basis on `u ∈ [0, 1]`: value, and antiderivative from 0.
fn hermite<T: Scalar>(u: T, h: T, f0: T, f1: T, m0: T, m1: T) -> T {
    let u2 = u * u;
    let u3 = u2 * u;
    let two: T = lit(2.0);
    let three: T = lit(3.0);
    (two * u3 - three * u2 + T::one()) * f0
        + (u3 - two * u2 + u) * h * m0
        + (three * u2 - two * u3) * f1
        + (u3 - u2) * h * m1
}

fn hermite_deriv<T: Scalar>(u: T, h: T, f0: T, f1: T, m0: T, m1: T) -> T {
    let u2 = u * u;
    let six: T = lit(6.0);
    let three: T = lit(3.0);
    let four: T = lit(4.0);
    let two: T = lit(2.0);
    (six * u2 - six * u) * (f0 - f1) / h + (three * u2 - four * u + T::one()) * m0 + (three * u2 - two * u) * m1
}

fn hermite_integral<T: Scalar>(u: T, h: T, f0: T, f1: T, m0: T, m1: T) -> T {
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u3 * u;
    let half: T = lit(0.5);
    let quarter: T = lit(0.25);
    let third: T = lit(1.0 / 3.0);
    h * ((half * u4 - u3 + u) * f0
        + (quarter * u4 - lit::<T>(2.0) * third * u3 + half * u2) * h * m0
        + (u3 - half * u4) * f1
        + (quarter * u4 - third * u3) * h * m1)
}

impl<T: Scalar> Tabulated<T> {
    /// From knots, density values, and CDF values at the knots.
    ///
    /// The CDF is rescaled to run from exactly 0 to 1 and the slopes are
    /// limited so that the interpolant is monotone.
    pub fn new(x: Vec<T>, pdf: Vec<T>, cdf: Vec<T>) -> Result<Self> {
        let n = x.len();
        if n < 2 || pdf.len() != n || cdf.len() != n {
            return Err(Error::invalid(format!(
                "tabulated law needs matching x/pdf/cdf of length >= 2 (got {}, {}, {})",
                n,
                pdf.len(),
                cdf.len()
            )));
        }
        for i in 0..n {
            if !x[i].is_finite() || !pdf[i].is_finite() || !cdf[i].is_finite() {
                return Err(Error::invalid(format!("non-finite tabulation entry at {i}")));
            }
            if pdf[i] < T::zero() {
                return Err(Error::invalid(format!("negative density at x = {}", x[i])));
            }
            if i > 0 && x[i] <= x[i - 1] {
                return Err(Error::invalid("tabulation knots must be strictly ascending"));
            }
            if i > 0 && cdf[i] < cdf[i - 1] {
                return Err(Error::invalid(format!("cdf decreases at x = {}", x[i])));
            }
        }
        let (c0, c1) = (cdf[0], cdf[n - 1]);
        let mass = c1 - c0;
        if !(mass > T::zero()) {
            return Err(Error::invalid("tabulated law carries no probability"));
        }
        let cdf: Vec<T> = cdf.iter().map(|&c| ((c - c0) / mass).min(T::one())).collect();
        let mut slope: Vec<T> = pdf.iter().map(|&p| p / mass).collect();

        // Fritsch–Carlson limiter.
        for i in 0..n - 1 {
            let d = (cdf[i + 1] - cdf[i]) / (x[i + 1] - x[i]);
            if d == T::zero() {
                slope[i] = T::zero();
                slope[i + 1] = T::zero();
                continue;
            }
            let a = slope[i] / d;
            let b = slope[i + 1] / d;
            let r2 = a * a + b * b;
            let nine: T = lit(9.0);
            if r2 > nine {
                let tau = lit::<T>(3.0) / r2.sqrt();
                slope[i] = tau * a * d;
                slope[i + 1] = tau * b * d;
            }
        }

        let mut cum_int = Vec::with_capacity(n);
        cum_int.push(T::zero());
        for i in 0..n - 1 {
            let h = x[i + 1] - x[i];
            let cell = hermite_integral(T::one(), h, cdf[i], cdf[i + 1], slope[i], slope[i + 1]);
            cum_int.push(cum_int[i] + cell);
        }

        let mut t = Self {
            x,
            cdf,
            slope,
            cum_int,
            mean: T::zero(),
            variance: T::zero(),
        };
        let (lo, hi) = t.support();
        let (_, m1) = t.partial_moments(lo, hi);
        t.mean = m1;
        // Midpoint variance: only used as a spread hint.
        let mut var = T::zero();
        for i in 0..t.x.len() - 1 {
            let xm = (t.x[i] + t.x[i + 1]) * lit(0.5);
            let p = t.cdf[i + 1] - t.cdf[i];
            var = var + p * (xm - m1) * (xm - m1);
        }
        t.variance = var;
        Ok(t)
    }

    /// From knots and density values; the CDF is built by the trapezoid rule.
    pub fn from_pdf(x: Vec<T>, pdf: Vec<T>) -> Result<Self> {
        if x.len() != pdf.len() || x.len() < 2 {
            return Err(Error::invalid("tabulated law needs matching x/pdf of length >= 2"));
        }
        let mut cdf = Vec::with_capacity(x.len());
        cdf.push(T::zero());
        for i in 1..x.len() {
            let step = (pdf[i] + pdf[i - 1]) * (x[i] - x[i - 1]) * lit(0.5);
            cdf.push(cdf[i - 1] + step);
        }
        Self::new(x, pdf, cdf)
    }

    pub fn knots(&self) -> &[T] {
        &self.x
    }

    /// Density values at the knots after limiting.
    pub fn slopes(&self) -> &[T] {
        &self.slope
    }

    pub fn cdf_values(&self) -> &[T] {
        &self.cdf
    }

    pub fn support(&self) -> (T, T) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn std_dev(&self) -> T {
        self.variance.sqrt()
    }

    /// Index `i` with `x[i] <= x < x[i+1]`, for `x` inside the support.
    fn cell(&self, x: T) -> usize {
        let n = self.x.len();
        let i = self
            .x
            .partition_point(|&k| k.partial_cmp(&x).unwrap_or(Ordering::Less) != Ordering::Greater);
        i.saturating_sub(1).min(n - 2)
    }

    fn cell_parts(&self, i: usize) -> (T, T, T, T, T) {
        (
            self.x[i + 1] - self.x[i],
            self.cdf[i],
            self.cdf[i + 1],
            self.slope[i],
            self.slope[i + 1],
        )
    }

    pub fn pdf(&self, x: T) -> T {
        let (lo, hi) = self.support();
        if x < lo || x > hi || x.is_nan() {
            return T::zero();
        }
        let i = self.cell(x);
        let (h, f0, f1, m0, m1) = self.cell_parts(i);
        hermite_deriv((x - self.x[i]) / h, h, f0, f1, m0, m1).max(T::zero())
    }

    pub fn cdf(&self, x: T) -> T {
        let (lo, hi) = self.support();
        if x <= lo {
            return T::zero();
        }
        if x >= hi {
            return T::one();
        }
        let i = self.cell(x);
        let (h, f0, f1, m0, m1) = self.cell_parts(i);
        hermite((x - self.x[i]) / h, h, f0, f1, m0, m1).max(f0).min(f1)
    }

    pub fn sf(&self, x: T) -> T {
        T::one() - self.cdf(x)
    }

    /// `∫_{lo}^{x} F` for `x` in the support.
    fn cdf_integral(&self, x: T) -> T {
        let i = self.cell(x);
        let (h, f0, f1, m0, m1) = self.cell_parts(i);
        self.cum_int[i] + hermite_integral((x - self.x[i]) / h, h, f0, f1, m0, m1)
    }

    /// `(∫_a^b f, ∫_a^b x f)` using `∫ x dF = [xF] - ∫ F`.
    pub fn partial_moments(&self, a: T, b: T) -> (T, T) {
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if !(a < b) {
            return (T::zero(), T::zero());
        }
        let (fa, fb) = (self.cdf(a), self.cdf(b));
        let mass = fb - fa;
        let int_f = self.cdf_integral(b) - self.cdf_integral(a);
        (mass, b * fb - a * fa - int_f)
    }

    pub fn quantile(&self, u: T) -> T {
        let n = self.x.len();
        if u <= T::zero() {
            return self.x[0];
        }
        if u >= T::one() {
            return self.x[n - 1];
        }
        // First knot whose cdf reaches u.
        let j = self.cdf.partition_point(|&c| c < u);
        let i = j.saturating_sub(1).min(n - 2);
        let (h, f0, f1, m0, m1) = self.cell_parts(i);
        if f1 <= f0 {
            return self.x[i];
        }
        // Safeguarded Newton on the monotone cubic.
        let (mut lo, mut hi) = (T::zero(), T::one());
        let mut t = (u - f0) / (f1 - f0);
        for _ in 0..100 {
            let val = hermite(t, h, f0, f1, m0, m1) - u;
            if val > T::zero() {
                hi = t;
            } else {
                lo = t;
            }
            let d = hermite_deriv(t, h, f0, f1, m0, m1) * h;
            let mut next = if d > T::zero() { t - val / d } else { T::nan() };
            if !(next > lo && next < hi) {
                next = (lo + hi) * lit(0.5);
            }
            if (next - t).abs() <= T::epsilon() * lit(4.0) {
                t = next;
                break;
            }
            t = next;
        }
        self.x[i] + t * h
    }

    pub(crate) fn affine(&self, shift: T, scale: T) -> Self {
        Self {
            x: self.x.iter().map(|&x| shift + scale * x).collect(),
            cdf: self.cdf.clone(),
            slope: self.slope.iter().map(|&m| m / scale).collect(),
            cum_int: self.cum_int.iter().map(|&c| c * scale).collect(),
            mean: shift + scale * self.mean,
            variance: self.variance * scale * scale,
        }
    }
}
