//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Scalar};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    #[serde(default = "default_max_intervals")]
    pub max_intervals: usize,
}

fn default_max_intervals() -> usize {
    4000
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_intervals: default_max_intervals(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub converged: bool,
    pub evaluations: usize,
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Scalar> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Piece<T> {}
impl<T: Scalar> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn gk15<T: Scalar, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half: T = lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = radius * lit(XGK[j]);
        let s = f(center - dx) + f(center + dx);
        kronrod = kronrod + s * lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * lit(WG[j / 2]);
        }
    }
    let value = kronrod * radius;
    let err = ((kronrod - gauss) * radius).abs();
    (value, err)
}

/// Integrates `f` over `[a, b]`, splitting first at every `knot` strictly inside.
///
/// Knots are where the integrand has kinks or jumps; placing them up front
/// lets the adaptive rule converge without hunting for the singularity.
/// Reversed limits flip the sign. Non-finite limits are not accepted and give
/// a NaN value with `converged == false`.
pub fn integrate<T, F>(mut f: F, a: T, b: T, knots: &[T], opts: &QuadOptions) -> QuadResult<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !a.is_finite() || !b.is_finite() {
        return QuadResult {
            value: T::nan(),
            error: T::infinity(),
            converged: false,
            evaluations: 0,
        };
    }
    if a == b {
        return QuadResult {
            value: T::zero(),
            error: T::zero(),
            converged: true,
            evaluations: 0,
        };
    }
    if a > b {
        let r = integrate(f, b, a, knots, opts);
        return QuadResult { value: -r.value, ..r };
    }

    let rel_tol = lit::<T>(opts.rel_tol).max(T::tolerance_floor());
    let abs_tol: T = lit(opts.abs_tol);

    let mut cuts: Vec<T> = knots
        .iter()
        .copied()
        .filter(|k| k.is_finite() && *k > a && *k < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = T::zero();
    let mut evaluations = 0;
    let mut lo = a;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        if hi > lo {
            let (value, error) = gk15(&mut f, lo, hi);
            evaluations += 15;
            total = total + value;
            total_err = total_err + error;
            heap.push(Piece {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
        lo = hi;
    }

    let min_width = (b - a) * T::epsilon() * lit(16.0);
    let mut converged = false;
    loop {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            converged = true;
            break;
        }
        if heap.len() >= opts.max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = lit::<T>(0.5) * (worst.a + worst.b);
        if worst.b - worst.a <= min_width || mid <= worst.a || mid >= worst.b {
            // Cannot split further; keep its contribution and give up on it.
            heap.push(Piece {
                error: T::zero(),
                ..worst
            });
            total_err = total_err - worst.error;
            if heap.iter().all(|p| p.error == T::zero()) {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.error + e1 + e2;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // Resum to shed the drift of the running updates.
    let value = heap.iter().fold(T::zero(), |acc, p| acc + p.value);
    let error = heap.iter().fold(T::zero(), |acc, p| acc + p.error);
    QuadResult {
        value,
        error,
        converged: converged || error <= abs_tol.max(rel_tol * value.abs()),
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| x.powi(5) - 3.0 * x, -1.0, 2.0, &[], &QuadOptions::default());
        assert!(r.converged);
        assert!((r.value - (64.0 / 6.0 - 1.0 / 6.0 - 4.5)).abs() < 1e-13);
    }

    #[test]
    fn kink_with_knot() {
        let r = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], &QuadOptions::default());
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
        assert!(r.evaluations <= 30);
    }

    #[test]
    fn kink_without_knot_still_converges() {
        let r = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[], &QuadOptions::default());
        assert!(r.converged);
        assert!((r.value - 0.29).abs() < 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(f64::exp, 1.0, 0.0, &[], &QuadOptions::default());
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn infinite_limit_is_rejected() {
        let r = integrate(|x: f64| x, 0.0, f64::INFINITY, &[], &QuadOptions::default());
        assert!(!r.converged);
        assert!(r.value.is_nan());
    }
}
