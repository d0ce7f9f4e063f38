//! Subscription schedules tabulated along the equilibrium path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Firm;
use crate::scalar::{count, lit, Scalar};

/// Largest refinement factor tried when integrating a schedule.
const MAX_REFINEMENT: usize = 1024;

/// A fee schedule `s_i(p)` recorded at the strikes chosen along a type grid.
///
/// Between recorded strikes the demand is interpolated linearly in `p`, so
/// the fee is the exact integral of that interpolant: piecewise quadratic,
/// convex, and nonincreasing. Above `max_strike` the fee is flat at
/// `boundary_fee`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TabulatedSchedule<T: Scalar> {
    pub firm: Firm,
    pub gamma_grid: Vec<T>,
    pub strike_at: Vec<T>,
    pub fee_at: Vec<T>,
    /// Interim demand `Q̂_i` of the type choosing each strike.
    pub demand_at: Vec<T>,
    pub boundary_fee: T,
    pub max_strike: T,
    /// Largest fee change at the base nodes in the last refinement step.
    pub resolution: T,
}

fn refine<T: Scalar>(base: &[T], m: usize) -> Vec<T> {
    let mut out = Vec::with_capacity((base.len() - 1) * m + 1);
    for w in base.windows(2) {
        for j in 0..m {
            out.push(w[0] + (w[1] - w[0]) * count(j) / count(m));
        }
    }
    out.push(base[base.len() - 1]);
    out
}

/// Cumulative trapezoid of `Q dp` from the anchored end.
fn cumulate<T: Scalar>(strikes: &[T], demand: &[T], boundary: T, anchor_low: bool) -> Vec<T> {
    let n = strikes.len();
    let mut fee = vec![T::zero(); n];
    let half: T = lit(0.5);
    if anchor_low {
        fee[0] = boundary;
        for i in 0..n - 1 {
            fee[i + 1] = fee[i] + (demand[i] + demand[i + 1]) * half * (strikes[i] - strikes[i + 1]);
        }
    } else {
        fee[n - 1] = boundary;
        for i in (0..n - 1).rev() {
            fee[i] = fee[i + 1] + (demand[i] + demand[i + 1]) * half * (strikes[i + 1] - strikes[i]);
        }
    }
    fee
}

impl<T: Scalar> TabulatedSchedule<T> {
    /// Integrates `fee(p) = boundary + ∫_p^{p̄} Q̂` along `nodes`, refining each
    /// cell until fees at the base nodes move by less than `tol`.
    ///
    /// The maximal strike sits at the first node when strikes fall with the
    /// type (firm B), at the last node otherwise.
    pub fn build<S, Q>(firm: Firm, nodes: &[T], strike: S, demand: Q, boundary: T, tol: T) -> Result<Self>
    where
        S: Fn(T) -> T,
        Q: Fn(T) -> T,
    {
        if nodes.len() < 2 {
            return Err(Error::invalid("a schedule needs at least two type nodes"));
        }
        let anchor_low = strike(nodes[0]) >= strike(nodes[nodes.len() - 1]);
        let mut previous: Option<Vec<T>> = None;
        let mut m = 1;
        loop {
            let grid = refine(nodes, m);
            let strikes: Vec<T> = grid.iter().map(|&g| strike(g)).collect();
            let demands: Vec<T> = grid.iter().map(|&g| demand(g)).collect();
            if strikes.iter().chain(&demands).any(|v| !v.is_finite()) {
                return Err(Error::numeric(
                    "schedule",
                    "non-finite strike or demand on the type grid",
                ));
            }
            let fees = cumulate(&strikes, &demands, boundary, anchor_low);
            let at_base: Vec<T> = fees.iter().step_by(m).copied().collect();
            let change = previous
                .as_ref()
                .map(|p| {
                    p.iter()
                        .zip(&at_base)
                        .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
                })
                .unwrap_or(T::infinity());
            if change < tol || m >= MAX_REFINEMENT {
                let max_strike = if anchor_low {
                    strikes[0]
                } else {
                    strikes[strikes.len() - 1]
                };
                return Ok(Self {
                    firm,
                    gamma_grid: grid,
                    strike_at: strikes,
                    fee_at: fees,
                    demand_at: demands,
                    boundary_fee: boundary,
                    max_strike,
                    resolution: change,
                });
            }
            previous = Some(at_base);
            m *= 2;
        }
    }

    fn len(&self) -> usize {
        self.strike_at.len()
    }

    fn descending(&self) -> bool {
        self.strike_at[0] > self.strike_at[self.len() - 1]
    }

    /// Row `k` in ascending-strike order.
    fn row(&self, k: usize) -> (T, T, T) {
        let i = if self.descending() { self.len() - 1 - k } else { k };
        (self.strike_at[i], self.fee_at[i], self.demand_at[i])
    }

    pub fn min_strike(&self) -> T {
        self.row(0).0
    }

    /// Fee charged for strike `p`.
    pub fn fee(&self, p: T) -> Result<T> {
        if p.is_nan() || p < T::zero() {
            return Err(Error::invalid(format!("strike must be nonnegative, got {p}")));
        }
        if p >= self.max_strike {
            return Ok(self.boundary_fee);
        }
        let n = self.len();
        let (p0, f0, _) = self.row(0);
        if p <= p0 {
            return Ok(f0);
        }
        // Largest k with strike_k <= p.
        let (mut lo, mut hi) = (0, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.row(mid).0 <= p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (pk, fk, qk) = self.row(lo);
        let (p1, f1, q1) = self.row(hi);
        if p == pk {
            return Ok(fk);
        }
        if p1 <= pk {
            return Ok(f1);
        }
        let q_at = qk + (q1 - qk) * (p - pk) / (p1 - pk);
        Ok(f1 + (p1 - p) * (q_at + q1) * lit(0.5))
    }

    /// Fee paid by the type at node `i` of the tabulation.
    pub fn node(&self, i: usize) -> (T, T, T) {
        (self.gamma_grid[i], self.strike_at[i], self.fee_at[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> TabulatedSchedule<f64> {
        let nodes = crate::scalar::linspace(-1.0, 1.0, 21);
        // p(γ) = 1 - γ, Q̂ = 1: fee(p) = boundary + (2 - p).
        TabulatedSchedule::build(Firm::B, &nodes, |g| 1.0 - g, |_| 1.0, 0.5, 1e-12).unwrap()
    }

    #[test]
    fn constant_demand_gives_linear_fee() {
        let s = linear();
        assert_eq!(s.max_strike, 2.0);
        for &p in &[0.0, 0.37, 1.0, 1.99] {
            assert!((s.fee(p).unwrap() - (2.5 - p)).abs() < 1e-14);
        }
        assert_eq!(s.fee(7.0).unwrap(), 0.5);
        assert!(s.fee(-0.1).is_err());
    }

    #[test]
    fn refinement_reaches_tolerance() {
        let nodes = crate::scalar::linspace(-1.0, 1.0, 11);
        let s =
            TabulatedSchedule::build(Firm::B, &nodes, |g: f64| 1.0 - g, |g: f64| (1.0 + g) / 2.0, 0.0, 1e-9).unwrap();
        assert!(s.resolution < 1e-9);
        // ∫_p^2 (1 - x/2) dx, since γ = 1 - p.
        let exact = |p: f64| (2.0 - p) - (4.0 - p * p) / 4.0;
        for &p in &[0.1, 0.8, 1.5] {
            assert!((s.fee(p).unwrap() - exact(p)).abs() < 1e-8);
        }
    }

    #[test]
    fn increasing_strikes_anchor_at_the_top() {
        let nodes = crate::scalar::linspace(-1.0, 1.0, 11);
        let s = TabulatedSchedule::build(Firm::A, &nodes, |g: f64| 1.0 + g, |_| 0.5, 0.25, 1e-12).unwrap();
        assert_eq!(s.max_strike, 2.0);
        assert!((s.fee(0.0).unwrap() - 1.25).abs() < 1e-14);
    }
}
