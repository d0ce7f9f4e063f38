//! Grid diagnostics for log-concavity, symmetry, and monotone hazard ratios.

use serde::{Deserialize, Serialize};

use super::Density;
use crate::scalar::{count, linspace, lit, Scalar};

const GRID: usize = 1001;
const LOG_CONCAVITY_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-10;
const HAZARD_TOL: f64 = 1e-12;

/// Outcome of one diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityCheck {
    pub name: String,
    pub passed: bool,
    /// Largest violation found (0 when none).
    pub worst: f64,
    pub first_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub checks: Vec<RegularityCheck>,
}

impl RegularityReport {
    pub fn check(&self, name: &str) -> Option<&RegularityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn passed(&self, name: &str) -> bool {
        self.check(name).is_some_and(|c| c.passed)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Both hazard-ratio monotonicity conditions hold.
    pub fn hazard_monotone(&self) -> bool {
        self.passed(names::LOWER_HAZARD) && self.passed(names::UPPER_HAZARD)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

pub mod names {
    pub const TYPE_LOG_CONCAVE: &str = "type density log-concave";
    pub const SHOCK_LOG_CONCAVE: &str = "shock density log-concave";
    pub const SHOCK_SYMMETRIC: &str = "shock density symmetric";
    pub const SHOCK_FULL_SUPPORT: &str = "shock density full support";
    pub const LOWER_HAZARD: &str = "G/g nondecreasing";
    pub const UPPER_HAZARD: &str = "(1-G)/g nonincreasing";
}

struct Tracker {
    name: &'static str,
    worst: f64,
    first: Option<f64>,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: 0.0,
            first: None,
        }
    }

    fn record<T: Scalar>(&mut self, excess: T, at: T) {
        let e = excess.to_f64().unwrap_or(f64::INFINITY);
        if e > 0.0 || e.is_nan() {
            if self.first.is_none() {
                self.first = at.to_f64();
            }
            if e > self.worst || e.is_nan() {
                self.worst = if e.is_nan() { f64::INFINITY } else { e };
            }
        }
    }

    fn finish(self) -> RegularityCheck {
        RegularityCheck {
            name: self.name.to_string(),
            passed: self.first.is_none(),
            worst: self.worst,
            first_violation: self.first,
        }
    }
}

fn log_concavity<T: Scalar>(d: &Density<T>, name: &'static str) -> RegularityCheck {
    let (lo, hi) = d.effective_support();
    let xs = linspace(lo, hi, GRID);
    let logs: Vec<Option<T>> = xs
        .iter()
        .map(|&x| {
            let p = d.pdf(x);
            (p > T::zero()).then(|| p.ln())
        })
        .collect();
    let mut t = Tracker::new(name);
    let tol: T = lit(LOG_CONCAVITY_TOL);
    for i in 1..GRID - 1 {
        if let (Some(a), Some(b), Some(c)) = (logs[i - 1], logs[i], logs[i + 1]) {
            t.record(a - b - b + c - tol, xs[i]);
        }
    }
    t.finish()
}

/// Largest `|pdf(c + x) - pdf(c - x)|` over a grid, infinite if the support
/// is not symmetric about `c`.
pub fn symmetry_defect<T: Scalar>(d: &Density<T>, center: T) -> T {
    symmetry_scan(d, center).0
}

fn symmetry_scan<T: Scalar>(d: &Density<T>, center: T) -> (T, Option<T>) {
    let (lo, hi) = d.support();
    let span_tol = lit::<T>(1e-12) * (T::one() + lo.abs().max(hi.abs()));
    if (lo.is_finite() || hi.is_finite()) && ((center - lo) - (hi - center)).abs() > span_tol {
        return (T::infinity(), Some(center));
    }
    let (elo, ehi) = d.effective_support();
    let reach = (center - elo).min(ehi - center);
    let mut worst = T::zero();
    let mut first = None;
    for i in 0..GRID {
        let x = reach * count(i) / count(GRID - 1);
        let gap = (d.pdf(center + x) - d.pdf(center - x)).abs();
        if gap > lit(SYMMETRY_TOL) && first.is_none() {
            first = Some(center + x);
        }
        worst = worst.max(gap);
    }
    (worst, first)
}

fn hazard_checks<T: Scalar>(g: &Density<T>) -> (RegularityCheck, RegularityCheck) {
    let (lo, hi) = g.effective_support();
    let xs = linspace(lo, hi, GRID);
    let mut lower = Tracker::new(names::LOWER_HAZARD);
    let mut upper = Tracker::new(names::UPPER_HAZARD);
    let ratio = |num: T, x: T| {
        let den = g.pdf(x);
        if den > T::zero() {
            num / den
        } else {
            T::infinity()
        }
    };
    let tol = |v: T| lit::<T>(HAZARD_TOL) * (T::one() + v.abs());
    let mut prev: Option<(T, T)> = None;
    for &x in &xs {
        let lower_r = ratio(g.cdf(x), x);
        let upper_r = ratio(g.sf(x), x);
        if let Some((pl, pu)) = prev {
            if lower_r.is_finite() && pl.is_finite() {
                lower.record(pl - lower_r - tol(pl), x);
            }
            if upper_r.is_finite() && pu.is_finite() {
                upper.record(upper_r - pu - tol(pu), x);
            }
        }
        prev = Some((lower_r, upper_r));
    }
    (lower.finish(), upper.finish())
}

/// Runs every regularity diagnostic on a type law `g` and shock law `f`.
///
/// Failures are reported, never raised.
pub fn assert_regularity<T: Scalar>(g: &Density<T>, f: &Density<T>) -> RegularityReport {
    let (lower, upper) = hazard_checks(g);
    let (sym_worst, sym_first) = symmetry_scan(f, T::zero());
    let (flo, fhi) = f.support();
    let full = flo == T::neg_infinity() && fhi == T::infinity();
    RegularityReport {
        checks: vec![
            log_concavity(g, names::TYPE_LOG_CONCAVE),
            log_concavity(f, names::SHOCK_LOG_CONCAVE),
            RegularityCheck {
                name: names::SHOCK_SYMMETRIC.to_string(),
                passed: sym_first.is_none(),
                worst: sym_worst.to_f64().unwrap_or(f64::INFINITY),
                first_violation: sym_first.and_then(|x| x.to_f64()),
            },
            RegularityCheck {
                name: names::SHOCK_FULL_SUPPORT.to_string(),
                passed: full,
                worst: if full { 0.0 } else { f64::INFINITY },
                first_violation: if full {
                    None
                } else {
                    (if flo.is_finite() { flo } else { fhi }).to_f64()
                },
            },
            lower,
            upper,
        ],
    }
}
