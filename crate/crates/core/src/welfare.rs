//! Interim utilities, surplus accounting, early-contracting limits, and the
//! dispersive order on utility curves.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{convolve, symmetry_defect};
use crate::equilibria::{solve_with, Inequality, Setting, SettingSolution, SolveOptions};
use crate::error::{Error, Result};
use crate::market::{duopoly_demand, expected_net_max, valuation, Environment, Firm};
use crate::quadrature::integrate;
use crate::scalar::{lit, Scalar};

/// Slack on the equality checks between curves.
pub const TIE_TOL: f64 = 1e-8;
/// Excess needed for a pair to count as strictly more dispersed.
pub const STRICT_MARGIN: f64 = 1e-9;
/// Largest tolerated gap between direct and summed total surplus.
pub const ACCOUNTING_TOL: f64 = 1e-5;

/// Strikes and total fee paid by type `γ`.
fn holdings<T: Scalar>(sol: &SettingSolution<T>, gamma: T) -> Result<(T, T, T)> {
    let a = sol.contract(Firm::A, gamma)?;
    let b = sol.contract(Firm::B, gamma)?;
    Ok((a.strike, b.strike, a.fee + b.fee))
}

/// Expected payoff `U(γ)` of type `γ` in its equilibrium contracts.
///
/// The consumer pays the fees it holds and later buys the product with the
/// highest net value at its strikes, or nothing.
pub fn interim_utility<T: Scalar>(sol: &SettingSolution<T>, gamma: T) -> Result<T> {
    let (pa, pb, fees) = holdings(sol, gamma)?;
    Ok(expected_net_max(sol.env(), gamma, pa, pb) - fees)
}

/// Purchase probabilities `(q_A, q_B)` of type `γ`.
pub fn interim_demands<T: Scalar>(sol: &SettingSolution<T>, gamma: T) -> Result<(T, T)> {
    let (pa, pb, _) = holdings(sol, gamma)?;
    let env = sol.env();
    Ok((
        duopoly_demand(env, Firm::A, pa, pb, gamma),
        duopoly_demand(env, Firm::B, pb, pa, gamma),
    ))
}

/// Slope of the interim utility predicted by the envelope formula, `E[q_B - q_A]`.
pub fn envelope_integrand<T: Scalar>(sol: &SettingSolution<T>, gamma: T) -> Result<T> {
    interim_demands(sol, gamma).map(|(qa, qb)| qb - qa)
}

/// Break points of the type integrands: the solver grid and the split type.
fn type_knots<T: Scalar>(sol: &SettingSolution<T>) -> Vec<T> {
    let mut k = sol.gamma_grid().to_vec();
    if let Some(d) = sol.gamma_dagger() {
        k.push(d);
    }
    k
}

/// `∫ φ(γ) g(γ) dγ` over the scaled type support.
fn type_average<T, F>(sol: &SettingSolution<T>, what: &str, mut phi: F) -> Result<T>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    let env = sol.env();
    let g = env.types();
    let (lo, hi) = env.gamma_bounds();
    let mut failure = None;
    let r = integrate(
        |x| match phi(x) {
            Ok(v) => v * g.pdf(x),
            Err(e) => {
                failure.get_or_insert(e);
                T::zero()
            }
        },
        lo,
        hi,
        &type_knots(sol),
        env.quad(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let slack = lit::<T>(1e-7) * (T::one() + r.value.abs());
    if !r.value.is_finite() || (!r.converged && r.error > slack) {
        return Err(Error::numeric(
            what.to_string(),
            format!("quadrature did not settle (error estimate {})", r.error),
        ));
    }
    Ok(r.value)
}

/// Consumer, producer and total surplus of one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SurplusReport<T: Scalar> {
    pub setting: Setting,
    pub consumer_surplus: T,
    /// Revenue of firm A; the joint monopolist books all of its revenue here.
    pub producer_surplus_a: T,
    pub producer_surplus_b: T,
    /// Expected realised value of the allocation, integrated directly.
    pub total_surplus: T,
    /// `total_surplus - (CS + PS_A + PS_B)`.
    pub accounting_gap: T,
}

impl<T: Scalar> SurplusReport<T> {
    pub fn producer_surplus(&self) -> T {
        self.producer_surplus_a + self.producer_surplus_b
    }

    /// Whether the two routes to total surplus agree.
    pub fn balanced(&self) -> bool {
        self.accounting_gap.abs() <= lit(ACCOUNTING_TOL)
    }
}

/// Revenue `fee + strike·q` collected by `firm` from type `γ`.
fn revenue<T: Scalar>(sol: &SettingSolution<T>, firm: Firm, gamma: T) -> Result<T> {
    let c = sol.contract(firm, gamma)?;
    if c.is_null() {
        return Ok(T::zero());
    }
    let (qa, qb) = interim_demands(sol, gamma)?;
    let q = if firm == Firm::A { qa } else { qb };
    Ok(c.fee + c.strike * q)
}

/// Expected value of the product allocated to type `γ`.
fn realised_value<T: Scalar>(sol: &SettingSolution<T>, gamma: T) -> T {
    let env = sol.env();
    let kinks: Vec<T> = sol.allocation_kinks(gamma).into_iter().map(|k| k - gamma).collect();
    env.shock().expect_piecewise_linear(&kinks, |e| {
        let theta = gamma + e;
        match sol.allocation(gamma, theta) {
            Some(firm) => valuation(env, firm, theta),
            None => T::zero(),
        }
    })
}

/// Integrates utilities, revenues and realised values over the types.
pub fn surplus<T: Scalar>(sol: &SettingSolution<T>) -> Result<SurplusReport<T>> {
    let cs = type_average(sol, "consumer surplus", |x| interim_utility(sol, x))?;
    let ps_a = type_average(sol, "revenue of A", |x| revenue(sol, Firm::A, x))?;
    let ps_b = type_average(sol, "revenue of B", |x| revenue(sol, Firm::B, x))?;
    let ts = type_average(sol, "total surplus", |x| Ok(realised_value(sol, x)))?;
    Ok(SurplusReport {
        setting: sol.setting(),
        consumer_surplus: cs,
        producer_surplus_a: ps_a,
        producer_surplus_b: ps_b,
        total_surplus: ts,
        accounting_gap: ts - (cs + ps_a + ps_b),
    })
}

/// Type-averaged fee paid to `firm`.
pub fn mean_fee<T: Scalar>(sol: &SettingSolution<T>, firm: Firm) -> Result<T> {
    type_average(sol, "mean fee", |x| sol.contract(firm, x).map(|c| c.fee))
}

/// The `σ`-scaled environment: types spread by `σ`, shocks and `v0` fixed.
pub fn scale<T: Scalar>(env: &Environment<T>, sigma: T) -> Result<Environment<T>> {
    env.rescaled(sigma)
}

/// Surplus of every requested setting at every `σ`, in input order.
pub fn surplus_sweep<T: Scalar>(
    env: &Environment<T>,
    sigmas: &[T],
    settings: &[Setting],
    opts: &SolveOptions,
) -> Result<Vec<(T, SurplusReport<T>)>> {
    let jobs: Vec<(T, Setting)> = sigmas
        .iter()
        .flat_map(|&s| settings.iter().map(move |&k| (s, k)))
        .collect();
    jobs.par_iter()
        .map(|&(s, k)| {
            let scaled = scale(env, s)?;
            let sol = solve_with(&scaled, k, opts)?;
            Ok((s, surplus(&sol)?))
        })
        .collect()
}

/// Surplus in the early-contracting limit, where positions follow the shock law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LimitQuantities<T: Scalar> {
    /// `E[(v_A - (v_B)_+)_+]`.
    pub fee_a: T,
    /// `E[(v_B - (v_A)_+)_+]`.
    pub fee_b: T,
    /// `E[min{(v_A)_+, (v_B)_+}]`.
    pub cs_ne: T,
    /// `E[max{(v_A)_+, (v_B)_+}] - 1/f(0)`.
    pub cs_sp: T,
    /// `E[(v_B)_+]`.
    pub cs_e: T,
    /// `v0 > 1/f(0)`.
    pub hypothesis: Inequality,
}

impl<T: Scalar> LimitQuantities<T> {
    /// `CS^E > CS^NE > CS^SP` in the limit.
    pub fn ordered(&self) -> bool {
        self.cs_e > self.cs_ne && self.cs_ne > self.cs_sp
    }
}

/// Limits of fees and consumer surplus as `σ → 0`.
pub fn limit_quantities<T: Scalar>(env: &Environment<T>) -> Result<LimitQuantities<T>> {
    let f = env.shock();
    let v0 = env.v0();
    let f0 = f.pdf(T::zero());
    if !(f0 > T::zero()) {
        return Err(Error::UnsupportedAssumption("shock density vanishes at 0".into()));
    }
    let inv_f0 = T::one() / f0;
    let kinks = [-v0, T::zero(), v0];
    let plus = |x: T| x.max(T::zero());
    let va = |t: T| valuation(env, Firm::A, t);
    let vb = |t: T| valuation(env, Firm::B, t);
    let mut hypothesis = Inequality::at_least("v0 > 1/f(0)", v0, inv_f0);
    hypothesis.holds = v0 > inv_f0;
    Ok(LimitQuantities {
        fee_a: f.expect_piecewise_linear(&kinks, |t| plus(va(t) - plus(vb(t)))),
        fee_b: f.expect_piecewise_linear(&kinks, |t| plus(vb(t) - plus(va(t)))),
        cs_ne: f.expect_piecewise_linear(&kinks, |t| plus(va(t)).min(plus(vb(t)))),
        cs_sp: f.expect_piecewise_linear(&kinks, |t| plus(va(t)).max(plus(vb(t)))) - inv_f0,
        cs_e: f.expect_piecewise_linear(&kinks, |t| plus(vb(t))),
        hypothesis,
    })
}

/// Interim utility tabulated on a type grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct UtilityCurve<T: Scalar> {
    pub setting: Setting,
    pub gamma_grid: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> UtilityCurve<T> {
    /// Smallest second difference `U_{k-1} - 2U_k + U_{k+1}`.
    pub fn min_second_difference(&self) -> T {
        self.values
            .windows(3)
            .map(|w| w[0] - w[1] - w[1] + w[2])
            .fold(T::infinity(), T::min)
    }

    /// Largest `|U(γ_k) - U(γ_{n-1-k})|`; a symmetry defect on grids symmetric about 0.
    pub fn asymmetry(&self) -> T {
        let n = self.values.len();
        (0..n / 2)
            .map(|k| (self.values[k] - self.values[n - 1 - k]).abs())
            .fold(T::zero(), T::max)
    }

    /// Value at the grid point nearest to `γ`.
    pub fn at(&self, gamma: T) -> Option<T> {
        self.gamma_grid
            .iter()
            .zip(&self.values)
            .min_by(|a, b| {
                let (da, db) = ((*a.0 - gamma).abs(), (*b.0 - gamma).abs());
                da.partial_cmp(&db).unwrap_or(Ordering::Equal)
            })
            .map(|(_, v)| *v)
    }
}

/// `U` on the solver's own grid.
pub fn utility_curve<T: Scalar>(sol: &SettingSolution<T>) -> Result<UtilityCurve<T>> {
    utility_curve_on(sol, sol.gamma_grid())
}

/// `U` on an ascending grid inside the type support, evaluated in parallel.
pub fn utility_curve_on<T: Scalar>(sol: &SettingSolution<T>, grid: &[T]) -> Result<UtilityCurve<T>> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("utility grid must be strictly ascending"));
    }
    let values = grid
        .par_iter()
        .map(|&x| interim_utility(sol, x))
        .collect::<Result<Vec<T>>>()?;
    Ok(UtilityCurve {
        setting: sol.setting(),
        gamma_grid: grid.to_vec(),
        values,
    })
}

/// Outcome of comparing two utility curves in the dispersive order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    StrictlyMore,
    WeaklyMore,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub verdict: Dispersion,
    pub ordinally_equivalent: bool,
    /// Extremes of `ΔU - ΔV` over consecutive types ranked by `V`.
    pub min_excess: f64,
    pub max_excess: f64,
}

/// Is `u` more dispersed than `v`?
///
/// Types are ranked by `v`; for ordinally equivalent curves every pairwise
/// gap is a sum of consecutive increments, so comparing those suffices.
pub fn dispersion_compare<T: Scalar>(u: &UtilityCurve<T>, v: &UtilityCurve<T>) -> Result<DispersionReport> {
    let n = u.values.len();
    let same_grid = n == v.values.len()
        && u.gamma_grid.len() == n
        && v.gamma_grid.len() == n
        && u.gamma_grid.iter().zip(&v.gamma_grid).all(|(a, b)| {
            let (a, b) = (a.to_f64().unwrap_or(f64::NAN), b.to_f64().unwrap_or(f64::NAN));
            (a - b).abs() <= 1e-12 * (1.0 + a.abs())
        });
    if !same_grid {
        return Err(Error::invalid("dispersion comparison needs curves on the same grid"));
    }
    let uf: Vec<f64> = u.values.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let vf: Vec<f64> = v.values.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    if uf.iter().chain(&vf).any(|x| !x.is_finite()) {
        return Err(Error::invalid("utility curves must be finite"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vf[i].total_cmp(&vf[j]).then(uf[i].total_cmp(&uf[j])));

    let mut ordinal = true;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in order.windows(2) {
        let dv = vf[w[1]] - vf[w[0]];
        let du = uf[w[1]] - uf[w[0]];
        let tie_v = dv <= TIE_TOL;
        let tie_u = du.abs() <= TIE_TOL;
        if du < -TIE_TOL || tie_v != tie_u {
            ordinal = false;
        }
        lo = lo.min(du - dv);
        hi = hi.max(du - dv);
    }
    if n < 2 {
        lo = 0.0;
        hi = 0.0;
    }
    let verdict = if !ordinal || lo < -TIE_TOL {
        Dispersion::Incomparable
    } else if hi > STRICT_MARGIN {
        Dispersion::StrictlyMore
    } else {
        Dispersion::WeaklyMore
    };
    Ok(DispersionReport {
        verdict,
        ordinally_equivalent: ordinal,
        min_excess: lo,
        max_excess: hi,
    })
}

/// Pointwise comparison `upper(γ) > lower(γ)` on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelOrdering {
    pub upper: Setting,
    pub lower: Setting,
    pub holds_everywhere: bool,
    /// Grid points where the ordering fails.
    pub violations: usize,
    /// Smallest `upper - lower` and where it occurs.
    pub worst_gap: f64,
    pub worst_gamma: f64,
}

pub fn level_ordering<T: Scalar>(upper: &UtilityCurve<T>, lower: &UtilityCurve<T>) -> Result<LevelOrdering> {
    if upper.gamma_grid != lower.gamma_grid {
        return Err(Error::invalid("level comparison needs curves on the same grid"));
    }
    let mut violations = 0;
    let (mut worst_gap, mut worst_gamma) = (f64::INFINITY, f64::NAN);
    for ((g, a), b) in upper.gamma_grid.iter().zip(&upper.values).zip(&lower.values) {
        let gap = (*a - *b).to_f64().unwrap_or(f64::NAN);
        if !(gap > 0.0) {
            violations += 1;
        }
        if gap < worst_gap || worst_gamma.is_nan() {
            worst_gap = gap;
            worst_gamma = g.to_f64().unwrap_or(f64::NAN);
        }
    }
    Ok(LevelOrdering {
        upper: upper.setting,
        lower: lower.setting,
        holds_everywhere: violations == 0,
        violations,
        worst_gap,
        worst_gamma,
    })
}

/// Status of the joint-monopoly welfare comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonStatus {
    Holds,
    Fails,
    OutsideHypothesis,
}

impl ComparisonStatus {
    pub fn describe(self) -> &'static str {
        match self {
            ComparisonStatus::Holds => "holds",
            ComparisonStatus::Fails => "fails",
            ComparisonStatus::OutsideHypothesis => "outside the ranking's hypothesis",
        }
    }
}

/// Whether the joint monopolist extracts the most and leaves consumers the least.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct JointMonopolyComparison<T: Scalar> {
    pub status: ComparisonStatus,
    pub symmetric_types: bool,
    /// `v0 >= max{v̄, 1/h(0), 3.5 max 1/g}`.
    pub threshold: Inequality,
    pub vbar: T,
    pub reports: Vec<SurplusReport<T>>,
    /// Settings whose equilibrium could not be computed, with the reason.
    pub unsolved: Vec<(Setting, String)>,
}

/// Compares the joint monopoly against the three competitive settings when
/// the threshold is certified; otherwise reports the surpluses only.
pub fn joint_monopoly_comparison<T: Scalar>(
    env: &Environment<T>,
    opts: &SolveOptions,
) -> Result<JointMonopolyComparison<T>> {
    let symmetric_types = symmetry_defect(env.types(), T::zero()) <= lit(1e-10);
    let vbar = crate::equilibria::compute_vbar(env)?;
    let h = convolve(env.types(), env.shock())?;
    let rhs = vbar
        .max(T::one() / h.pdf(T::zero()))
        .max(lit::<T>(3.5) * env.max_inv_g());
    let threshold = Inequality::at_least("v0 >= max(vbar, 1/h(0), 3.5 max 1/g)", env.v0(), rhs);

    let settings = [
        Setting::MultiMonopoly,
        Setting::DuopolyNe,
        Setting::Spot,
        Setting::Exclusive,
    ];
    let outcomes: Vec<(Setting, Result<SurplusReport<T>>)> = settings
        .par_iter()
        .map(|&k| (k, solve_with(env, k, opts).and_then(|s| surplus(&s))))
        .collect();
    let mut reports = Vec::new();
    let mut unsolved = Vec::new();
    for (k, r) in outcomes {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => unsolved.push((k, e.to_string())),
        }
    }
    let status = if !(symmetric_types && threshold.holds) || !unsolved.is_empty() {
        ComparisonStatus::OutsideHypothesis
    } else {
        let mm = &reports[0];
        let rest = &reports[1..];
        let extreme = rest
            .iter()
            .all(|r| mm.producer_surplus() > r.producer_surplus() && mm.consumer_surplus < r.consumer_surplus);
        if extreme {
            ComparisonStatus::Holds
        } else {
            ComparisonStatus::Fails
        }
    };
    Ok(JointMonopolyComparison {
        status,
        symmetric_types,
        threshold,
        vbar,
        reports,
        unsolved,
    })
}

#[cfg(test)]
mod tests;
