//! Brute-force checks of the equilibria.
//!
//! The oracles read schedules, demand primitives and the allocation rule of
//! a solution, then search grids or integrate numerically; the strike maps
//! of the solvers appear only as the candidate being tested.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{convolve, symmetry_defect};
use crate::equilibria::{solve_with, Setting, SettingSolution, SolveOptions};
use crate::error::{Error, Result};
use crate::market::{expected_net_max, valuation, Environment, Firm};
use crate::quadrature::integrate;
use crate::scalar::{linspace, lit, Scalar};
use crate::welfare::{
    dispersion_compare, interim_utility, limit_quantities, scale, surplus, utility_curve, Dispersion,
};

/// Tolerance on utility and objective gaps at grid maxima.
pub const VALUE_TOL: f64 = 1e-6;
/// Tolerance on the integrated envelope formula.
pub const ENVELOPE_TOL: f64 = 1e-5;
/// Mass left out of each tail of the shock in θ-grids.
pub const THETA_TAIL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// Where a check came closest to failing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Witness {
    pub gamma: Option<f64>,
    pub theta: Option<f64>,
    pub prices: Option<(Option<f64>, Option<f64>)>,
}

fn price(p: f64) -> Option<f64> {
    p.is_finite().then_some(p)
}

impl Witness {
    fn at(gamma: f64) -> Self {
        Self {
            gamma: Some(gamma),
            ..Self::default()
        }
    }

    fn with_prices(mut self, pa: f64, pb: f64) -> Self {
        self.prices = Some((price(pa), price(pb)));
        self
    }

    fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }
}

/// Outcome of one check: it passes when `worst_residual <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub check: String,
    pub status: Status,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    /// A failure is reported but does not fail a verification run.
    pub advisory: bool,
    pub detail: String,
    /// Secondary numbers: grid errors, masses, margins.
    pub metrics: BTreeMap<String, f64>,
}

impl OracleReport {
    fn judged(check: impl Into<String>, residual: f64, tolerance: f64, extra_ok: bool) -> Self {
        let pass = residual <= tolerance && extra_ok;
        Self {
            check: check.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            worst_residual: residual,
            tolerance,
            witness: None,
            advisory: false,
            detail: String::new(),
            metrics: BTreeMap::new(),
        }
    }

    /// A check whose hypotheses do not hold.
    pub fn skipped(check: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            status: Status::Skipped,
            worst_residual: f64::NAN,
            tolerance: f64::NAN,
            witness: None,
            advisory: false,
            detail: reason.into(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    fn witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }
}

fn f<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn duopoly_only<T: Scalar>(sol: &SettingSolution<T>, what: &str) -> Result<()> {
    if sol.setting() == Setting::DuopolyNe {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what} needs a non-exclusive duopoly solution, got {}",
            sol.setting()
        )))
    }
}

/// Candidate strikes `0..=p̄` on `n + 1` points followed by the null contract.
fn strike_grid<T: Scalar>(sol: &SettingSolution<T>, firm: Firm, n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let sched = sol
        .schedule(firm)
        .ok_or_else(|| Error::invalid(format!("no schedule for firm {firm}")))?;
    let mut p = linspace(T::zero(), sched.max_strike, n + 1);
    let mut fee = p.iter().map(|&x| sched.fee(x)).collect::<Result<Vec<T>>>()?;
    p.push(T::infinity());
    fee.push(T::zero());
    Ok((p, fee))
}

/// Grid point selected by the consumer at one type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub gamma: f64,
    /// `None` is the null contract.
    pub price_a: Option<f64>,
    pub price_b: Option<f64>,
    pub utility: f64,
}

/// Exhaustive search over strike pairs for type `γ`.
///
/// Each firm's grid spans `[0, p̄_i]` in `grid_n` cells plus the null
/// contract. Exact ties prefer a finite strike.
pub fn consumer_br_oracle<T: Scalar>(
    sol: &SettingSolution<T>,
    gamma: T,
    grid_n: usize,
) -> Result<(BestResponse, OracleReport)> {
    duopoly_only(sol, "consumer best-response oracle")?;
    if grid_n < 2 {
        return Err(Error::invalid("oracle grid needs at least 2 cells"));
    }
    sol.env().check_gamma(gamma)?;
    let env = sol.env();
    let (pa, fa) = strike_grid(sol, Firm::A, grid_n)?;
    let (pb, fb) = strike_grid(sol, Firm::B, grid_n)?;
    let util = |i: usize, j: usize| expected_net_max(env, gamma, pa[i], pb[j]) - fa[i] - fb[j];

    let mut best = (0, 0, T::neg_infinity());
    for i in 0..pa.len() {
        for j in 0..pb.len() {
            let u = util(i, j);
            let tie = lit::<T>(1e-12) * (T::one() + u.abs());
            let finite_now = pa[i].is_finite() as u8 + pb[j].is_finite() as u8;
            let finite_best = pa[best.0].is_finite() as u8 + pb[best.1].is_finite() as u8;
            if u > best.2 + tie || ((u - best.2).abs() <= tie && finite_now > finite_best) {
                best = (i, j, u);
            }
        }
    }

    let (sa, sb) = (sol.strike(Firm::A, gamma), sol.strike(Firm::B, gamma));
    let fee_a = sol.contract(Firm::A, gamma)?.fee;
    let fee_b = sol.contract(Firm::B, gamma)?.fee;
    let u_star = expected_net_max(env, gamma, sa, sb) - fee_a - fee_b;
    let cell_a = pa[1] - pa[0];
    let cell_b = pb[1] - pb[0];
    let within = |p: T, s: T, cell: T| p.is_finite() && (p - s).abs() <= cell * lit(1.0 + 1e-9);
    let near = within(pa[best.0], sa, cell_a) && within(pb[best.1], sb, cell_b);
    let shortfall = f(best.2 - u_star).max(0.0);

    let br = BestResponse {
        gamma: f(gamma),
        price_a: price(f(pa[best.0])),
        price_b: price(f(pb[best.1])),
        utility: f(best.2),
    };
    let report = OracleReport::judged(
        format!("consumer-best-response@{:+.4}", f(gamma)),
        shortfall,
        VALUE_TOL,
        near,
    )
    .witness(Witness::at(f(gamma)).with_prices(f(pa[best.0]), f(pb[best.1])))
    .metric("grid_error", f(u_star - best.2))
    .metric("argmax_in_cell", if near { 1.0 } else { 0.0 })
    .detail(format!(
        "grid argmax ({}, {}) against equilibrium ({}, {})",
        f(pa[best.0]),
        f(pb[best.1]),
        f(sa),
        f(sb)
    ));
    Ok((br, report))
}

/// Runs [`consumer_br_oracle`] on ascending types and checks that the
/// selected strikes move monotonically: `p_A` up, `p_B` down.
pub fn consumer_br_sweep<T: Scalar>(sol: &SettingSolution<T>, gammas: &[T], grid_n: usize) -> Result<OracleReport> {
    let runs = gammas
        .par_iter()
        .map(|&g| consumer_br_oracle(sol, g, grid_n))
        .collect::<Result<Vec<_>>>()?;
    let key = |p: Option<f64>| p.unwrap_or(f64::INFINITY);
    let monotone = runs.windows(2).all(|w| {
        let (a, b) = (&w[0].0, &w[1].0);
        key(b.price_a) >= key(a.price_a) && key(b.price_b) <= key(a.price_b)
    });
    let worst = runs
        .iter()
        .max_by(|a, b| {
            let fa = !a.1.passed() as u8;
            let fb = !b.1.passed() as u8;
            fa.cmp(&fb).then(a.1.worst_residual.total_cmp(&b.1.worst_residual))
        })
        .map(|(_, r)| r.clone());
    let residual = runs.iter().map(|(_, r)| r.worst_residual).fold(0.0, f64::max);
    let grid_error = runs
        .iter()
        .map(|(_, r)| r.metrics["grid_error"].abs())
        .fold(0.0, f64::max);
    let in_cell = runs.iter().all(|(_, r)| r.metrics["argmax_in_cell"] == 1.0);
    let mut report = OracleReport::judged("consumer-best-response", residual, VALUE_TOL, in_cell && monotone)
        .metric("types", runs.len() as f64)
        .metric("grid_error", grid_error)
        .metric("monotone_selection", if monotone { 1.0 } else { 0.0 })
        .detail(format!(
            "{} types on a {grid_n}-cell grid; argmax in cell at every type: {in_cell}; monotone: {monotone}",
            runs.len()
        ));
    if let Some(w) = worst.and_then(|r| r.witness) {
        report = report.witness(w);
    }
    Ok(report)
}

/// `(P[a <= θ < b], E[θ; a <= θ < b])` for `θ = γ + ε`.
fn piece<T: Scalar>(env: &Environment<T>, gamma: T, a: T, b: T) -> (T, T) {
    if !(a < b) {
        return (T::zero(), T::zero());
    }
    let (m, m1) = env.shock().partial_moments(a - gamma, b - gamma);
    (m, gamma * m + m1)
}

/// `E[(c + sθ); a <= θ < b]` for `v = c + sθ`.
fn linear<T: Scalar>(env: &Environment<T>, gamma: T, a: T, b: T, c: T, s: T) -> T {
    let (m, m1) = piece(env, gamma, a, b);
    c * m + s * m1
}

/// θ-range between the tail quantiles of the conditional law.
fn theta_range<T: Scalar>(env: &Environment<T>, gamma: T) -> (T, T) {
    let f = env.shock();
    let tail: T = lit(THETA_TAIL);
    (gamma + f.quantile(tail), gamma + f.quantile(T::one() - tail))
}

/// Pointwise objective of a deviating firm at type `γ`.
///
/// `own` deviates and recommends a strike `p` at the rival; allocations are
/// threshold rules (`own` serves its side of `t`) plus exclusion variants
/// that leave a gap between the two zero crossings of the coefficients.
struct Pointwise<'a, T: Scalar> {
    env: &'a Environment<T>,
    own: Firm,
    gamma: T,
    rent: T,
}

impl<T: Scalar> Pointwise<'_, T> {
    /// `(c_rival, s_rival, c_own, s_own)` so that the coefficients are `c + sθ`.
    fn coefficients(&self, p: T) -> (T, T, T, T) {
        let v0 = self.env.v0();
        let (sr, so) = match self.own {
            Firm::B => (-T::one(), T::one()),
            Firm::A => (T::one(), -T::one()),
        };
        (v0 - p + self.rent, sr, v0 - self.rent, so)
    }

    /// Rival served on its side of `t`, `own` on the other.
    fn threshold(&self, p: T, fee: T, t: T) -> T {
        let (cr, sr, co, so) = self.coefficients(p);
        let (ninf, inf) = (T::neg_infinity(), T::infinity());
        let (g, e) = (self.gamma, self.env);
        let (rival, own) = match self.own {
            Firm::B => (linear(e, g, ninf, t, cr, sr), linear(e, g, t, inf, co, so)),
            Firm::A => (linear(e, g, t, inf, cr, sr), linear(e, g, ninf, t, co, so)),
        };
        let rival = if p.is_finite() { rival } else { T::zero() };
        rival + own - fee
    }

    /// Each product sold only where its coefficient is positive; `None` when
    /// the two regions overlap, so exclusion cannot help.
    fn exclusion(&self, p: T, fee: T) -> Option<T> {
        let (cr, sr, co, so) = self.coefficients(p);
        // zero crossings: c + sθ = 0 ⇒ θ = -c/s
        let (zr, zo) = (-cr / sr, -co / so);
        let (ninf, inf) = (T::neg_infinity(), T::infinity());
        let (g, e) = (self.gamma, self.env);
        let value = match self.own {
            Firm::B => {
                let rival = if p.is_finite() {
                    linear(e, g, ninf, zr, cr, sr)
                } else {
                    T::zero()
                };
                if p.is_finite() && zr >= zo {
                    return None;
                }
                rival + linear(e, g, zo, inf, co, so)
            }
            Firm::A => {
                let rival = if p.is_finite() {
                    linear(e, g, zr, inf, cr, sr)
                } else {
                    T::zero()
                };
                if p.is_finite() && zo >= zr {
                    return None;
                }
                rival + linear(e, g, ninf, zo, co, so)
            }
        };
        Some(value - fee)
    }
}

/// Grid maximisation of a firm's pointwise objective at type `γ`.
///
/// `own` is the deviating firm. Passes when the equilibrium strike at the
/// rival with the equilibrium threshold attains the grid maximum within
/// [`VALUE_TOL`] and the maximiser covers the market.
pub fn firm_pointwise_check<T: Scalar>(
    sol: &SettingSolution<T>,
    own: Firm,
    gamma: T,
    grid_n: usize,
) -> Result<OracleReport> {
    duopoly_only(sol, "firm pointwise check")?;
    let env = sol.env();
    env.check_gamma(gamma)?;
    let max_inv_g = env.max_inv_g();
    if env.v0() < max_inv_g {
        return Ok(OracleReport::skipped(
            format!("firm-pointwise-{}@{:+.4}", own.to_string().to_lowercase(), f(gamma)),
            format!("v0 = {} below max 1/g = {}", f(env.v0()), f(max_inv_g)),
        ));
    }
    let g = env.types();
    let dens = g.pdf(gamma);
    let rent = match own {
        Firm::B => g.sf(gamma) / dens,
        Firm::A => g.cdf(gamma) / dens,
    };
    let obj = Pointwise { env, own, gamma, rent };
    let rival = own.other();
    let (ps, fees) = strike_grid(sol, rival, grid_n)?;
    let (lo, hi) = theta_range(env, gamma);
    let ts = linspace(lo, hi, grid_n + 1);

    #[derive(Clone, Copy)]
    enum Rule<T> {
        Threshold(T),
        Exclusion,
    }
    // Threshold that hands the whole market to `own`.
    let own_all = match own {
        Firm::B => T::neg_infinity(),
        Firm::A => T::infinity(),
    };
    let mut best = (0usize, Rule::Threshold(own_all), T::neg_infinity(), false);
    let mut offer = |i: usize, rule: Rule<T>, v: T, covered: bool| {
        let tie = lit::<T>(1e-12) * (T::one() + v.abs());
        if v > best.2 + tie || ((v - best.2).abs() <= tie && covered && !best.3) {
            best = (i, rule, v, covered);
        }
    };
    for (i, (&p, &fee)) in ps.iter().zip(&fees).enumerate() {
        for &t in ts.iter().chain([own_all, -own_all].iter()) {
            // Without a rival contract only the own-serves-all rule covers.
            let covered = p.is_finite() || t == own_all;
            offer(i, Rule::Threshold(t), obj.threshold(p, fee, t), covered);
        }
        if let Some(v) = obj.exclusion(p, fee) {
            offer(i, Rule::Exclusion, v, false);
        }
    }

    let (pa, pb) = (sol.strike(Firm::A, gamma), sol.strike(Firm::B, gamma));
    let p_star = sol.strike(rival, gamma);
    let fee_star = sol.contract(rival, gamma)?.fee;
    let t_star = (pb - pa) / lit(2.0);
    let v_star = obj.threshold(p_star, fee_star, t_star);

    // Pointwise coverage at the maximising strike: best coefficient is nonnegative.
    let p_best = ps[best.0];
    let (cr, sr, co, so) = obj.coefficients(p_best);
    let thetas = linspace(lo, hi, 4 * grid_n + 1);
    let mut gap = T::infinity();
    let mut gap_at = lo;
    for &th in &thetas {
        let own_c = co + so * th;
        let c = if p_best.is_finite() {
            own_c.max(cr + sr * th)
        } else {
            own_c
        };
        if c < gap {
            gap = c;
            gap_at = th;
        }
    }
    let covered = best.3 && gap >= T::zero();
    let shortfall = f(best.2 - v_star).max(0.0);
    let name = format!("firm-pointwise-{}@{:+.4}", own.to_string().to_lowercase(), f(gamma));
    let (wa, wb) = match own {
        Firm::B => (f(p_best), f(pb)),
        Firm::A => (f(pa), f(p_best)),
    };
    let t_best = match best.1 {
        Rule::Threshold(t) => f(t),
        Rule::Exclusion => f64::NAN,
    };
    let witness = Witness::at(f(gamma)).with_prices(wa, wb);
    let witness = if covered {
        witness.with_theta(t_best)
    } else {
        witness.with_theta(f(gap_at))
    };
    Ok(OracleReport::judged(name, shortfall, VALUE_TOL, covered)
        .witness(witness)
        .metric("grid_error", f(v_star - best.2))
        .metric("covered", if covered { 1.0 } else { 0.0 })
        .metric("min_coefficient", f(gap))
        .metric("strike_distance", f((p_best - p_star).abs()))
        .detail(format!(
            "grid max {} at rival strike {} against equilibrium value {}",
            f(best.2),
            f(p_best),
            f(v_star)
        )))
}

/// [`firm_pointwise_check`] over a set of types, reduced to the worst case.
pub fn firm_pointwise_sweep<T: Scalar>(
    sol: &SettingSolution<T>,
    own: Firm,
    gammas: &[T],
    grid_n: usize,
) -> Result<OracleReport> {
    let runs = gammas
        .par_iter()
        .map(|&g| firm_pointwise_check(sol, own, g, grid_n))
        .collect::<Result<Vec<_>>>()?;
    let name = format!("firm-pointwise-{}", own.to_string().to_lowercase());
    if let Some(s) = runs.iter().find(|r| r.status == Status::Skipped) {
        return Ok(OracleReport::skipped(name, s.detail.clone()));
    }
    let residual = runs.iter().map(|r| r.worst_residual).fold(0.0, f64::max);
    let covered = runs.iter().all(|r| r.metrics["covered"] == 1.0);
    let grid_error = runs.iter().map(|r| r.metrics["grid_error"].abs()).fold(0.0, f64::max);
    let worst = runs
        .iter()
        .max_by(|a, b| {
            (!a.passed() as u8)
                .cmp(&(!b.passed() as u8))
                .then(a.worst_residual.total_cmp(&b.worst_residual))
        })
        .and_then(|r| r.witness);
    let mut report = OracleReport::judged(name, residual, VALUE_TOL, covered)
        .metric("types", runs.len() as f64)
        .metric("grid_error", grid_error)
        .metric("covered", if covered { 1.0 } else { 0.0 })
        .detail(format!(
            "{} types on a {grid_n}-cell grid; every maximiser covered: {covered}",
            runs.len()
        ));
    if let Some(w) = worst {
        report = report.witness(w);
    }
    Ok(report)
}

/// `E[1{B} - 1{A}]` under the solution's allocation rule.
fn allocation_drift<T: Scalar>(sol: &SettingSolution<T>, gamma: T) -> T {
    let kinks: Vec<T> = sol.allocation_kinks(gamma).into_iter().map(|k| k - gamma).collect();
    sol.env()
        .shock()
        .expect_piecewise_linear(&kinks, |e| match sol.allocation(gamma, gamma + e) {
            Some(Firm::B) => T::one(),
            Some(Firm::A) => -T::one(),
            None => T::zero(),
        })
}

/// Largest gap between `U(γ) - U(γ_l)` and the integral of `E[q_B - q_A]`.
pub fn envelope_residual<T: Scalar>(sol: &SettingSolution<T>, grid_n: usize) -> Result<OracleReport> {
    let env = sol.env();
    let (lo, hi) = env.gamma_bounds();
    let grid = linspace(lo, hi, grid_n.max(2));
    let mut knots = grid.clone();
    knots.extend(sol.gamma_dagger());
    let u = grid
        .par_iter()
        .map(|&g| interim_utility(sol, g))
        .collect::<Result<Vec<T>>>()?;
    let steps: Vec<T> = grid
        .par_windows(2)
        .map(|w| integrate(|x| allocation_drift(sol, x), w[0], w[1], &knots, env.quad()).value)
        .collect();
    let mut rent = T::zero();
    let mut worst = (0.0f64, f(lo));
    for (k, &g) in grid.iter().enumerate().skip(1) {
        rent = rent + steps[k - 1];
        let r = f((u[k] - u[0] - rent).abs());
        if !(r <= worst.0) {
            worst = (r, f(g));
        }
    }
    Ok(
        OracleReport::judged(format!("envelope-{}", sol.setting()), worst.0, ENVELOPE_TOL, true)
            .witness(Witness::at(worst.1))
            .metric("points", grid.len() as f64)
            .detail(format!(
                "utility gains against integrated demand on {} types",
                grid.len()
            )),
    )
}

/// Realised surplus of the product allocated at `(γ, θ)`.
fn realised<T: Scalar>(sol: &SettingSolution<T>, gamma: T, theta: T) -> T {
    match sol.allocation(gamma, theta) {
        Some(firm) => valuation(sol.env(), firm, theta),
        None => T::zero(),
    }
}

fn symmetric_types<T: Scalar>(env: &Environment<T>) -> bool {
    symmetry_defect(env.types(), T::zero()) <= lit(1e-10)
}

/// The non-exclusive allocation is weakly more efficient than the exclusive
/// one at every node of a `(γ, θ)` grid covering 99.99% of the mass, and
/// strictly so on a set of positive probability.
pub fn efficiency_check<T: Scalar>(
    duopoly: &SettingSolution<T>,
    exclusive: &SettingSolution<T>,
    grid_n: usize,
) -> Result<OracleReport> {
    duopoly_only(duopoly, "efficiency check")?;
    if exclusive.setting() != Setting::Exclusive {
        return Err(Error::invalid("efficiency check needs an exclusive solution"));
    }
    let env = duopoly.env();
    let name = "efficiency";
    if !symmetric_types(env) {
        return Ok(OracleReport::skipped(name, "type density is not symmetric"));
    }
    let bound = lit::<T>(3.5) * env.max_inv_g();
    if env.v0() < bound {
        return Ok(OracleReport::skipped(
            name,
            format!("v0 below 3.5 max 1/g = {}", f(bound)),
        ));
    }
    let (lo, hi) = env.gamma_bounds();
    let gammas = linspace(lo, hi, grid_n + 1);
    let shock = env.shock();
    let tail: T = lit(0.5e-4);
    let eps = linspace(shock.quantile(tail), shock.quantile(T::one() - tail), grid_n + 1);
    let trapezoid = |xs: &[T], k: usize| {
        let n = xs.len();
        let left = if k > 0 { xs[k] - xs[k - 1] } else { T::zero() };
        let right = if k + 1 < n { xs[k + 1] - xs[k] } else { T::zero() };
        (left + right) / lit(2.0)
    };
    let rows: Vec<(f64, f64, f64, Witness)> = (0..gammas.len())
        .into_par_iter()
        .map(|i| {
            let g = gammas[i];
            let wg = env.types().pdf(g) * trapezoid(&gammas, i);
            let (mut total, mut strict) = (0.0, 0.0);
            let mut worst = (f64::NEG_INFINITY, Witness::at(f(g)));
            for (k, &e) in eps.iter().enumerate() {
                let th = g + e;
                let w = f(wg * shock.pdf(e) * trapezoid(&eps, k));
                let gain = f(realised(duopoly, g, th) - realised(exclusive, g, th));
                total += w;
                if gain > VALUE_TOL {
                    strict += w;
                }
                if -gain > worst.0 {
                    worst = (-gain, Witness::at(f(g)).with_theta(f(th)));
                }
            }
            (total, strict, worst.0, worst.1)
        })
        .collect();
    let mass: f64 = rows.iter().map(|r| r.0).sum();
    let strict: f64 = rows.iter().map(|r| r.1).sum();
    let (loss, witness) = rows
        .iter()
        .map(|r| (r.2, r.3))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::NAN, Witness::default()));
    Ok(OracleReport::judged(name, loss.max(0.0), 1e-9, strict > 0.0)
        .witness(witness)
        .metric("grid_mass", mass)
        .metric("strict_mass", strict)
        .detail(format!(
            "worst exclusive advantage {:.3e}; strict improvement on mass {strict:.6} of {mass:.6}",
            loss + 0.0
        )))
}

/// Non-exclusive fees lie strictly below the monopoly fees on `[0, p̄_i^M]`.
pub fn dominance_check<T: Scalar>(
    env: &Environment<T>,
    firm: Firm,
    grid_n: usize,
    opts: &SolveOptions,
) -> Result<OracleReport> {
    let name = format!("dominance-{}", firm.to_string().to_lowercase());
    let bound = lit::<T>(3.5) * env.max_inv_g();
    if env.v0() < bound {
        return Ok(OracleReport::skipped(
            name,
            format!("v0 below 3.5 max 1/g = {}", f(bound)),
        ));
    }
    let mono_setting = match firm {
        Firm::A => Setting::MonopolyA,
        Firm::B => Setting::MonopolyB,
    };
    let duo = solve_with(env, Setting::DuopolyNe, opts)?;
    let mono = solve_with(env, mono_setting, opts)?;
    let (sd, sm) = (
        duo.schedule(firm).expect("duopoly schedule"),
        mono.schedule(firm).expect("monopoly schedule"),
    );
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for p in linspace(T::zero(), sm.max_strike, 10 * grid_n + 1) {
        let gap = f(sd.fee(p)? - sm.fee(p)?);
        if gap > worst.0 {
            worst = (gap, f(p));
        }
    }
    let (pa, pb) = match firm {
        Firm::A => (worst.1, f64::INFINITY),
        Firm::B => (f64::INFINITY, worst.1),
    };
    Ok(OracleReport::judged(name, worst.0, -VALUE_TOL, true)
        .witness(Witness::default().with_prices(pa, pb))
        .detail(format!("largest s*(p) - s^M(p) = {:.6} at p = {}", worst.0, worst.1)))
}

/// Early-contracting surplus ranking at one `σ`: consumer surplus falls from
/// exclusive to non-exclusive to spot, producer surplus rises.
///
/// The ranking is only guaranteed for small `σ`, so a failure is advisory.
pub fn welfare_ranking_check<T: Scalar>(env: &Environment<T>, sigma: T, opts: &SolveOptions) -> Result<OracleReport> {
    let name = format!("welfare-ranking@sigma={}", f(sigma));
    let (lo, hi) = env.gamma_bounds();
    if !(lo < T::zero() && T::zero() < hi) {
        return Ok(OracleReport::skipped(name, "type support does not straddle 0"));
    }
    let inv_f0 = T::one() / env.shock().pdf(T::zero());
    if !(env.v0() > inv_f0) {
        return Ok(OracleReport::skipped(
            name,
            format!("v0 not above 1/f(0) = {}", f(inv_f0)),
        ));
    }
    let scaled = scale(env, sigma)?;
    let reports = [Setting::Exclusive, Setting::DuopolyNe, Setting::Spot]
        .par_iter()
        .map(|&k| solve_with(&scaled, k, opts).and_then(|s| surplus(&s)))
        .collect::<Result<Vec<_>>>()?;
    let (e, ne, sp) = (&reports[0], &reports[1], &reports[2]);
    let cs = [f(e.consumer_surplus), f(ne.consumer_surplus), f(sp.consumer_surplus)];
    let ps = [
        f(e.producer_surplus()),
        f(ne.producer_surplus()),
        f(sp.producer_surplus()),
    ];
    let margins = [cs[0] - cs[1], cs[1] - cs[2], ps[1] - ps[0], ps[2] - ps[1]];
    let margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let limits = limit_quantities(env)?;
    let mut report = OracleReport::judged(name, -margin, -VALUE_TOL, true)
        .metric("cs_e", cs[0])
        .metric("cs_ne", cs[1])
        .metric("cs_sp", cs[2])
        .metric("ps_e", ps[0])
        .metric("ps_ne", ps[1])
        .metric("ps_sp", ps[2])
        .metric("min_margin", margin)
        .metric("limit_gap_cs_e", cs[0] - f(limits.cs_e))
        .metric("limit_gap_cs_ne", cs[1] - f(limits.cs_ne))
        .metric("limit_gap_cs_sp", cs[2] - f(limits.cs_sp))
        .detail(format!(
            "CS E/NE/SP = {:.6}/{:.6}/{:.6}; PS E/NE/SP = {:.6}/{:.6}/{:.6}",
            cs[0], cs[1], cs[2], ps[0], ps[1], ps[2]
        ));
    report.advisory = true;
    Ok(report)
}

/// Hypotheses of the shape and dispersion statements for the utility curves.
fn dispersion_gate<T: Scalar>(env: &Environment<T>) -> Result<Option<String>> {
    if !symmetric_types(env) {
        return Ok(Some("type density is not symmetric".into()));
    }
    let h = convolve(env.types(), env.shock())?;
    let bound = (T::one() / h.pdf(T::zero())).max(lit::<T>(3.5) * env.max_inv_g());
    Ok((env.v0() < bound).then(|| format!("v0 below max(1/h(0), 3.5 max 1/g) = {}", f(bound))))
}

/// Convexity, symmetry, and the dispersive ranking `U^E ≻ U^NE ≻ U^SP`.
pub fn utility_shape_checks<T: Scalar>(env: &Environment<T>, opts: &SolveOptions) -> Result<Vec<OracleReport>> {
    if let Some(reason) = dispersion_gate(env)? {
        return Ok(vec![
            OracleReport::skipped("utility-shape", reason.clone()),
            OracleReport::skipped("utility-dispersion", reason),
        ]);
    }
    let curves = [Setting::Exclusive, Setting::DuopolyNe, Setting::Spot]
        .par_iter()
        .map(|&k| solve_with(env, k, opts).and_then(|s| utility_curve(&s)))
        .collect::<Result<Vec<_>>>()?;
    let mut shape = 0.0f64;
    let mut shape_at = String::new();
    for c in &curves {
        let r = f(-c.min_second_difference()).max(f(c.asymmetry()));
        if r >= shape {
            shape = r;
            shape_at = c.setting.to_string();
        }
    }
    let shape_report = OracleReport::judged("utility-shape", shape, 1e-8, true)
        .detail(format!("worst of -min second difference and asymmetry, at {shape_at}"));
    let upper = dispersion_compare(&curves[0], &curves[1])?;
    let lower = dispersion_compare(&curves[1], &curves[2])?;
    let strict = upper.verdict == Dispersion::StrictlyMore && lower.verdict == Dispersion::StrictlyMore;
    let excess = upper.min_excess.min(lower.min_excess);
    let dispersion_report = OracleReport::judged("utility-dispersion", (-excess).max(0.0), 1e-8, strict)
        .metric("margin_e_ne", upper.max_excess)
        .metric("margin_ne_sp", lower.max_excess)
        .detail(format!(
            "exclusive vs non-exclusive: {:?}; non-exclusive vs spot: {:?}",
            upper.verdict, lower.verdict
        ));
    Ok(vec![shape_report, dispersion_report])
}

/// Groups of checks run by [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Consumer,
    Firm,
    Envelope,
    Efficiency,
    Dominance,
    Welfare,
    Dispersion,
}

impl Suite {
    fn includes(self, part: Suite) -> bool {
        self == Suite::All || self == part
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "all" => Suite::All,
            "consumer" => Suite::Consumer,
            "firm" => Suite::Firm,
            "envelope" => Suite::Envelope,
            "efficiency" => Suite::Efficiency,
            "dominance" => Suite::Dominance,
            "welfare" => Suite::Welfare,
            "dispersion" => Suite::Dispersion,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown suite '{s}' (expected all, consumer, firm, envelope, efficiency, dominance, welfare, dispersion)"
                )))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::All => "all",
            Suite::Consumer => "consumer",
            Suite::Firm => "firm",
            Suite::Envelope => "envelope",
            Suite::Efficiency => "efficiency",
            Suite::Dominance => "dominance",
            Suite::Welfare => "welfare",
            Suite::Dispersion => "dispersion",
        })
    }
}

/// Sizes of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOptions {
    /// Cells per strike or threshold axis.
    pub grid: usize,
    /// Types sampled by the best-response and pointwise checks.
    pub types: usize,
    /// Type grid of the envelope check.
    pub envelope_points: usize,
    /// Type scales at which the surplus ranking is checked.
    pub sigmas: Vec<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid: 200,
            types: 21,
            envelope_points: 201,
            sigmas: vec![0.05],
        }
    }
}

/// Runs the requested checks concurrently; reports come back sorted by name.
pub fn verify<T: Scalar>(
    env: &Environment<T>,
    suite: Suite,
    vopts: &VerifyOptions,
    opts: &SolveOptions,
) -> Result<Vec<OracleReport>> {
    if vopts.grid < 2 || vopts.types < 2 || vopts.envelope_points < 2 {
        return Err(Error::invalid("verification grids need at least 2 points"));
    }
    type Job<'a> = Box<dyn Fn() -> Result<Vec<OracleReport>> + Send + Sync + 'a>;
    let duo = solve_with(env, Setting::DuopolyNe, opts)?;
    let (lo, hi) = env.gamma_bounds();
    let types = linspace(lo, hi, vopts.types);
    let mut jobs: Vec<Job> = Vec::new();
    if suite.includes(Suite::Consumer) {
        jobs.push(Box::new(|| Ok(vec![consumer_br_sweep(&duo, &types, vopts.grid)?])));
    }
    if suite.includes(Suite::Firm) {
        for own in [Firm::A, Firm::B] {
            let (duo, types) = (&duo, &types);
            jobs.push(Box::new(move || {
                Ok(vec![firm_pointwise_sweep(duo, own, types, vopts.grid)?])
            }));
        }
    }
    if suite.includes(Suite::Envelope) {
        for k in [Setting::DuopolyNe, Setting::Spot, Setting::Exclusive] {
            jobs.push(Box::new(move || {
                let sol = solve_with(env, k, opts)?;
                Ok(vec![envelope_residual(&sol, vopts.envelope_points)?])
            }));
        }
    }
    if suite.includes(Suite::Efficiency) {
        jobs.push(Box::new(|| {
            let ex = solve_with(env, Setting::Exclusive, opts)?;
            Ok(vec![efficiency_check(&duo, &ex, vopts.grid)?])
        }));
    }
    if suite.includes(Suite::Dominance) {
        for firm in [Firm::A, Firm::B] {
            jobs.push(Box::new(move || {
                Ok(vec![dominance_check(env, firm, vopts.grid, opts)?])
            }));
        }
    }
    if suite.includes(Suite::Welfare) {
        for &s in &vopts.sigmas {
            jobs.push(Box::new(move || {
                Ok(vec![welfare_ranking_check(env, lit::<T>(s), opts)?])
            }));
        }
    }
    if suite.includes(Suite::Dispersion) {
        jobs.push(Box::new(|| utility_shape_checks(env, opts)));
    }
    let mut out: Vec<OracleReport> = jobs
        .par_iter()
        .map(|job| job())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    out.sort_by(|a, b| a.check.cmp(&b.check));
    Ok(out)
}

/// Aggregate outcome of a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every check ran and passed.
    AllPass,
    /// A binding check failed.
    Failed,
    /// Nothing binding failed, but some checks were skipped or advisory failures occurred.
    Incomplete,
}

pub fn verdict(reports: &[OracleReport]) -> Verdict {
    if reports.iter().any(|r| r.status == Status::Fail && !r.advisory) {
        Verdict::Failed
    } else if reports.iter().all(|r| r.passed()) {
        Verdict::AllPass
    } else {
        Verdict::Incomplete
    }
}

#[cfg(test)]
mod tests;
