//! Non-exclusive duopoly.

use super::hypotheses;
use super::solution::{gamma_grid, CoverageFlags, DuopolySolution, Inequality, SettingSolution};
use super::{duopoly_strike, SolveOptions, TabulatedSchedule};
use crate::densities::assert_regularity;
use crate::error::Result;
use crate::market::{duopoly_demand, Environment, Firm};
use crate::scalar::{lit, pos, Scalar};

/// `E_{θ|γ}[(v_i - p̄ - v_{-i}(θ)_+)_+]`: what the extreme type would pay for
/// firm `i`'s top strike on top of a free option on the rival product.
pub fn competitive_boundary_fee<T: Scalar>(env: &Environment<T>, firm: Firm, p_bar: T, gamma: T) -> T {
    let v0 = env.v0();
    let half: T = lit(0.5);
    // Kinks in θ, written for firm B and mirrored for A.
    let sign = match firm {
        Firm::B => T::one(),
        Firm::A => -T::one(),
    };
    let kinks: Vec<T> = [v0, p_bar * half, p_bar - v0]
        .iter()
        .map(|&k| sign * k - gamma)
        .collect();
    env.shock().expect_piecewise_linear(&kinks, |e| {
        let theta = gamma + e;
        let (own, rival) = match firm {
            Firm::B => (v0 + theta, v0 - theta),
            Firm::A => (v0 - theta, v0 + theta),
        };
        pos(own - p_bar - pos(rival))
    })
}

pub fn solve_duopoly<T: Scalar>(env: &Environment<T>) -> Result<SettingSolution<T>> {
    solve_duopoly_with(env, &SolveOptions::default())
}

/// Equilibrium of non-exclusive competition in option contracts.
///
/// Strikes double the monopoly hazard ratios; each schedule integrates the
/// duopoly demand of the type choosing each strike from `p̄_i` down.
pub fn solve_duopoly_with<T: Scalar>(env: &Environment<T>, opts: &SolveOptions) -> Result<SettingSolution<T>> {
    opts.validate()?;
    let v0 = env.v0();
    let max_inv_g = env.max_inv_g();
    let existence = Inequality::at_least(hypotheses::EXISTENCE, v0, max_inv_g);
    existence.require(v0.to_f64().unwrap_or(f64::NAN))?;
    let uniqueness = Inequality::at_least(hypotheses::UNIQUENESS, v0, max_inv_g * lit(3.5));
    let regularity = assert_regularity(env.types(), env.shock());

    let grid = gamma_grid(env, opts.gamma_points);
    let (lo, hi) = env.gamma_bounds();
    let tol = lit(opts.fee_tol);
    let p_bar_a = duopoly_strike(env, Firm::A, hi);
    let p_bar_b = duopoly_strike(env, Firm::B, lo);

    let demand = |firm: Firm, g: T| {
        let own = duopoly_strike(env, firm, g);
        let rival = duopoly_strike(env, firm.other(), g);
        duopoly_demand(env, firm, own, rival, g)
    };
    let schedule_a = TabulatedSchedule::build(
        Firm::A,
        &grid,
        |g| duopoly_strike(env, Firm::A, g),
        |g| demand(Firm::A, g),
        competitive_boundary_fee(env, Firm::A, p_bar_a, hi),
        tol,
    )?;
    let schedule_b = TabulatedSchedule::build(
        Firm::B,
        &grid,
        |g| duopoly_strike(env, Firm::B, g),
        |g| demand(Firm::B, g),
        competitive_boundary_fee(env, Firm::B, p_bar_b, lo),
        tol,
    )?;

    let uniqueness_claimed = uniqueness.holds && regularity.all_pass();
    Ok(SettingSolution::DuopolyNe(DuopolySolution {
        env: env.clone(),
        gamma_grid: grid,
        schedule_a,
        schedule_b,
        p_bar_a,
        p_bar_b,
        coverage: CoverageFlags {
            inequalities: vec![existence, uniqueness],
            uniqueness_claimed,
            regularity,
        },
    }))
}
