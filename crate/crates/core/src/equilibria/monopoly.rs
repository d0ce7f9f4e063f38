//! Single-firm benchmark.

use super::solution::{gamma_grid, CoverageFlags, MonopolySolution, SettingSolution};
use super::{monopoly_strike, SolveOptions, TabulatedSchedule};
use crate::densities::assert_regularity;
use crate::error::{Error, Result};
use crate::market::{monopoly_demand, single_option_value, Environment, Firm};
use crate::scalar::{lit, Scalar};

pub fn solve_monopoly<T: Scalar>(env: &Environment<T>, firm: Firm) -> Result<SettingSolution<T>> {
    solve_monopoly_with(env, firm, &SolveOptions::default())
}

/// Optimal screening menu of a lone firm: strikes at the hazard ratio, fees
/// from the envelope condition anchored at the type choosing `p̄ = 1/g`.
pub fn solve_monopoly_with<T: Scalar>(
    env: &Environment<T>,
    firm: Firm,
    opts: &SolveOptions,
) -> Result<SettingSolution<T>> {
    opts.validate()?;
    let regularity = assert_regularity(env.types(), env.shock());
    let needed = match firm {
        Firm::A => crate::densities::regularity_names::LOWER_HAZARD,
        Firm::B => crate::densities::regularity_names::UPPER_HAZARD,
    };
    if let Some(check) = regularity.check(needed).filter(|c| !c.passed) {
        return Err(Error::Regularity(format!(
            "{needed} fails first at gamma = {}",
            check.first_violation.unwrap_or(f64::NAN)
        )));
    }
    let grid = gamma_grid(env, opts.gamma_points);
    let (lo, hi) = env.gamma_bounds();
    let anchor = match firm {
        Firm::A => hi,
        Firm::B => lo,
    };
    let p_bar = monopoly_strike(env, firm, anchor);
    let boundary = single_option_value(env, firm, p_bar, anchor);
    let schedule = TabulatedSchedule::build(
        firm,
        &grid,
        |g| monopoly_strike(env, firm, g),
        |g| monopoly_demand(env, firm, monopoly_strike(env, firm, g), g),
        boundary,
        lit(opts.fee_tol),
    )?;
    let uniqueness_claimed = regularity.all_pass();
    let sol = MonopolySolution {
        env: env.clone(),
        firm,
        gamma_grid: grid,
        schedule,
        coverage: CoverageFlags {
            inequalities: Vec::new(),
            uniqueness_claimed,
            regularity,
        },
    };
    Ok(match firm {
        Firm::A => SettingSolution::MonopolyA(sol),
        Firm::B => SettingSolution::MonopolyB(sol),
    })
}
