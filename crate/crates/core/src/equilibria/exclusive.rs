//! Exclusive contracting.

use super::hypotheses;
use super::solution::{gamma_grid, CoverageFlags, ExclusiveSolution, Inequality, SettingSolution};
use super::{monopoly_strike, SolveOptions, TabulatedSchedule};
use crate::densities::assert_regularity;
use crate::error::{Error, Result};
use crate::market::{monopoly_demand, single_option_value, Environment, Firm};
use crate::roots::bisect;
use crate::scalar::{lit, Scalar};

/// `Δ_i(γ)`: type `γ`'s surplus from firm `i`'s monopoly contract, net of
/// the revenue the rival would collect from it at its own monopoly strike.
fn side<T: Scalar>(env: &Environment<T>, firm: Firm, gamma: T) -> T {
    let own = monopoly_strike(env, firm, gamma);
    let rival = firm.other();
    let rival_strike = monopoly_strike(env, rival, gamma);
    single_option_value(env, firm, own, gamma) - own * monopoly_demand(env, rival, rival_strike, gamma)
}

/// `Δ(γ) = Δ_B(γ) - Δ_A(γ)`, strictly increasing; its root splits the market.
pub fn exclusive_gap<T: Scalar>(env: &Environment<T>, gamma: T) -> T {
    side(env, Firm::B, gamma) - side(env, Firm::A, gamma)
}

pub fn solve_exclusive<T: Scalar>(env: &Environment<T>) -> Result<SettingSolution<T>> {
    solve_exclusive_with(env, &SolveOptions::default())
}

/// Pareto-dominant exclusive equilibrium: types split at `γ†`, each side
/// facing its firm's monopoly menu shifted by the rival's forgone revenue.
///
/// When `Δ` keeps one sign on the support the split is placed at the
/// corresponding endpoint and `corner` is set.
pub fn solve_exclusive_with<T: Scalar>(env: &Environment<T>, opts: &SolveOptions) -> Result<SettingSolution<T>> {
    opts.validate()?;
    let (lo, hi) = env.gamma_bounds();
    let interior = Inequality {
        name: hypotheses::EXCLUSIVE_INTERIOR.to_string(),
        lhs: lo.to_f64().unwrap_or(f64::NAN),
        rhs: hi.to_f64().unwrap_or(f64::NAN),
        holds: lo < T::zero() && T::zero() < hi,
    };
    let (d_lo, d_hi) = (exclusive_gap(env, lo), exclusive_gap(env, hi));
    if d_lo.is_nan() || d_hi.is_nan() {
        return Err(Error::NoInteriorSplit(format!(
            "Δ is undefined at the support ends (Δ(γ_l) = {d_lo}, Δ(γ̄) = {d_hi})"
        )));
    }
    let (gamma_dagger, corner) = if d_lo >= T::zero() {
        (lo, true)
    } else if d_hi <= T::zero() {
        (hi, true)
    } else {
        let xtol = lit::<T>(1e-13) * (T::one() + (hi - lo));
        (
            bisect(|g| exclusive_gap(env, g), lo, hi, xtol, "exclusive split")?,
            false,
        )
    };
    let residual = exclusive_gap(env, gamma_dagger).abs();
    let p_dagger_a = monopoly_strike(env, Firm::A, gamma_dagger);
    let p_dagger_b = monopoly_strike(env, Firm::B, gamma_dagger);

    let v0 = env.v0();
    let coverage = Inequality::at_least(
        hypotheses::EXCLUSIVE_COVERAGE,
        v0,
        T::one() / env.types().pdf(gamma_dagger),
    );
    coverage.require(v0.to_f64().unwrap_or(f64::NAN))?;

    let grid = gamma_grid(env, opts.gamma_points);
    let tol = lit(opts.fee_tol);
    let below: Vec<T> = grid
        .iter()
        .copied()
        .filter(|&g| g < gamma_dagger)
        .chain(std::iter::once(gamma_dagger))
        .collect();
    let above: Vec<T> = std::iter::once(gamma_dagger)
        .chain(grid.iter().copied().filter(|&g| g > gamma_dagger))
        .collect();
    let build = |firm: Firm, nodes: &[T]| -> Result<Option<TabulatedSchedule<T>>> {
        if nodes.len() < 2 {
            return Ok(None);
        }
        let rival = firm.other();
        let (own_dagger, rival_dagger) = match firm {
            Firm::A => (p_dagger_a, p_dagger_b),
            Firm::B => (p_dagger_b, p_dagger_a),
        };
        let boundary = own_dagger * monopoly_demand(env, rival, rival_dagger, gamma_dagger);
        TabulatedSchedule::build(
            firm,
            nodes,
            |g| monopoly_strike(env, firm, g),
            |g| monopoly_demand(env, firm, monopoly_strike(env, firm, g), g),
            boundary,
            tol,
        )
        .map(Some)
    };
    let schedule_a = build(Firm::A, &below)?;
    let schedule_b = build(Firm::B, &above)?;

    let regularity = assert_regularity(env.types(), env.shock());
    Ok(SettingSolution::Exclusive(ExclusiveSolution {
        env: env.clone(),
        gamma_grid: grid,
        gamma_dagger,
        p_dagger_a,
        p_dagger_b,
        residual,
        corner,
        schedule_a,
        schedule_b,
        coverage: CoverageFlags {
            uniqueness_claimed: interior.holds && !corner && regularity.all_pass(),
            inequalities: vec![coverage, interior],
            regularity,
        },
    }))
}
