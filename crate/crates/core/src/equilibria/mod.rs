//! Solvers for the five contracting settings.

mod duopoly;
mod exclusive;
mod monopoly;
mod multiproduct;
mod schedule;
mod solution;
mod spot;

use serde::{Deserialize, Serialize};

pub use duopoly::{competitive_boundary_fee, solve_duopoly, solve_duopoly_with};
pub use exclusive::{exclusive_gap, solve_exclusive, solve_exclusive_with};
pub use monopoly::{solve_monopoly, solve_monopoly_with};
pub use multiproduct::{compute_vbar, solve_multiproduct, solve_multiproduct_with, vbar_details, VbarReport};
pub use schedule::TabulatedSchedule;
pub use solution::{
    default_points, gamma_grid, Contract, CoverageFlags, DuopolySolution, ExclusiveSolution, Inequality,
    MonopolySolution, MultiProductSolution, Setting, SettingSolution, SpotSolution,
};
pub use spot::{solve_spot, solve_spot_with, spot_gap};

use crate::error::{Error, Result};
use crate::market::{Environment, Firm};
use crate::scalar::{lit, Scalar};

pub(crate) const DEFAULT_GAMMA_POINTS: usize = 201;

/// Names of the recorded hypotheses.
pub mod hypotheses {
    pub const EXISTENCE: &str = "v0 >= max 1/g";
    pub const UNIQUENESS: &str = "v0 >= 3.5 max 1/g";
    pub const SPOT_COVERAGE: &str = "v0 >= 1/h(theta*)";
    pub const EXCLUSIVE_COVERAGE: &str = "v0 >= 1/g(gamma_dagger)";
    pub const EXCLUSIVE_INTERIOR: &str = "gamma_l < 0 < gamma_u";
    pub const MULTIPRODUCT_THRESHOLD: &str = "v0 >= vbar";
}

/// Knobs shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    /// Points in the reported type grid.
    pub gamma_points: usize,
    /// Refinement stops once schedule fees move by less than this.
    pub fee_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gamma_points: DEFAULT_GAMMA_POINTS,
            fee_tol: 1e-8,
        }
    }
}

impl SolveOptions {
    pub fn with_points(gamma_points: usize) -> Self {
        Self {
            gamma_points,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.gamma_points < 2 {
            return Err(Error::invalid("gamma_points must be at least 2"));
        }
        if !(self.fee_tol > 0.0) {
            return Err(Error::invalid("fee_tol must be positive"));
        }
        Ok(())
    }
}

/// Monopoly strike `G/g` (firm A) or `(1-G)/g` (firm B) at scaled type `γ`.
pub fn monopoly_strike<T: Scalar>(env: &Environment<T>, firm: Firm, gamma: T) -> T {
    let g = env.types();
    let dens = g.pdf(gamma);
    match firm {
        Firm::A => g.cdf(gamma) / dens,
        Firm::B => g.sf(gamma) / dens,
    }
}

/// Non-exclusive equilibrium strike `2 p_i^M(γ)`.
pub fn duopoly_strike<T: Scalar>(env: &Environment<T>, firm: Firm, gamma: T) -> T {
    monopoly_strike(env, firm, gamma) * lit(2.0)
}

/// Solves one setting with default options.
pub fn solve<T: Scalar>(env: &Environment<T>, setting: Setting) -> Result<SettingSolution<T>> {
    solve_with(env, setting, &SolveOptions::default())
}

pub fn solve_with<T: Scalar>(
    env: &Environment<T>,
    setting: Setting,
    opts: &SolveOptions,
) -> Result<SettingSolution<T>> {
    match setting {
        Setting::MonopolyA => solve_monopoly_with(env, Firm::A, opts),
        Setting::MonopolyB => solve_monopoly_with(env, Firm::B, opts),
        Setting::DuopolyNe => solve_duopoly_with(env, opts),
        Setting::Spot => solve_spot_with(env, opts),
        Setting::Exclusive => solve_exclusive_with(env, opts),
        Setting::MultiMonopoly => solve_multiproduct_with(env, opts),
    }
}
