//! Spot pricing without contracts.

use super::hypotheses;
use super::solution::{gamma_grid, CoverageFlags, Inequality, SettingSolution, SpotSolution};
use super::SolveOptions;
use crate::densities::{assert_regularity, convolve, Density};
use crate::error::{Error, Result};
use crate::market::Environment;
use crate::roots::{bisect, bracket};
use crate::scalar::{lit, Scalar};

/// `Δ(θ) = θ - (1 - 2H(θ))/h(θ)` for the position law `H`.
pub fn spot_gap<T: Scalar>(h: &Density<T>, theta: T) -> T {
    let dens = h.pdf(theta);
    theta - (h.sf(theta) - h.cdf(theta)) / dens
}

pub fn solve_spot<T: Scalar>(env: &Environment<T>) -> Result<SettingSolution<T>> {
    solve_spot_with(env, &SolveOptions::default())
}

/// Bertrand–Hotelling prices against the law of positions `θ = σγ + ε`.
pub fn solve_spot_with<T: Scalar>(env: &Environment<T>, opts: &SolveOptions) -> Result<SettingSolution<T>> {
    opts.validate()?;
    let h = convolve(env.types(), env.shock())?;
    let (lo, hi) = env.gamma_bounds();
    let shock_scale = env.shock().scale();
    let limit = shock_scale * lit(20.0) + (hi - lo);
    let (hlo, hhi) = h.support();
    let gap = |t: T| {
        let d = spot_gap(&h, t);
        if d.is_nan() {
            // Outside the tabulation the density vanishes: sign of the tail.
            if t < lit(0.0) {
                T::neg_infinity()
            } else {
                T::infinity()
            }
        } else {
            d
        }
    };
    let start = (shock_scale + hi - lo).min(limit);
    let (a, b) = bracket(gap, -start, start, limit, "spot equilibrium position")?;
    let (a, b) = (a.max(hlo), b.min(hhi));
    let theta_star = bisect(gap, a, b, lit(1e-12), "spot equilibrium position")?;
    let (cdf, pdf) = (h.cdf(theta_star), h.pdf(theta_star));
    if !(pdf > T::zero()) {
        return Err(Error::numeric("spot", "position density vanishes at the root"));
    }
    let two: T = lit(2.0);
    let price_a = two * cdf / pdf;
    let price_b = two * h.sf(theta_star) / pdf;
    let v0 = env.v0();
    let coverage = Inequality::at_least(hypotheses::SPOT_COVERAGE, v0, T::one() / pdf);
    coverage.require(v0.to_f64().unwrap_or(f64::NAN))?;
    let regularity = assert_regularity(env.types(), env.shock());
    Ok(SettingSolution::Spot(SpotSolution {
        env: env.clone(),
        gamma_grid: gamma_grid(env, opts.gamma_points),
        theta_star,
        price_a,
        price_b,
        cdf_at_star: cdf,
        pdf_at_star: pdf,
        residual: spot_gap(&h, theta_star).abs(),
        coverage: CoverageFlags {
            inequalities: vec![coverage],
            uniqueness_claimed: regularity.all_pass(),
            regularity,
        },
    }))
}
