//! Multi-product monopoly selling one joint option on both products.

use serde::{Deserialize, Serialize};

use super::hypotheses;
use super::solution::{gamma_grid, CoverageFlags, Inequality, MultiProductSolution, SettingSolution};
use super::SolveOptions;
use crate::densities::{assert_regularity, symmetry_defect};
use crate::error::{Error, Result};
use crate::market::Environment;
use crate::roots::golden_min;
use crate::scalar::{count, lit, Scalar};

const SYMMETRY_TOL: f64 = 1e-10;
const SCORE_GRID: usize = 401;

/// Ingredients of the threshold `v̄ = C · max 1/g²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VbarReport<T: Scalar> {
    pub vbar: T,
    /// `C = inf_κ C(κ)`.
    pub c_star: T,
    pub kappa_star: T,
    /// Upper end `F(2γ_l)` of the κ range.
    pub kappa_max: T,
    pub max_inv_g_sq: T,
}

/// `C(κ) = max{2f(0)/κ, sup |f'/f|}` over `[F⁻¹(F(2γ_l) - κ), F⁻¹(F(2γ̄) + κ)]`.
fn c_of_kappa<T: Scalar>(env: &Environment<T>, kappa: T) -> T {
    let f = env.shock();
    let (lo, hi) = env.gamma_bounds();
    let two: T = lit(2.0);
    let left = f.quantile(f.cdf(two * lo) - kappa);
    let right = f.inverse_sf(f.sf(two * hi) - kappa);
    if !(left.is_finite() && right.is_finite()) {
        return T::infinity();
    }
    let mut sup = T::zero();
    for i in 0..SCORE_GRID {
        let x = left + (right - left) * count(i) / count(SCORE_GRID - 1);
        let s = f.score(x).abs();
        if s.is_nan() {
            return T::infinity();
        }
        sup = sup.max(s);
    }
    (two * f.pdf(T::zero()) / kappa).max(sup)
}

/// Minimises `C(κ)` by golden-section search over `(0, F(2γ_l))`.
pub fn vbar_details<T: Scalar>(env: &Environment<T>) -> Result<VbarReport<T>> {
    let f = env.shock();
    let (lo, _) = env.gamma_bounds();
    let kappa_max = f.cdf(lit::<T>(2.0) * lo);
    if !(kappa_max > T::zero()) {
        return Err(Error::UnsupportedAssumption(
            "F(2 gamma_l) = 0: the threshold construction needs a full-support shock".into(),
        ));
    }
    let a = kappa_max * lit(1e-9);
    let b = kappa_max * (T::one() - lit::<T>(1e-12));
    let (kappa_star, c_star) = golden_min(|k| c_of_kappa(env, k), a, b, lit(1e-9));
    if !c_star.is_finite() {
        return Err(Error::numeric("vbar", "C(kappa) is infinite on the whole range"));
    }
    let m = env.max_inv_g();
    let max_inv_g_sq = m * m;
    Ok(VbarReport {
        vbar: c_star * max_inv_g_sq,
        c_star,
        kappa_star,
        kappa_max,
        max_inv_g_sq,
    })
}

/// Valuation threshold above which the joint monopolist's contract is the
/// welfare extreme among the settings.
pub fn compute_vbar<T: Scalar>(env: &Environment<T>) -> Result<T> {
    vbar_details(env).map(|r| r.vbar)
}

pub fn solve_multiproduct<T: Scalar>(env: &Environment<T>) -> Result<SettingSolution<T>> {
    solve_multiproduct_with(env, &SolveOptions::default())
}

/// Joint contract priced at type 0's value `E_{θ|0}[max{v_A, v_B}] = v0 + E|ε|`.
pub fn solve_multiproduct_with<T: Scalar>(env: &Environment<T>, opts: &SolveOptions) -> Result<SettingSolution<T>> {
    opts.validate()?;
    let defect = symmetry_defect(env.types(), T::zero());
    if !(defect <= lit(SYMMETRY_TOL)) {
        return Err(Error::UnsupportedAssumption(format!(
            "the joint monopoly needs a type density symmetric about 0 (defect {defect})"
        )));
    }
    let v0 = env.v0();
    let fee = v0 + env.shock().abs_moment();
    let vbar = compute_vbar(env)?;
    let threshold = Inequality::at_least(hypotheses::MULTIPRODUCT_THRESHOLD, v0, vbar);
    let regularity = assert_regularity(env.types(), env.shock());
    Ok(SettingSolution::MultiMonopoly(MultiProductSolution {
        env: env.clone(),
        gamma_grid: gamma_grid(env, opts.gamma_points),
        fee,
        vbar,
        coverage: CoverageFlags {
            uniqueness_claimed: threshold.holds && regularity.all_pass(),
            inequalities: vec![threshold],
            regularity,
        },
    }))
}
