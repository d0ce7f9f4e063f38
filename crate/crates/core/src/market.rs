//! Market primitives: the environment, valuations, and interim demands.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::quadrature::QuadOptions;
use crate::scalar::{count, lit, pos, Scalar};

/// Tolerance on the shock mean.
const SHOCK_MEAN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Firm {
    A,
    B,
}

impl Firm {
    pub fn other(self) -> Firm {
        match self {
            Firm::A => Firm::B,
            Firm::B => Firm::A,
        }
    }
}

impl fmt::Display for Firm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Firm::A => "A",
            Firm::B => "B",
        })
    }
}

/// Market primitives `(v0, G, F, σ)`.
///
/// Positions are `θ = σγ + ε`. All solvers work with the scaled type
/// `σγ`, whose law is cached at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentSpec<T>", into = "EnvironmentSpec<T>", bound = "T: Scalar")]
pub struct Environment<T: Scalar> {
    v0: T,
    type_dist: Density<T>,
    shock_dist: Density<T>,
    sigma: T,
    scaled_types: Density<T>,
    quad: QuadOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub struct EnvironmentSpec<T: Scalar> {
    pub v0: T,
    pub type_dist: Density<T>,
    pub shock_dist: Density<T>,
    #[serde(default = "one")]
    pub sigma: T,
}

fn one<T: Scalar>() -> T {
    T::one()
}

impl<T: Scalar> TryFrom<EnvironmentSpec<T>> for Environment<T> {
    type Error = Error;
    fn try_from(s: EnvironmentSpec<T>) -> Result<Self> {
        Environment::with_sigma(s.v0, s.type_dist, s.shock_dist, s.sigma)
    }
}

impl<T: Scalar> From<Environment<T>> for EnvironmentSpec<T> {
    fn from(e: Environment<T>) -> Self {
        EnvironmentSpec {
            v0: e.v0,
            type_dist: e.type_dist,
            shock_dist: e.shock_dist,
            sigma: e.sigma,
        }
    }
}

impl<T: Scalar> Environment<T> {
    pub fn new(v0: T, type_dist: Density<T>, shock_dist: Density<T>) -> Result<Self> {
        Self::with_sigma(v0, type_dist, shock_dist, T::one())
    }

    pub fn with_sigma(v0: T, type_dist: Density<T>, shock_dist: Density<T>, sigma: T) -> Result<Self> {
        if !v0.is_finite() {
            return Err(Error::invalid(format!("v0 must be finite, got {v0}")));
        }
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if !type_dist.is_bounded() {
            return Err(Error::invalid("type distribution must have bounded support"));
        }
        let mean = shock_dist.mean();
        if !(mean.abs() <= lit(SHOCK_MEAN_TOL)) {
            return Err(Error::invalid(format!(
                "shock distribution must have mean 0, got {mean}"
            )));
        }
        let scaled_types = type_dist.affine(T::zero(), sigma)?;
        Ok(Self {
            v0,
            type_dist,
            shock_dist,
            sigma,
            scaled_types,
            quad: QuadOptions::default(),
        })
    }

    /// The running example: `v0 = 7`, uniform types on `[-1, 1]`, standard normal shocks.
    pub fn running_example() -> Self {
        Self::new(
            lit(7.0),
            Density::uniform(-T::one(), T::one()).expect("valid"),
            Density::std_normal(),
        )
        .expect("valid running example")
    }

    pub fn with_quadrature(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    /// Same primitives with the type scale multiplied by `factor`.
    pub fn rescaled(&self, factor: T) -> Result<Self> {
        if !(factor.is_finite() && factor > T::zero()) {
            return Err(Error::invalid(format!("sigma must be positive, got {factor}")));
        }
        Ok(Self::with_sigma(
            self.v0,
            self.type_dist.clone(),
            self.shock_dist.clone(),
            self.sigma * factor,
        )?
        .with_quadrature(self.quad))
    }

    pub fn with_v0(&self, v0: T) -> Result<Self> {
        Ok(
            Self::with_sigma(v0, self.type_dist.clone(), self.shock_dist.clone(), self.sigma)?
                .with_quadrature(self.quad),
        )
    }

    pub fn v0(&self) -> T {
        self.v0
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn quad(&self) -> &QuadOptions {
        &self.quad
    }

    /// Unscaled type law `G`.
    pub fn primitive_types(&self) -> &Density<T> {
        &self.type_dist
    }

    /// Law of the scaled type `σγ`.
    pub fn types(&self) -> &Density<T> {
        &self.scaled_types
    }

    pub fn shock(&self) -> &Density<T> {
        &self.shock_dist
    }

    /// Support `[γ_l, γ̄]` of the scaled type.
    pub fn gamma_bounds(&self) -> (T, T) {
        self.scaled_types.support()
    }

    /// `max_γ 1/g(γ)` over the scaled type support.
    pub fn max_inv_g(&self) -> T {
        let (lo, hi) = self.gamma_bounds();
        let n = 2001;
        (0..n)
            .map(|i| lo + (hi - lo) * count(i) / count(n - 1))
            .map(|x| T::one() / self.scaled_types.pdf(x))
            .fold(T::zero(), T::max)
    }

    pub(crate) fn check_gamma(&self, gamma: T) -> Result<()> {
        let (lo, hi) = self.gamma_bounds();
        let slack = lit::<T>(1e-12) * (T::one() + lo.abs().max(hi.abs()));
        if gamma.is_nan() || gamma < lo - slack || gamma > hi + slack {
            return Err(Error::invalid(format!(
                "gamma = {gamma} outside the type support [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// `v_A(θ) = v0 - θ`, `v_B(θ) = v0 + θ`.
pub fn valuation<T: Scalar>(env: &Environment<T>, firm: Firm, theta: T) -> T {
    match firm {
        Firm::A => env.v0 - theta,
        Firm::B => env.v0 + theta,
    }
}

/// `Q_i^M(p | γ)`: probability that the valuation for `firm` reaches `p`.
pub fn monopoly_demand<T: Scalar>(env: &Environment<T>, firm: Firm, p: T, gamma: T) -> T {
    if p == T::infinity() {
        return T::zero();
    }
    match firm {
        Firm::B => env.shock_dist.sf(p - env.v0 - gamma),
        Firm::A => env.shock_dist.cdf(env.v0 - p - gamma),
    }
}

/// `Q_i(p_own, p_other | γ)` when both options are held; `+∞` is the null contract.
///
/// Indifferent consumers buy from B.
pub fn duopoly_demand<T: Scalar>(env: &Environment<T>, firm: Firm, p_own: T, p_other: T, gamma: T) -> T {
    let (pa, pb) = match firm {
        Firm::A => (p_own, p_other),
        Firm::B => (p_other, p_own),
    };
    match firm {
        Firm::B => {
            if pb == T::infinity() {
                return T::zero();
            }
            let cut = if pa == T::infinity() {
                pb - env.v0
            } else {
                ((pb - pa) / lit(2.0)).max(pb - env.v0)
            };
            env.shock_dist.sf(cut - gamma)
        }
        Firm::A => {
            if pa == T::infinity() {
                return T::zero();
            }
            let cut = if pb == T::infinity() {
                env.v0 - pa
            } else {
                ((pb - pa) / lit(2.0)).min(env.v0 - pa)
            };
            env.shock_dist.cdf(cut - gamma)
        }
    }
}

/// `E_{θ|γ}[max{0, v_A(θ) - p_A, v_B(θ) - p_B}]`.
///
/// The payoff is piecewise linear in the shock, so the expectation is
/// evaluated exactly piece by piece between the kinks.
pub fn expected_net_max<T: Scalar>(env: &Environment<T>, gamma: T, pa: T, pb: T) -> T {
    let v0 = env.v0;
    let mut kinks = Vec::with_capacity(3);
    if pb.is_finite() {
        kinks.push(pb - v0 - gamma);
    }
    if pa.is_finite() {
        kinks.push(v0 - pa - gamma);
    }
    if pa.is_finite() && pb.is_finite() {
        kinks.push((pb - pa) / lit(2.0) - gamma);
    }
    if kinks.is_empty() {
        return T::zero();
    }
    env.shock_dist.expect_piecewise_linear(&kinks, |e| {
        let theta = gamma + e;
        let a = if pa.is_finite() {
            v0 - theta - pa
        } else {
            T::neg_infinity()
        };
        let b = if pb.is_finite() {
            v0 + theta - pb
        } else {
            T::neg_infinity()
        };
        pos(a.max(b))
    })
}

/// `E_{θ|γ}[(v_i(θ) - p)_+]`: the gross value of a single option.
pub fn single_option_value<T: Scalar>(env: &Environment<T>, firm: Firm, p: T, gamma: T) -> T {
    if p == T::infinity() {
        return T::zero();
    }
    let f = &env.shock_dist;
    let v = match firm {
        // v_B - p = ε - (p - v0 - γ)
        Firm::B => f.option_value(p - env.v0 - gamma),
        // v_A - p = (v0 - p - γ) - ε
        Firm::A => f.put_value(env.v0 - p - gamma),
    };
    v.unwrap_or(T::nan())
}
