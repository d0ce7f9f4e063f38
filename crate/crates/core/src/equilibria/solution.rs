//! Equilibrium objects shared by the five settings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::schedule::TabulatedSchedule;
use super::{monopoly_strike, DEFAULT_GAMMA_POINTS};
use crate::densities::RegularityReport;
use crate::error::{Error, Result};
use crate::market::{valuation, Environment, Firm};
use crate::scalar::{lit, Scalar};

/// The contracting settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Setting {
    MonopolyA,
    MonopolyB,
    DuopolyNe,
    Spot,
    Exclusive,
    MultiMonopoly,
}

impl Setting {
    pub const ALL: [Setting; 6] = [
        Setting::MonopolyA,
        Setting::MonopolyB,
        Setting::DuopolyNe,
        Setting::Spot,
        Setting::Exclusive,
        Setting::MultiMonopoly,
    ];

    /// Short name used on the command line and in file names.
    pub fn slug(self) -> &'static str {
        match self {
            Setting::MonopolyA => "monopoly-a",
            Setting::MonopolyB => "monopoly-b",
            Setting::DuopolyNe => "duopoly",
            Setting::Spot => "spot",
            Setting::Exclusive => "exclusive",
            Setting::MultiMonopoly => "multiproduct",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Setting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "monopoly-a" => Setting::MonopolyA,
            "monopoly-b" | "monopoly" => Setting::MonopolyB,
            "duopoly" | "duopoly-ne" | "ne" | "non-exclusive" => Setting::DuopolyNe,
            "spot" | "sp" => Setting::Spot,
            "exclusive" | "e" => Setting::Exclusive,
            "multiproduct" | "multi-monopoly" | "mm" | "multi-product" => Setting::MultiMonopoly,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown setting '{s}' (expected one of monopoly-a, monopoly-b, duopoly, spot, exclusive, multiproduct)"
                )))
            }
        })
    }
}

/// A `(strike, fee)` pair; an infinite strike is the null contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Contract<T: Scalar> {
    #[serde(serialize_with = "inf_as_null", deserialize_with = "null_as_inf")]
    pub strike: T,
    pub fee: T,
}

impl<T: Scalar> Contract<T> {
    pub fn null() -> Self {
        Self {
            strike: T::infinity(),
            fee: T::zero(),
        }
    }

    pub fn is_null(&self) -> bool {
        self.strike == T::infinity()
    }
}

fn inf_as_null<T: Scalar, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_none()
    } else {
        s.serialize_some(v)
    }
}

fn null_as_inf<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> std::result::Result<T, D::Error> {
    Ok(Option::<T>::deserialize(d)?.unwrap_or(T::infinity()))
}

/// One `lhs >= rhs` hypothesis of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    /// `lhs >= rhs` up to a relative 1e-12.
    pub fn at_least<T: Scalar>(name: impl Into<String>, lhs: T, rhs: T) -> Self {
        let slack = lit::<T>(1e-12) * (T::one() + rhs.abs());
        Self {
            name: name.into(),
            lhs: lhs.to_f64().unwrap_or(f64::NAN),
            rhs: rhs.to_f64().unwrap_or(f64::NAN),
            holds: lhs >= rhs - slack,
        }
    }

    pub(crate) fn require(&self, v0: f64) -> Result<()> {
        if self.holds {
            Ok(())
        } else {
            Err(Error::Coverage {
                inequality: format!("{} = {}", self.name, self.rhs),
                v0,
            })
        }
    }
}

/// Which of the model's hypotheses hold for a solved environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageFlags {
    pub inequalities: Vec<Inequality>,
    /// Regularity and thresholds all hold for the uniqueness statement.
    pub uniqueness_claimed: bool,
    pub regularity: RegularityReport,
}

impl CoverageFlags {
    pub fn get(&self, name: &str) -> Option<&Inequality> {
        self.inequalities.iter().find(|i| i.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MonopolySolution<T: Scalar> {
    pub env: Environment<T>,
    pub firm: Firm,
    pub gamma_grid: Vec<T>,
    pub schedule: TabulatedSchedule<T>,
    pub coverage: CoverageFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DuopolySolution<T: Scalar> {
    pub env: Environment<T>,
    pub gamma_grid: Vec<T>,
    pub schedule_a: TabulatedSchedule<T>,
    pub schedule_b: TabulatedSchedule<T>,
    /// `p̄_A = 2/g(γ̄)`.
    pub p_bar_a: T,
    /// `p̄_B = 2/g(γ_l)`.
    pub p_bar_b: T,
    pub coverage: CoverageFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SpotSolution<T: Scalar> {
    pub env: Environment<T>,
    pub gamma_grid: Vec<T>,
    pub theta_star: T,
    pub price_a: T,
    pub price_b: T,
    /// `H(θ*)` and `h(θ*)` of the position law.
    pub cdf_at_star: T,
    pub pdf_at_star: T,
    pub residual: T,
    pub coverage: CoverageFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ExclusiveSolution<T: Scalar> {
    pub env: Environment<T>,
    pub gamma_grid: Vec<T>,
    pub gamma_dagger: T,
    pub p_dagger_a: T,
    pub p_dagger_b: T,
    pub residual: T,
    /// The split sits at a support endpoint rather than in the interior.
    pub corner: bool,
    pub schedule_a: Option<TabulatedSchedule<T>>,
    pub schedule_b: Option<TabulatedSchedule<T>>,
    pub coverage: CoverageFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MultiProductSolution<T: Scalar> {
    pub env: Environment<T>,
    pub gamma_grid: Vec<T>,
    pub fee: T,
    pub vbar: T,
    pub coverage: CoverageFlags,
}

/// The equilibrium of one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "SCREAMING_SNAKE_CASE", bound = "T: Scalar")]
pub enum SettingSolution<T: Scalar> {
    MonopolyA(MonopolySolution<T>),
    MonopolyB(MonopolySolution<T>),
    DuopolyNe(DuopolySolution<T>),
    Spot(SpotSolution<T>),
    Exclusive(ExclusiveSolution<T>),
    MultiMonopoly(MultiProductSolution<T>),
}

impl<T: Scalar> SettingSolution<T> {
    pub fn setting(&self) -> Setting {
        match self {
            SettingSolution::MonopolyA(_) => Setting::MonopolyA,
            SettingSolution::MonopolyB(_) => Setting::MonopolyB,
            SettingSolution::DuopolyNe(_) => Setting::DuopolyNe,
            SettingSolution::Spot(_) => Setting::Spot,
            SettingSolution::Exclusive(_) => Setting::Exclusive,
            SettingSolution::MultiMonopoly(_) => Setting::MultiMonopoly,
        }
    }

    pub fn env(&self) -> &Environment<T> {
        match self {
            SettingSolution::MonopolyA(s) | SettingSolution::MonopolyB(s) => &s.env,
            SettingSolution::DuopolyNe(s) => &s.env,
            SettingSolution::Spot(s) => &s.env,
            SettingSolution::Exclusive(s) => &s.env,
            SettingSolution::MultiMonopoly(s) => &s.env,
        }
    }

    pub fn gamma_grid(&self) -> &[T] {
        match self {
            SettingSolution::MonopolyA(s) | SettingSolution::MonopolyB(s) => &s.gamma_grid,
            SettingSolution::DuopolyNe(s) => &s.gamma_grid,
            SettingSolution::Spot(s) => &s.gamma_grid,
            SettingSolution::Exclusive(s) => &s.gamma_grid,
            SettingSolution::MultiMonopoly(s) => &s.gamma_grid,
        }
    }

    pub fn coverage(&self) -> &CoverageFlags {
        match self {
            SettingSolution::MonopolyA(s) | SettingSolution::MonopolyB(s) => &s.coverage,
            SettingSolution::DuopolyNe(s) => &s.coverage,
            SettingSolution::Spot(s) => &s.coverage,
            SettingSolution::Exclusive(s) => &s.coverage,
            SettingSolution::MultiMonopoly(s) => &s.coverage,
        }
    }

    pub fn schedule(&self, firm: Firm) -> Option<&TabulatedSchedule<T>> {
        match (self, firm) {
            (SettingSolution::MonopolyA(s) | SettingSolution::MonopolyB(s), f) if s.firm == f => Some(&s.schedule),
            (SettingSolution::DuopolyNe(s), Firm::A) => Some(&s.schedule_a),
            (SettingSolution::DuopolyNe(s), Firm::B) => Some(&s.schedule_b),
            (SettingSolution::Exclusive(s), Firm::A) => s.schedule_a.as_ref(),
            (SettingSolution::Exclusive(s), Firm::B) => s.schedule_b.as_ref(),
            _ => None,
        }
    }

    pub fn theta_star(&self) -> Option<T> {
        match self {
            SettingSolution::Spot(s) => Some(s.theta_star),
            _ => None,
        }
    }

    pub fn gamma_dagger(&self) -> Option<T> {
        match self {
            SettingSolution::Exclusive(s) => Some(s.gamma_dagger),
            _ => None,
        }
    }

    pub fn mm_fee(&self) -> Option<T> {
        match self {
            SettingSolution::MultiMonopoly(s) => Some(s.fee),
            _ => None,
        }
    }

    pub fn spot_prices(&self) -> Option<(T, T)> {
        match self {
            SettingSolution::Spot(s) => Some((s.price_a, s.price_b)),
            _ => None,
        }
    }

    /// Strike selected from `firm` by type `γ`; `+∞` when no contract is held.
    pub fn strike(&self, firm: Firm, gamma: T) -> T {
        let env = self.env();
        match self {
            SettingSolution::MonopolyA(s) | SettingSolution::MonopolyB(s) => {
                if s.firm == firm {
                    monopoly_strike(env, firm, gamma)
                } else {
                    T::infinity()
                }
            }
            SettingSolution::DuopolyNe(_) => monopoly_strike(env, firm, gamma) * lit(2.0),
            SettingSolution::Spot(s) => match firm {
                Firm::A => s.price_a,
                Firm::B => s.price_b,
            },
            SettingSolution::Exclusive(s) => {
                let chooses_b = gamma >= s.gamma_dagger;
                if chooses_b == (firm == Firm::B) {
                    monopoly_strike(env, firm, gamma)
                } else {
                    T::infinity()
                }
            }
            SettingSolution::MultiMonopoly(_) => T::zero(),
        }
    }

    /// Contract held with `firm` by type `γ`.
    ///
    /// Spot prices appear as fee-free contracts; the joint contract of the
    /// multi-product monopolist is reported under firm A.
    pub fn contract(&self, firm: Firm, gamma: T) -> Result<Contract<T>> {
        self.env().check_gamma(gamma)?;
        let strike = self.strike(firm, gamma);
        if strike == T::infinity() {
            return Ok(Contract::null());
        }
        let fee = match self {
            SettingSolution::Spot(_) => T::zero(),
            SettingSolution::MultiMonopoly(s) => {
                if firm == Firm::A {
                    s.fee
                } else {
                    T::zero()
                }
            }
            _ => match self.schedule(firm) {
                Some(sched) => sched.fee(strike)?,
                None => T::zero(),
            },
        };
        Ok(Contract { strike, fee })
    }

    /// Product bought in the second period by type `γ` at position `θ`.
    pub fn allocation(&self, gamma: T, theta: T) -> Option<Firm> {
        let env = self.env();
        match self {
            SettingSolution::MonopolyA(s) | SettingSolution::MonopolyB(s) => {
                let p = monopoly_strike(env, s.firm, gamma);
                (valuation(env, s.firm, theta) >= p).then_some(s.firm)
            }
            SettingSolution::DuopolyNe(_) => {
                let (pa, pb) = (self.strike(Firm::A, gamma), self.strike(Firm::B, gamma));
                Some(if theta >= (pb - pa) / lit(2.0) {
                    Firm::B
                } else {
                    Firm::A
                })
            }
            SettingSolution::Spot(s) => {
                let ua = valuation(env, Firm::A, theta) - s.price_a;
                let ub = valuation(env, Firm::B, theta) - s.price_b;
                if ub >= ua && ub >= T::zero() {
                    Some(Firm::B)
                } else if ua > ub && ua >= T::zero() {
                    Some(Firm::A)
                } else {
                    None
                }
            }
            SettingSolution::Exclusive(s) => {
                let firm = if gamma >= s.gamma_dagger { Firm::B } else { Firm::A };
                let p = monopoly_strike(env, firm, gamma);
                (valuation(env, firm, theta) >= p).then_some(firm)
            }
            SettingSolution::MultiMonopoly(_) => {
                let firm = if theta >= T::zero() { Firm::B } else { Firm::A };
                (valuation(env, firm, theta) >= T::zero()).then_some(firm)
            }
        }
    }

    /// Positions `θ` at which [`allocation`](Self::allocation) can switch for type `γ`.
    pub fn allocation_kinks(&self, gamma: T) -> Vec<T> {
        let v0 = self.env().v0();
        let (pa, pb) = (self.strike(Firm::A, gamma), self.strike(Firm::B, gamma));
        let mut k = Vec::new();
        if pa.is_finite() {
            k.push(v0 - pa);
        }
        if pb.is_finite() {
            k.push(pb - v0);
        }
        if pa.is_finite() && pb.is_finite() {
            k.push((pb - pa) / lit(2.0));
        }
        k
    }
}

/// Evenly spaced type grid over the scaled support.
pub fn gamma_grid<T: Scalar>(env: &Environment<T>, points: usize) -> Vec<T> {
    let (lo, hi) = env.gamma_bounds();
    crate::scalar::linspace(lo, hi, points.max(2))
}

/// Grid size used when none is requested.
pub fn default_points() -> usize {
    DEFAULT_GAMMA_POINTS
}
