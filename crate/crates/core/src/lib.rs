//! Equilibrium solver and verifier for competitive sequential screening on
//! the Hotelling line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod equilibria;
pub mod error;
pub mod market;
pub mod oracle;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod special;
pub mod welfare;

pub use densities::{assert_regularity, convolve, Density, DensitySpec, RegularityReport};
pub use equilibria::{solve, solve_with, Contract, Setting, SettingSolution, SolveOptions, TabulatedSchedule};
pub use error::{Error, Result};
pub use market::{Environment, Firm};
pub use oracle::{verify, OracleReport, Suite, VerifyOptions};
pub use quadrature::{integrate, QuadOptions, QuadResult};
pub use scalar::Scalar;
pub use welfare::{
    dispersion_compare, interim_utility, limit_quantities, scale, surplus, utility_curve, Dispersion, LimitQuantities,
    SurplusReport, UtilityCurve,
};

pub type Density64 = Density<f64>;
pub type Density32 = Density<f32>;
pub type Environment64 = Environment<f64>;
pub type Environment32 = Environment<f32>;
pub type SettingSolution64 = SettingSolution<f64>;
pub type SettingSolution32 = SettingSolution<f32>;
pub type TabulatedSchedule64 = TabulatedSchedule<f64>;
pub type Contract64 = Contract<f64>;
pub type SurplusReport64 = SurplusReport<f64>;
pub type UtilityCurve64 = UtilityCurve<f64>;
pub type LimitQuantities64 = LimitQuantities<f64>;
