//! Shrinkage estimators of a multivariate normal mean under a normal prior
//! when the noise variance is estimated.
//!
//! The crate evaluates exact Bayes risks (closed form or chi-square
//! quadrature), checks them against closed-form bounds and minimaxity
//! conditions, and cross-validates everything with a seeded Monte Carlo
//! oracle. Numerical code is generic over [`scalar::Real`] (`f32`, `f64`);
//! closed forms in [`risk::closed_form`] also run over exact rationals.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chi2;
pub mod error;
pub mod estimators;
pub mod monte_carlo;
pub mod reports;
pub mod risk;
pub mod scalar;

pub use error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub type ProblemSpecF64 = estimators::ProblemSpec<f64>;
pub type ProblemSpecF32 = estimators::ProblemSpec<f32>;
pub type ObservationF64 = estimators::Observation<f64>;
pub type ObservationF32 = estimators::Observation<f32>;
pub type EstimatorKindF64 = estimators::EstimatorKind<f64>;
pub type EstimatorKindF32 = estimators::EstimatorKind<f32>;
pub type ChiSquareLawF64 = chi2::ChiSquareLaw<f64>;
pub type ChiSquareLawF32 = chi2::ChiSquareLaw<f32>;
pub type TolerancesF64 = chi2::Tolerances<f64>;
pub type RiskReportF64 = risk::RiskReport<f64>;
pub type RiskReportF32 = risk::RiskReport<f32>;
pub type McConfigF64 = monte_carlo::McConfig<f64>;
pub type McEstimateF64 = monte_carlo::McEstimate<f64>;
pub type SimulationDrawF64 = monte_carlo::SimulationDraw<f64>;
