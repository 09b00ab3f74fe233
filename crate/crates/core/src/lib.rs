//! Internal-time operators and Λ transformations on finite cascade windows.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the bottom of this file fix it to `f64`, the working precision.

// `!(x <= y)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod dual;
pub mod error;
pub mod hilbert;
pub mod lambda;
pub mod markov;
pub mod rigging;
pub mod scalar;

pub use cascade::{grid_to_walsh, walsh_to_grid, AgeWindow, BasisLabel, BlockVector, GridDensity, SystemKind};
pub use dual::{antitranspose, build_web, riesz_map, verify_theorem};
pub use error::{Error, Result};
pub use hilbert::{apply_diag_function, fractional_power, inner, BasisId, HOperator, HVector};
pub use lambda::{check_admissible, AdmissibilityCertificate, LambdaProfile, NormalizationSample};
pub use markov::{asymmetry_probe, lyapunov_trace, markov_step, positivity_probe};
pub use num_rational::Rational64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use rigging::{build_tower, classify, isometry_check, kothe_nuclearity, norm_n, TowerType};
pub use scalar::Scalar;

pub type Vector = HVector<f64>;
pub type Operator = HOperator<f64>;
pub type CascadeSystem = cascade::CascadeSystem<f64>;
pub type LambdaOperator = lambda::LambdaOperator<f64>;
pub type Profile = LambdaProfile<f64>;
pub type MarkovEvolution = markov::MarkovEvolution<f64>;
pub type PositiveDiagonal = rigging::PositiveDiagonal<f64>;
pub type NormTower = rigging::NormTower<f64>;
pub type SingularSpectrum = rigging::SingularSpectrum<f64>;
pub type OperatorWeb = dual::OperatorWeb<f64>;
