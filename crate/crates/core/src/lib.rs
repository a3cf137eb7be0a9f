//! Parameter estimation for continuous parametric families from paired
//! samples and preference labels.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: linear algebra wrappers, LP, metric projection, optimizers,
//!   special functions and the seedable random source.
//! - [`models`]: Gaussian (known covariance), Laplace (known scale) and
//!   Rayleigh families with their closed forms.
//! - [`preferences`]: deterministic and stochastic labelling channels.
//! - [`geometry`]: the feasible polytope of parameters consistent with the labels.
//! - [`estimators`]: sample-only, preference-augmented and feasible-set estimators.
//! - [`analysis`]: Fisher-gap matrices, deviation CDFs and divergences.
//! - [`harness`]: seeded Monte Carlo experiments and result tables.

pub mod analysis;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod models;
pub mod numerics;
pub mod preferences;

pub use estimators::{EstimateError, EstimateRecord, EstimatorKind, SurrogateLoss};
pub use geometry::{Interval, Polytope};
pub use models::{FamilySpec, GaussianFamily, ModelFamily, SamplePair};
pub use numerics::{BoxBounds, HalfSpace, Matrix, RandomSource, Vector};
pub use preferences::{Channel, Dataset, Triplet};
