//! All estimators behind one interface: an [`EstimationInput`] (family, labelled triplets,
//! parameter box, optional true parameter) and an [`EstimatorKind`].

mod constrained;
pub mod objective;
mod penalized;

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{build_polytope, GeometryError, Polytope};
use crate::models::{ModelError, ModelFamily};
use crate::numerics::{BoxBounds, NumericsError, RandomSource, Vector};
use crate::preferences::{Channel, Triplet};

pub use constrained::{wc_directions, CONTAINMENT_TOL, TRG_MAX_ATTEMPTS};
pub use objective::{PenalizedObjective, SurrogateLoss};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("no triplets")]
    EmptyData,
    #[error("{kind} needs a one-dimensional family, got dimension {dim}")]
    RequiresScalar { kind: String, dim: usize },
    #[error("{0} needs the true parameter")]
    MissingTruth(String),
    #[error("{kind} is not available for the {family} family")]
    Unsupported { kind: String, family: String },
    #[error("the constraint set is empty; this estimator needs separable (deterministic) labels")]
    InfeasibleConstraints,
    #[error("solver failed: {message} after {iterations} iterations (residual {residual:e})")]
    SolverFailure {
        message: String,
        iterations: usize,
        residual: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(NumericsError),
}

impl From<GeometryError> for EstimateError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Infeasible => EstimateError::InfeasibleConstraints,
            GeometryError::EmptyData => EstimateError::EmptyData,
            GeometryError::Model(m) => EstimateError::Model(m),
            GeometryError::Numerics(n) => n.into(),
            GeometryError::Dimension { expected, found } => {
                EstimateError::Model(ModelError::Dimension { expected, found })
            }
        }
    }
}

impl From<NumericsError> for EstimateError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::Infeasible => EstimateError::InfeasibleConstraints,
            NumericsError::MaxIterExceeded {
                iterations,
                residual,
                ..
            } => EstimateError::SolverFailure {
                message: "iteration limit".into(),
                iterations,
                residual,
            },
            NumericsError::LineSearchFailed { residual, .. } => EstimateError::SolverFailure {
                message: "line search failed".into(),
                iterations: 0,
                residual,
            },
            other => EstimateError::Numerics(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    So,
    Sp,
    Lle,
    Dp,
    Any,
    Wc,
    Ru,
    Ce,
    Cce,
    TrG,
    TrMle,
    Surrogate {
        loss: SurrogateLoss,
        lambda: f64,
        beta: f64,
    },
}

impl EstimatorKind {
    /// Channel whose labels feed this estimator. SO ignores labels and is paired with the
    /// deterministic stream.
    pub fn channel(&self) -> Channel {
        match self {
            EstimatorKind::Sp => Channel::Stochastic,
            _ => Channel::Deterministic,
        }
    }

    /// Estimators whose output must lie in the feasible set.
    pub fn is_constrained(&self) -> bool {
        matches!(
            self,
            EstimatorKind::Dp
                | EstimatorKind::Any
                | EstimatorKind::Wc
                | EstimatorKind::Ru
                | EstimatorKind::Ce
                | EstimatorKind::Cce
                | EstimatorKind::TrG
                | EstimatorKind::TrMle
        )
    }

    pub fn requires_scalar(&self) -> bool {
        matches!(
            self,
            EstimatorKind::Ru | EstimatorKind::Ce | EstimatorKind::TrG | EstimatorKind::TrMle
        )
    }

    pub fn needs_truth(&self) -> bool {
        matches!(self, EstimatorKind::Wc)
    }

    pub fn uses_rng(&self) -> bool {
        matches!(self, EstimatorKind::Ru | EstimatorKind::TrG | EstimatorKind::Wc)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EstimatorKind::So => "so",
            EstimatorKind::Sp => "sp",
            EstimatorKind::Lle => "lle",
            EstimatorKind::Dp => "dp",
            EstimatorKind::Any => "any",
            EstimatorKind::Wc => "wc",
            EstimatorKind::Ru => "ru",
            EstimatorKind::Ce => "ce",
            EstimatorKind::Cce => "cce",
            EstimatorKind::TrG => "trg",
            EstimatorKind::TrMle => "trmle",
            EstimatorKind::Surrogate { loss, lambda, beta } => {
                return write!(f, "surrogate:{loss}:{lambda}:{beta}");
            }
        };
        f.write_str(s)
    }
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "so" => EstimatorKind::So,
            "sp" => EstimatorKind::Sp,
            "lle" => EstimatorKind::Lle,
            "dp" => EstimatorKind::Dp,
            "any" => EstimatorKind::Any,
            "wc" => EstimatorKind::Wc,
            "ru" => EstimatorKind::Ru,
            "ce" => EstimatorKind::Ce,
            "cce" => EstimatorKind::Cce,
            "trg" => EstimatorKind::TrG,
            "trmle" => EstimatorKind::TrMle,
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                if parts.len() != 4 || parts[0] != "surrogate" {
                    return Err(format!(
                        "unknown estimator {s:?} (expected so, sp, lle, dp, any, wc, ru, ce, cce, \
                         trg, trmle or surrogate:<loss>:<lambda>:<beta>)"
                    ));
                }
                let loss: SurrogateLoss = parts[1].parse()?;
                let lambda: f64 = parts[2]
                    .parse()
                    .map_err(|_| format!("bad lambda in {s:?}"))?;
                let beta: f64 = parts[3].parse().map_err(|_| format!("bad beta in {s:?}"))?;
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(format!("lambda must be finite and >= 0 in {s:?}"));
                }
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(format!("beta must be finite and > 0 in {s:?}"));
                }
                EstimatorKind::Surrogate { loss, lambda, beta }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub kind: EstimatorKind,
    pub theta: Vector,
    /// Family-norm distance to the true parameter, filled in by the caller.
    pub error: Option<f64>,
    /// Solver iterations, projection sweeps or LP solves, depending on the estimator.
    pub iterations: usize,
    /// Membership in the feasible set at [`CONTAINMENT_TOL`]; `None` for unconstrained kinds.
    pub feasible: Option<bool>,
}

impl EstimateRecord {
    fn new(kind: EstimatorKind, theta: Vector, iterations: usize) -> Self {
        Self {
            kind,
            theta,
            error: None,
            iterations,
            feasible: None,
        }
    }
}

/// Shared inputs for all estimators on one dataset; the feasible set and the sample-only
/// MLE are computed once on first use.
pub struct EstimationInput<'a> {
    pub family: &'a ModelFamily,
    pub triplets: &'a [Triplet],
    pub bounds: &'a BoxBounds,
    pub theta_star: Option<&'a Vector>,
    polytope: OnceCell<Result<Polytope, EstimateError>>,
    so: OnceCell<Result<Vector, EstimateError>>,
}

impl<'a> EstimationInput<'a> {
    pub fn new(family: &'a ModelFamily, triplets: &'a [Triplet], bounds: &'a BoxBounds) -> Self {
        Self {
            family,
            triplets,
            bounds,
            theta_star: None,
            polytope: OnceCell::new(),
            so: OnceCell::new(),
        }
    }

    pub fn with_truth(mut self, theta_star: &'a Vector) -> Self {
        self.theta_star = Some(theta_star);
        self
    }

    pub fn n(&self) -> usize {
        self.triplets.len()
    }

    pub fn polytope(&self) -> Result<&Polytope, EstimateError> {
        self.polytope
            .get_or_init(|| Ok(build_polytope(self.family, self.triplets, self.bounds)?))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn so(&self) -> Result<&Vector, EstimateError> {
        self.so
            .get_or_init(|| {
                if self.triplets.is_empty() {
                    return Err(EstimateError::EmptyData);
                }
                Ok(self.family.so_mle(self.triplets.iter().map(|t| &t.pair))?)
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// Runs `kind` on `input`. `rng` is only drawn from by RU, TrG and (for d > 6) WC.
pub fn estimate(
    kind: EstimatorKind,
    input: &EstimationInput<'_>,
    rng: &mut RandomSource,
) -> Result<EstimateRecord, EstimateError> {
    if input.triplets.is_empty() {
        return Err(EstimateError::EmptyData);
    }
    if kind.requires_scalar() && input.family.dim() != 1 {
        return Err(EstimateError::RequiresScalar {
            kind: kind.to_string(),
            dim: input.family.dim(),
        });
    }
    let mut record = match kind {
        EstimatorKind::So => EstimateRecord::new(kind, input.so()?.clone(), 0),
        EstimatorKind::Sp | EstimatorKind::Lle => {
            let (theta, it) = penalized::solve(input, SurrogateLoss::Logistic, 1.0, 1.0)?;
            EstimateRecord::new(kind, theta, it)
        }
        EstimatorKind::Surrogate { loss, lambda, beta } => {
            let (theta, it) = penalized::solve(input, loss, lambda, beta)?;
            EstimateRecord::new(kind, theta, it)
        }
        EstimatorKind::Dp => {
            let (theta, it) = constrained::dp(input)?;
            EstimateRecord::new(kind, theta, it)
        }
        EstimatorKind::Any => EstimateRecord::new(kind, input.polytope()?.feasible_point()?, 1),
        EstimatorKind::Wc => {
            let truth = input
                .theta_star
                .ok_or_else(|| EstimateError::MissingTruth(kind.to_string()))?;
            let (theta, solves) = constrained::wc(input, truth, rng)?;
            EstimateRecord::new(kind, theta, solves)
        }
        EstimatorKind::Ru => EstimateRecord::new(kind, constrained::ru(input, rng)?, 0),
        EstimatorKind::Ce => EstimateRecord::new(kind, constrained::ce(input)?, 0),
        EstimatorKind::Cce => EstimateRecord::new(kind, input.polytope()?.chebyshev_center()?.0, 1),
        EstimatorKind::TrG => {
            let (theta, attempts) = constrained::trg(input, rng)?;
            EstimateRecord::new(kind, theta, attempts)
        }
        EstimatorKind::TrMle => EstimateRecord::new(kind, constrained::trmle(input)?, 0),
    };
    if kind.is_constrained() {
        record.feasible = Some(input.polytope()?.contains(&record.theta, CONTAINMENT_TOL)?);
    }
    Ok(record)
}

/// Convenience wrappers with the signatures used by callers that hold a single estimator.
pub fn estimate_so(family: &ModelFamily, triplets: &[Triplet]) -> Result<EstimateRecord, EstimateError> {
    let bounds = family.default_bounds();
    let input = EstimationInput::new(family, triplets, &bounds);
    estimate(EstimatorKind::So, &input, &mut RandomSource::seed_from_u64(0))
}

pub fn estimate_sp(
    family: &ModelFamily,
    triplets: &[Triplet],
    bounds: &BoxBounds,
    lambda: f64,
    beta: f64,
) -> Result<EstimateRecord, EstimateError> {
    let input = EstimationInput::new(family, triplets, bounds);
    let (theta, it) = penalized::solve(&input, SurrogateLoss::Logistic, lambda, beta)?;
    Ok(EstimateRecord::new(EstimatorKind::Sp, theta, it))
}

pub fn estimate_surrogate(
    family: &ModelFamily,
    triplets: &[Triplet],
    bounds: &BoxBounds,
    loss: SurrogateLoss,
    lambda: f64,
    beta: f64,
) -> Result<EstimateRecord, EstimateError> {
    let input = EstimationInput::new(family, triplets, bounds);
    estimate(
        EstimatorKind::Surrogate { loss, lambda, beta },
        &input,
        &mut RandomSource::seed_from_u64(0),
    )
}

pub fn estimate_dp(
    family: &ModelFamily,
    triplets: &[Triplet],
    bounds: &BoxBounds,
) -> Result<EstimateRecord, EstimateError> {
    let input = EstimationInput::new(family, triplets, bounds);
    estimate(EstimatorKind::Dp, &input, &mut RandomSource::seed_from_u64(0))
}
