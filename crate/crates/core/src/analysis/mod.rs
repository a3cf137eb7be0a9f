//! Theory-side quantities: Fisher-information gaps, deviation CDFs, divergences, and
//! sampling checks of the modelling assumptions.

mod assumptions;
mod deviation;
mod divergence;
mod gaps;
pub mod montecarlo;

use rayon::prelude::*;
use thiserror::Error;

use crate::models::ModelError;
use crate::numerics::RandomSource;

pub use assumptions::{check_assumptions, AssumptionReport, DirectionCheck};
pub use deviation::{
    cdf_v_analytic, cdf_v_empirical, cdf_v_slope_at_zero, informative_probability, inverse_cdf_v,
    mean_abs_u1, theorem_constants, EmpiricalCdf, TheoremConstants,
};
pub use divergence::{hellinger_sq, hellinger_sq_pair, restricted_bc};
pub use gaps::{gap_matrices, GapMatrices};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("no closed form is available for {0}")]
    Unavailable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Monte Carlo work is split into this many shards, each with its own derived seed, so
/// results do not depend on the number of threads.
pub const MC_SHARDS: u64 = 16;

/// Runs `work(rng, count)` on every shard in parallel and returns the shard results in
/// shard order.
pub(crate) fn sharded<T, F>(total: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomSource, usize) -> T + Sync,
{
    let shards = MC_SHARDS as usize;
    (0..shards)
        .into_par_iter()
        .map(|s| {
            let count = total / shards + usize::from(s < total % shards);
            let mut rng = RandomSource::derive(seed, s as u64);
            work(&mut rng, count)
        })
        .collect()
}
