//! Plain Monte Carlo evaluations of the defining expectations, used to cross-check the
//! closed forms.

use crate::models::{ModelError, ModelFamily};
use crate::numerics::{RandomSource, Vector};
use crate::preferences::deterministic_pref;

use super::{sharded, AnalysisError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
}

fn mc_mean<F>(n: usize, seed: u64, draw: F) -> Result<McEstimate, AnalysisError>
where
    F: Fn(&mut RandomSource) -> Result<f64, ModelError> + Sync,
{
    if n < 2 {
        return Err(AnalysisError::Domain("need at least two samples".into()));
    }
    let shards = sharded(n, seed, |rng, count| -> Result<(f64, f64), ModelError> {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let v = draw(rng)?;
            s += v;
            s2 += v * v;
        }
        Ok((s, s2))
    });
    let (mut s, mut s2) = (0.0, 0.0);
    for shard in shards {
        let (a, b) = shard?;
        s += a;
        s2 += b;
    }
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        standard_error: (var / nf).sqrt(),
    })
}

fn sqrt_ratio(family: &ModelFamily, t1: &Vector, t2: &Vector, x: &Vector) -> Result<f64, ModelError> {
    Ok((0.5 * (family.log_density(t2, x)? - family.log_density(t1, x)?)).exp())
}

/// 1 − E_{p_{θ₁}}[√(p_{θ₂}/p_{θ₁})]
pub fn hellinger_sq_mc(
    family: &ModelFamily,
    t1: &Vector,
    t2: &Vector,
    n: usize,
    seed: u64,
) -> Result<McEstimate, AnalysisError> {
    let bc = mc_mean(n, seed, |rng| {
        let x = family.sample(t1, rng)?;
        sqrt_ratio(family, t1, t2, &x)
    })?;
    Ok(McEstimate {
        mean: 1.0 - bc.mean,
        standard_error: bc.standard_error,
    })
}

/// E_{p_{θ₁}^{⊗2}}[1{sign ℓ_{θ₁} ≠ sign ℓ_{θ₂}} √(p_{θ₂}^{⊗2}/p_{θ₁}^{⊗2})], where a zero
/// preference counts as its own sign.
pub fn restricted_bc_mc(
    family: &ModelFamily,
    t1: &Vector,
    t2: &Vector,
    n: usize,
    seed: u64,
) -> Result<McEstimate, AnalysisError> {
    mc_mean(n, seed, |rng| {
        let pair = family.sample_pair(t1, rng)?;
        let z1 = deterministic_pref(family.pref_value(t1, &pair)?);
        let z2 = deterministic_pref(family.pref_value(t2, &pair)?);
        if z1 == z2 {
            return Ok(0.0);
        }
        Ok(sqrt_ratio(family, t1, t2, &pair.x)? * sqrt_ratio(family, t1, t2, &pair.y)?)
    })
}

/// Squared Hellinger distance between the laws of deterministic-channel triplets,
/// 1 − E_{q_{θ₁}}[√(q_{θ₂}/q_{θ₁})].
pub fn triplet_hellinger_sq_mc(
    family: &ModelFamily,
    t1: &Vector,
    t2: &Vector,
    n: usize,
    seed: u64,
) -> Result<McEstimate, AnalysisError> {
    let bc = mc_mean(n, seed, |rng| {
        let pair = family.sample_pair(t1, rng)?;
        let z1 = deterministic_pref(family.pref_value(t1, &pair)?);
        let z2 = deterministic_pref(family.pref_value(t2, &pair)?);
        if z1 != z2 {
            return Ok(0.0);
        }
        Ok(sqrt_ratio(family, t1, t2, &pair.x)? * sqrt_ratio(family, t1, t2, &pair.y)?)
    })?;
    Ok(McEstimate {
        mean: 1.0 - bc.mean,
        standard_error: bc.standard_error,
    })
}

/// E|U₁| for U uniform on the unit sphere of R^d.
pub fn mean_abs_u1_mc(d: usize, n: usize, seed: u64) -> Result<McEstimate, AnalysisError> {
    if d == 0 {
        return Err(AnalysisError::Domain("dimension must be positive".into()));
    }
    mc_mean(n, seed, |rng| Ok(rng.unit_sphere(d)[0].abs()))
}
