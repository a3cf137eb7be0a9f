use crate::geometry::{Interval, NormKind};
use crate::models::ModelFamily;
use crate::numerics::{dykstra_project, ProjectionOptions, RandomSource, Vector};

use super::{EstimateError, EstimationInput};

/// Tolerance for reporting a constrained estimate as feasible.
pub const CONTAINMENT_TOL: f64 = 1e-8;
/// Rejection attempts for TrG before falling back to the interval midpoint.
pub const TRG_MAX_ATTEMPTS: usize = 10_000;
const RANDOM_SIGN_VECTORS: usize = 64;
const EXHAUSTIVE_SIGN_DIM: usize = 6;

fn interval(input: &EstimationInput<'_>) -> Result<Interval, EstimateError> {
    let iv = input.polytope()?.reduce_to_interval()?;
    if iv.is_empty() {
        return Err(EstimateError::InfeasibleConstraints);
    }
    Ok(iv)
}

/// Sample-only MLE if feasible, else its projection onto the feasible set in the family
/// metric (a clamp in one dimension).
pub(super) fn dp(input: &EstimationInput<'_>) -> Result<(Vector, usize), EstimateError> {
    let so = input.so()?;
    let poly = input.polytope()?;
    if poly.contains(so, 0.0)? {
        return Ok((so.clone(), 0));
    }
    if poly.dim == 1 {
        let iv = interval(input)?;
        return Ok((Vector::from_element(1, so[0].clamp(iv.lo, iv.hi)), 0));
    }
    match dykstra_project(so, &poly.all_rows(), &input.family.metric(), ProjectionOptions::default()) {
        Ok(p) => Ok((p.point, p.sweeps)),
        Err(e) => match poly.feasible_point() {
            Ok(_) => Err(e.into()),
            Err(_) => Err(EstimateError::InfeasibleConstraints),
        },
    }
}

/// Sign vectors searched by WC: all `2^d` of them up to `d = 6`, otherwise the signed
/// coordinate axes plus 64 random sign vectors.
pub fn wc_directions(d: usize, rng: &mut RandomSource) -> Vec<Vector> {
    if d <= EXHAUSTIVE_SIGN_DIM {
        return (0..1usize << d)
            .map(|mask| Vector::from_fn(d, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }))
            .collect();
    }
    let mut dirs = Vec::with_capacity(2 * d + RANDOM_SIGN_VECTORS);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut v = Vector::zeros(d);
            v[i] = s;
            dirs.push(v);
        }
    }
    for _ in 0..RANDOM_SIGN_VECTORS {
        dirs.push(Vector::from_fn(d, |_, _| rng.sign()));
    }
    dirs
}

pub(super) fn wc(
    input: &EstimationInput<'_>,
    truth: &Vector,
    rng: &mut RandomSource,
) -> Result<(Vector, usize), EstimateError> {
    let poly = input.polytope()?;
    let dirs = if poly.dim == 1 {
        Vec::new()
    } else {
        wc_directions(poly.dim, rng)
    };
    let (far, _) = poly.support_distance(truth, &dirs, &NormKind::L1)?;
    Ok((far, dirs.len()))
}

pub(super) fn ru(input: &EstimationInput<'_>, rng: &mut RandomSource) -> Result<Vector, EstimateError> {
    let iv = interval(input)?;
    let u = rng.uniform();
    Ok(Vector::from_element(1, (iv.lo + u * (iv.hi - iv.lo)).min(iv.hi)))
}

pub(super) fn ce(input: &EstimationInput<'_>) -> Result<Vector, EstimateError> {
    let iv = interval(input)?;
    Ok(Vector::from_element(1, 0.5 * (iv.lo + iv.hi)))
}

/// Normal draw around the midpoint with variance 4/n, resampled until it lands in the
/// interval.
pub(super) fn trg(input: &EstimationInput<'_>, rng: &mut RandomSource) -> Result<(Vector, usize), EstimateError> {
    let iv = interval(input)?;
    let center = 0.5 * (iv.lo + iv.hi);
    let sd = 2.0 / (input.n() as f64).sqrt();
    for attempt in 1..=TRG_MAX_ATTEMPTS {
        let t = center + sd * rng.standard_normal();
        if iv.contains(t) {
            return Ok((Vector::from_element(1, t), attempt));
        }
    }
    Ok((Vector::from_element(1, center), TRG_MAX_ATTEMPTS))
}

/// Mean of the pooled samples (mapped to the parameter scale) that fall in the interval,
/// or the midpoint if none do.
pub(super) fn trmle(input: &EstimationInput<'_>) -> Result<Vector, EstimateError> {
    let scale = match input.family {
        ModelFamily::Gaussian(g) => g.sigma_inv()[(0, 0)],
        ModelFamily::Laplace { .. } => 1.0,
        ModelFamily::Rayleigh => {
            return Err(EstimateError::Unsupported {
                kind: "trmle".into(),
                family: "rayleigh".into(),
            })
        }
    };
    let iv = interval(input)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for t in input.triplets {
        for s in [t.pair.x[0], t.pair.y[0]] {
            let v = scale * s;
            if iv.contains(v) {
                sum += v;
                count += 1;
            }
        }
    }
    let value = if count == 0 {
        0.5 * (iv.lo + iv.hi)
    } else {
        sum / count as f64
    };
    Ok(Vector::from_element(1, value))
}
