use crate::models::{HalfSpaceRow, ModelFamily};
use crate::numerics::{RandomSource, Vector};
use crate::preferences::deterministic_pref;

use super::{cdf_v_empirical, cdf_v_slope_at_zero, informative_probability, AnalysisError};

/// ε at which the density of the deviation statistic near zero is probed.
pub const SMALL_EPS: f64 = 0.01;
const EQUIVALENCE_PROBES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCheck {
    /// Unit direction in the family norm.
    pub direction: Vector,
    pub p_informative: f64,
    pub p_standard_error: f64,
    /// Closed-form probability, when known.
    pub p_expected: Option<f64>,
    /// Empirical F(ε)/ε at ε = [`SMALL_EPS`].
    pub density_near_zero: f64,
    /// Closed-form F′(0), when known.
    pub slope_at_zero: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<DirectionCheck>,
    /// Random (pair, θ) probes comparing the constraint row with the preference sign.
    pub equivalence_probes: usize,
    pub equivalence_violations: usize,
}

/// Sampling checks: informative-pair probability per direction, positivity of the deviation
/// density near zero, and agreement between `constraint_row` and the sign of ℓ_θ.
pub fn check_assumptions(
    family: &ModelFamily,
    theta_star: &Vector,
    directions: &[Vector],
    n_mc: usize,
    seed: u64,
) -> Result<AssumptionReport, AnalysisError> {
    family.check_param(theta_star)?;
    let p_expected = informative_probability(family).ok();
    let slope_at_zero = cdf_v_slope_at_zero(family).ok();
    let mut checks = Vec::with_capacity(directions.len());
    for (j, dir) in directions.iter().enumerate() {
        let u = family.normalize_direction(dir)?;
        let mut rng = RandomSource::derive(seed, j as u64);
        let emp = cdf_v_empirical(family, theta_star, &u, n_mc, &mut rng)?;
        let p = emp.p_informative;
        checks.push(DirectionCheck {
            p_informative: p,
            p_standard_error: (p * (1.0 - p) / n_mc as f64).sqrt(),
            p_expected,
            density_near_zero: emp.eval(SMALL_EPS) / SMALL_EPS,
            slope_at_zero,
            direction: u,
        });
    }

    let mut rng = RandomSource::derive(seed, directions.len() as u64);
    let bounds = family.default_bounds();
    let mut violations = 0;
    for _ in 0..EQUIVALENCE_PROBES {
        let pair = family.sample_pair(theta_star, &mut rng)?;
        let z = deterministic_pref(family.pref_value(theta_star, &pair)?);
        let theta = Vector::from_fn(family.dim(), |i, _| {
            rng.uniform_range(bounds.lower[i], bounds.upper[i])
        });
        if let HalfSpaceRow::Half(h) = family.constraint_row(&pair, z)? {
            let slack = h.slack(&theta);
            if slack.abs() < 1e-9 * (1.0 + h.b.abs()) {
                continue;
            }
            let agrees = z as f64 * family.pref_value(&theta, &pair)? >= 0.0;
            if agrees != (slack >= 0.0) {
                violations += 1;
            }
        }
    }
    Ok(AssumptionReport {
        checks,
        equivalence_probes: EQUIVALENCE_PROBES,
        equivalence_violations: violations,
    })
}
