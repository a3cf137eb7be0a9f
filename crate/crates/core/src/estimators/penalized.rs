use crate::models::ModelFamily;
use crate::numerics::{grid_then_golden, minimize_smooth, NumericsError, SmoothOptions, Vector};

use super::objective::{PenalizedObjective, SurrogateLoss};
use super::{EstimateError, EstimationInput};

const GRID_POINTS: usize = 200;
const BRACKET_TOL: f64 = 1e-8;
/// Gradient tolerance for the per-sample (divided by n) objective.
const GRAD_TOL: f64 = 1e-10;

/// Minimizer of the sample-only likelihood plus `λ Σ f(β z ℓ_θ)`, with the iteration count.
pub(super) fn solve(
    input: &EstimationInput<'_>,
    loss: SurrogateLoss,
    lambda: f64,
    beta: f64,
) -> Result<(Vector, usize), EstimateError> {
    let so = input.so()?;
    if lambda == 0.0 {
        return Ok((so.clone(), 0));
    }
    let obj = PenalizedObjective::new(input.family, input.triplets, so, loss, lambda, beta);
    let gaussian = matches!(input.family, ModelFamily::Gaussian(_));

    // Scaled by 1/n so the gradient tolerance does not fall below roundoff as n grows.
    let w = 1.0 / input.n() as f64;
    let f = |t: &Vector| obj.value(t) * w;
    let g = |t: &Vector| obj.gaussian_derivatives(t, false).0 * w;
    let h = |t: &Vector| obj.gaussian_derivatives(t, true).1.expect("hessian requested") * w;
    let opts = SmoothOptions {
        tol: GRAD_TOL,
        ..SmoothOptions::default()
    };

    if gaussian && loss.is_smooth_convex() {
        let out = minimize_smooth(&f, &g, Some(&h), so, opts)?;
        return Ok((out.x, out.iterations));
    }

    if input.family.dim() == 1 {
        let (lo, hi) = (input.bounds.lower[0], input.bounds.upper[0]);
        let mut probe = Vector::zeros(1);
        let m = grid_then_golden(
            |t| {
                probe[0] = t;
                obj.value(&probe)
            },
            lo,
            hi,
            GRID_POINTS,
            BRACKET_TOL,
        );
        return Ok((Vector::from_element(1, m.x), m.evaluations));
    }

    // Non-smooth or non-convex loss in several dimensions: descent from the sample-only
    // MLE, keeping the last accepted iterate if the line search stalls at a kink.
    let hess: Option<&dyn Fn(&Vector) -> _> = match loss {
        SurrogateLoss::Savage => Some(&h),
        _ => None,
    };
    match minimize_smooth(&f, &g, hess, so, opts) {
        Ok(out) => Ok((out.x, out.iterations)),
        Err(NumericsError::MaxIterExceeded {
            iterations, last, ..
        }) => Ok((last, iterations)),
        Err(NumericsError::LineSearchFailed { last, .. }) => Ok((last, 0)),
        Err(e) => Err(e.into()),
    }
}
