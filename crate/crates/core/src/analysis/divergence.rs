use crate::models::ModelFamily;
use crate::numerics::Vector;

use super::{cdf_v_analytic, AnalysisError};

fn gap(family: &ModelFamily, t1: &Vector, t2: &Vector) -> Result<f64, AnalysisError> {
    family.check_param(t1)?;
    family.check_param(t2)?;
    Ok(family.family_norm(&(t1 - t2))?)
}

/// Squared Hellinger distance 1 − BC between single-sample distributions.
pub fn hellinger_sq(family: &ModelFamily, t1: &Vector, t2: &Vector) -> Result<f64, AnalysisError> {
    let eps = gap(family, t1, t2)?;
    match family {
        ModelFamily::Gaussian(_) => Ok(-(-eps * eps / 8.0).exp_m1()),
        ModelFamily::Laplace { scale } => {
            let r = eps / (2.0 * scale);
            Ok(1.0 - (1.0 + r) * (-r).exp())
        }
        ModelFamily::Rayleigh => Err(AnalysisError::Unavailable("the Rayleigh Hellinger distance".into())),
    }
}

/// Squared Hellinger distance between pair distributions, 1 − (1 − H²)².
pub fn hellinger_sq_pair(family: &ModelFamily, t1: &Vector, t2: &Vector) -> Result<f64, AnalysisError> {
    let bc = 1.0 - hellinger_sq(family, t1, t2)?;
    Ok(1.0 - bc * bc)
}

/// Bhattacharyya mass of the pairs on which the two parameters disagree about the
/// preference: 2e^{−ε²/4} F(ε/2) for Gaussian with ε = ‖θ₁ − θ₂‖_Σ, and
/// ½e^{−ε/b}(e^{−ε/b} − 1 + 2ε/b + ε²/(2b²)) for Laplace with ε = |θ₁ − θ₂|.
pub fn restricted_bc(family: &ModelFamily, t1: &Vector, t2: &Vector) -> Result<f64, AnalysisError> {
    let eps = gap(family, t1, t2)?;
    match family {
        ModelFamily::Gaussian(_) => Ok(2.0 * (-eps * eps / 4.0).exp() * cdf_v_analytic(family, eps / 2.0)?),
        ModelFamily::Laplace { scale } => {
            let r = eps / scale;
            Ok(0.5 * (-r).exp() * ((-r).exp_m1() + 2.0 * r + r * r / 2.0))
        }
        ModelFamily::Rayleigh => Err(AnalysisError::Unavailable("the Rayleigh restricted coefficient".into())),
    }
}
