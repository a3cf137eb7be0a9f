use crate::models::{ModelError, ModelFamily};
use crate::numerics::{sigmoid, Matrix, Vector};

use super::{sharded, AnalysisError};

/// Monte Carlo estimates of the Fisher-information gaps between the sample-only and
/// preference-augmented likelihoods.
#[derive(Debug, Clone, PartialEq)]
pub struct GapMatrices {
    /// E[σ(ℓ)σ(−ℓ) ∇ℓ∇ℓᵀ]
    pub delta_sp: Matrix,
    /// E[(2σ(|ℓ|) − 1)σ(−|ℓ|) ∇ℓ∇ℓᵀ]
    pub delta_lle: Matrix,
    /// E[sign(ℓ)σ(−|ℓ|)(M + Mᵀ)] with M = −(s(x) + s(y))∇ℓᵀ
    pub r_lle: Matrix,
    pub n_samples: usize,
    /// Largest entrywise standard error over the three matrices.
    pub standard_error: f64,
}

impl GapMatrices {
    /// The matrices mapped back to the standardized family: Σ^{-1/2}(·)Σ^{-1/2}/2 for
    /// Gaussian, b²/4 × (·) for Laplace. Returns `(Δ^SP, Δ^LLE, R^LLE, standard error)`.
    pub fn normalized(&self, family: &ModelFamily) -> Result<(Matrix, Matrix, Matrix, f64), AnalysisError> {
        match family {
            ModelFamily::Gaussian(g) => {
                let s = g.sigma_inv_sqrt();
                let f = |m: &Matrix| s * m * s * 0.5;
                // SE scales with the largest entry of the congruence.
                let k = 0.5 * s.abs().row_sum().max().powi(2);
                Ok((f(&self.delta_sp), f(&self.delta_lle), f(&self.r_lle), self.standard_error * k))
            }
            ModelFamily::Laplace { scale } => {
                let k = scale * scale / 4.0;
                Ok((
                    &self.delta_sp * k,
                    &self.delta_lle * k,
                    &self.r_lle * k,
                    self.standard_error * k,
                ))
            }
            ModelFamily::Rayleigh => Err(AnalysisError::Unavailable(
                "a standardized Rayleigh scaling".into(),
            )),
        }
    }
}

struct Acc {
    sum: [Matrix; 3],
    sq: [Matrix; 3],
}

impl Acc {
    fn new(d: usize) -> Self {
        let z = || Matrix::zeros(d, d);
        Self {
            sum: [z(), z(), z()],
            sq: [z(), z(), z()],
        }
    }

    fn add(&mut self, terms: [Matrix; 3]) {
        for (k, t) in terms.into_iter().enumerate() {
            self.sq[k] += t.component_mul(&t);
            self.sum[k] += t;
        }
    }
}

pub fn gap_matrices(
    family: &ModelFamily,
    theta_star: &Vector,
    n_mc: usize,
    seed: u64,
) -> Result<GapMatrices, AnalysisError> {
    family.check_param(theta_star)?;
    if n_mc < 2 {
        return Err(AnalysisError::Domain("need at least two Monte Carlo samples".into()));
    }
    let d = family.dim();
    let shards = sharded(n_mc, seed, |rng, count| -> Result<Acc, ModelError> {
        let mut acc = Acc::new(d);
        for _ in 0..count {
            let pair = family.sample_pair(theta_star, rng)?;
            let ell = family.pref_value(theta_star, &pair)?;
            let grad = match family.pref_gradient(theta_star, &pair) {
                Ok(g) => g,
                Err(ModelError::NonDifferentiable) => Vector::zeros(d),
                Err(e) => return Err(e),
            };
            let score = family.score(theta_star, &pair.x)? + family.score(theta_star, &pair.y)?;
            let ggt = &grad * grad.transpose();
            let a = ell.abs();
            let w_sp = sigmoid(ell) * sigmoid(-ell);
            let w_lle = (2.0 * sigmoid(a) - 1.0) * sigmoid(-a);
            let u = ell.signum() * if ell == 0.0 { 0.0 } else { sigmoid(-a) };
            let m = -(&score * grad.transpose());
            let r = (&m + m.transpose()) * u;
            acc.add([&ggt * w_sp, &ggt * w_lle, r]);
        }
        Ok(acc)
    });
    let mut total = Acc::new(d);
    for shard in shards {
        let shard = shard?;
        for k in 0..3 {
            total.sum[k] += &shard.sum[k];
            total.sq[k] += &shard.sq[k];
        }
    }
    let n = n_mc as f64;
    let mut se: f64 = 0.0;
    let means: Vec<Matrix> = (0..3)
        .map(|k| {
            let mean = &total.sum[k] / n;
            let second = &total.sq[k] / n;
            for (m, s) in mean.iter().zip(second.iter()) {
                let var = (s - m * m).max(0.0) * n / (n - 1.0);
                se = se.max((var / n).sqrt());
            }
            mean
        })
        .collect();
    let [delta_sp, delta_lle, r_lle]: [Matrix; 3] = means.try_into().expect("three matrices");
    Ok(GapMatrices {
        delta_sp,
        delta_lle,
        r_lle,
        n_samples: n_mc,
        standard_error: se,
    })
}
