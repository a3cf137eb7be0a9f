//! Sample-only likelihood plus a penalty on signed preference values.

use std::fmt;
use std::str::FromStr;

use crate::models::{ModelFamily, SamplePair};
use crate::numerics::{sigmoid, softplus, Matrix, Vector};
use crate::preferences::Triplet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurrogateLoss {
    Logistic,
    Hinge,
    Square,
    TruncatedSquare,
    Savage,
    Exponential,
}

impl SurrogateLoss {
    pub const ALL: [SurrogateLoss; 6] = [
        SurrogateLoss::Logistic,
        SurrogateLoss::Hinge,
        SurrogateLoss::Square,
        SurrogateLoss::TruncatedSquare,
        SurrogateLoss::Savage,
        SurrogateLoss::Exponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurrogateLoss::Logistic => "logistic",
            SurrogateLoss::Hinge => "hinge",
            SurrogateLoss::Square => "square",
            SurrogateLoss::TruncatedSquare => "truncated_square",
            SurrogateLoss::Savage => "savage",
            SurrogateLoss::Exponential => "exponential",
        }
    }

    pub fn value(self, x: f64) -> f64 {
        match self {
            SurrogateLoss::Logistic => softplus(-x),
            SurrogateLoss::Hinge => (1.0 - x).max(0.0),
            SurrogateLoss::Square => (1.0 - x) * (1.0 - x),
            SurrogateLoss::TruncatedSquare => (1.0 - x).max(0.0).powi(2),
            SurrogateLoss::Savage => sigmoid(-x).powi(2),
            SurrogateLoss::Exponential => (-x).exp(),
        }
    }

    /// Derivative; for the hinge, the left derivative at the kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            SurrogateLoss::Logistic => -sigmoid(-x),
            SurrogateLoss::Hinge => {
                if x < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            SurrogateLoss::Square => -2.0 * (1.0 - x),
            SurrogateLoss::TruncatedSquare => -2.0 * (1.0 - x).max(0.0),
            SurrogateLoss::Savage => {
                let s = sigmoid(-x);
                -2.0 * s * s * (1.0 - s)
            }
            SurrogateLoss::Exponential => -(-x).exp(),
        }
    }

    pub fn second_derivative(self, x: f64) -> f64 {
        match self {
            SurrogateLoss::Logistic => sigmoid(x) * sigmoid(-x),
            SurrogateLoss::Hinge => 0.0,
            SurrogateLoss::Square => 2.0,
            SurrogateLoss::TruncatedSquare => {
                if x < 1.0 {
                    2.0
                } else {
                    0.0
                }
            }
            SurrogateLoss::Savage => {
                let s = sigmoid(-x);
                2.0 * s * s * (1.0 - s) * (2.0 - 3.0 * s)
            }
            SurrogateLoss::Exponential => (-x).exp(),
        }
    }

    /// Convex and twice differentiable, so Newton applies.
    pub fn is_smooth_convex(self) -> bool {
        !matches!(self, SurrogateLoss::Hinge | SurrogateLoss::Savage)
    }
}

impl fmt::Display for SurrogateLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurrogateLoss {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SurrogateLoss::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown surrogate loss {s:?}"))
    }
}

/// `ℓ_θ(x,y) = diff·θ − offset`, valid for the Gaussian and Rayleigh families.
#[derive(Debug, Clone)]
struct LinearPref {
    diff: Vector,
    offset: f64,
    z: f64,
}

#[derive(Debug, Clone)]
enum SampleTerm {
    /// n‖θ − center‖²_Σ
    Gaussian { n: f64, sigma: Matrix, center: Vector },
    /// Σ(|x−θ| + |y−θ|)/b over all samples.
    Laplace { samples: Vec<f64>, scale: f64 },
    /// −θ Σ(x²+y²) − 2n ln(−2θ)
    Rayleigh { n: f64, sum_sq: f64 },
}

/// `L(θ) = L^SO(θ) + λ Σ f(β z ℓ_θ)` up to an additive constant; z = 0 triplets only
/// contribute through `L^SO`.
#[derive(Debug, Clone)]
pub struct PenalizedObjective {
    sample: SampleTerm,
    linear: Vec<LinearPref>,
    laplace_pairs: Vec<(SamplePair, f64)>,
    pub loss: SurrogateLoss,
    pub lambda: f64,
    pub beta: f64,
}

impl PenalizedObjective {
    /// `so` is the sample-only MLE of the same triplets (the Gaussian quadratic's center).
    pub fn new(
        family: &ModelFamily,
        triplets: &[Triplet],
        so: &Vector,
        loss: SurrogateLoss,
        lambda: f64,
        beta: f64,
    ) -> Self {
        let n = triplets.len() as f64;
        let labelled = triplets.iter().filter(|t| t.z != 0);
        let (sample, linear, laplace_pairs) = match family {
            ModelFamily::Gaussian(g) => {
                let linear = labelled
                    .map(|t| {
                        let diff = &t.pair.x - &t.pair.y;
                        let mid = g.sigma_inv() * ((&t.pair.x + &t.pair.y) * 0.5);
                        LinearPref {
                            offset: diff.dot(&mid),
                            diff,
                            z: t.z as f64,
                        }
                    })
                    .collect();
                let sample = SampleTerm::Gaussian {
                    n,
                    sigma: g.sigma().clone(),
                    center: so.clone(),
                };
                (sample, linear, Vec::new())
            }
            ModelFamily::Laplace { scale } => {
                let samples = triplets
                    .iter()
                    .flat_map(|t| [t.pair.x[0], t.pair.y[0]])
                    .collect();
                let pairs = labelled.map(|t| (t.pair.clone(), t.z as f64)).collect();
                (
                    SampleTerm::Laplace {
                        samples,
                        scale: *scale,
                    },
                    Vec::new(),
                    pairs,
                )
            }
            ModelFamily::Rayleigh => {
                let sum_sq = triplets
                    .iter()
                    .map(|t| t.pair.x[0].powi(2) + t.pair.y[0].powi(2))
                    .sum();
                let linear = labelled
                    .map(|t| {
                        let (x, y) = (t.pair.x[0], t.pair.y[0]);
                        LinearPref {
                            diff: Vector::from_element(1, x * x - y * y),
                            offset: -(x / y).ln(),
                            z: t.z as f64,
                        }
                    })
                    .collect();
                (SampleTerm::Rayleigh { n, sum_sq }, linear, Vec::new())
            }
        };
        Self {
            sample,
            linear,
            laplace_pairs,
            loss,
            lambda,
            beta,
        }
    }

    fn sample_value(&self, theta: &Vector) -> f64 {
        match &self.sample {
            SampleTerm::Gaussian { n, sigma, center } => {
                let v = theta - center;
                n * v.dot(&(sigma * &v))
            }
            SampleTerm::Laplace { samples, scale } => {
                samples.iter().map(|s| (s - theta[0]).abs()).sum::<f64>() / scale
            }
            SampleTerm::Rayleigh { n, sum_sq } => {
                let t = theta[0];
                if t < 0.0 {
                    -t * sum_sq - 2.0 * n * (-2.0 * t).ln()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn value(&self, theta: &Vector) -> f64 {
        let mut penalty = 0.0;
        if self.lambda != 0.0 {
            for p in &self.linear {
                penalty += self.loss.value(self.beta * p.z * (p.diff.dot(theta) - p.offset));
            }
            if let SampleTerm::Laplace { scale, .. } = &self.sample {
                let t = theta[0];
                for (pair, z) in &self.laplace_pairs {
                    let ell = ((pair.y[0] - t).abs() - (pair.x[0] - t).abs()) / scale;
                    penalty += self.loss.value(self.beta * z * ell);
                }
            }
        }
        self.sample_value(theta) + self.lambda * penalty
    }

    /// Gradient and Hessian; Gaussian only.
    pub fn gaussian_derivatives(&self, theta: &Vector, want_hessian: bool) -> (Vector, Option<Matrix>) {
        let SampleTerm::Gaussian { n, sigma, center } = &self.sample else {
            unreachable!("smooth derivatives are only used for the Gaussian family");
        };
        let mut grad = sigma * (theta - center) * (2.0 * n);
        let mut hess = want_hessian.then(|| sigma * (2.0 * n));
        if self.lambda != 0.0 {
            for p in &self.linear {
                let arg = self.beta * p.z * (p.diff.dot(theta) - p.offset);
                grad.axpy(self.lambda * self.beta * p.z * self.loss.derivative(arg), &p.diff, 1.0);
                if let Some(h) = hess.as_mut() {
                    let w = self.lambda * self.beta * self.beta * self.loss.second_derivative(arg);
                    if w != 0.0 {
                        h.ger(w, &p.diff, &p.diff, 1.0);
                    }
                }
            }
        }
        (grad, hess)
    }

    /// Gradient for any family. For Laplace it is exact away from the kinks
    /// (sample points and pair endpoints), where one-sided values are returned.
    pub fn gradient(&self, theta: &Vector) -> Vector {
        if let SampleTerm::Gaussian { .. } = &self.sample {
            return self.gaussian_derivatives(theta, false).0;
        }
        let t = theta[0];
        let mut g = match &self.sample {
            SampleTerm::Laplace { samples, scale } => {
                samples.iter().map(|s| (t - s).signum()).sum::<f64>() / scale
            }
            SampleTerm::Rayleigh { n, sum_sq } => -sum_sq - 2.0 * n / t,
            SampleTerm::Gaussian { .. } => unreachable!(),
        };
        if self.lambda != 0.0 {
            for p in &self.linear {
                let arg = self.beta * p.z * (p.diff[0] * t - p.offset);
                g += self.lambda * self.beta * p.z * self.loss.derivative(arg) * p.diff[0];
            }
            if let SampleTerm::Laplace { scale, .. } = &self.sample {
                for (pair, z) in &self.laplace_pairs {
                    let (x, y) = (pair.x[0], pair.y[0]);
                    let ell = ((y - t).abs() - (x - t).abs()) / scale;
                    let dell = ((t - y).signum() - (t - x).signum()) / scale;
                    g += self.lambda * self.beta * z * self.loss.derivative(self.beta * z * ell) * dell;
                }
            }
        }
        Vector::from_element(1, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_values_match_definitions() {
        let x = 0.3f64;
        assert!((SurrogateLoss::Logistic.value(x) - (1.0 + (-x).exp()).ln()).abs() < 1e-15);
        assert_eq!(SurrogateLoss::Hinge.value(x), 0.7);
        assert_eq!(SurrogateLoss::Hinge.value(2.0), 0.0);
        assert!((SurrogateLoss::Square.value(x) - 0.49).abs() < 1e-15);
        assert_eq!(SurrogateLoss::TruncatedSquare.value(1.5), 0.0);
        assert!((SurrogateLoss::Savage.value(x) - (1.0 + x.exp()).powi(-2)).abs() < 1e-15);
        assert_eq!(SurrogateLoss::Exponential.value(0.0), 1.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for loss in SurrogateLoss::ALL {
            for x in [-2.3, -0.4, 0.2, 0.7, 1.6, 3.1] {
                let fd = (loss.value(x + h) - loss.value(x - h)) / (2.0 * h);
                assert!((fd - loss.derivative(x)).abs() < 1e-6, "{loss} f' at {x}");
                let fd2 = (loss.derivative(x + h) - loss.derivative(x - h)) / (2.0 * h);
                assert!((fd2 - loss.second_derivative(x)).abs() < 1e-5, "{loss} f'' at {x}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences_for_scalar_families() {
        use crate::models::SamplePair;
        use crate::preferences::Channel;
        let trip = |x: f64, y: f64, z: i8| Triplet {
            pair: SamplePair::scalar(x, y),
            z,
            channel: Channel::Stochastic,
        };
        let cases = [
            (ModelFamily::laplace(1.3).unwrap(), vec![trip(-0.4, 1.1, 1), trip(0.9, 0.2, -1), trip(2.0, -1.5, 1)], 0.37),
            (ModelFamily::Rayleigh, vec![trip(0.4, 1.1, 1), trip(0.9, 0.2, -1), trip(2.0, 1.5, -1)], -0.8),
        ];
        for (family, data, t) in cases {
            let obj = PenalizedObjective::new(&family, &data, &Vector::from_element(1, t), SurrogateLoss::Logistic, 1.5, 0.7);
            let h = 1e-6;
            let fd = (obj.value(&Vector::from_element(1, t + h)) - obj.value(&Vector::from_element(1, t - h))) / (2.0 * h);
            let g = obj.gradient(&Vector::from_element(1, t))[0];
            assert!((g - fd).abs() < 1e-6, "{}: {g} vs {fd}", family.name());
        }
    }

    #[test]
    fn names_round_trip() {
        for loss in SurrogateLoss::ALL {
            assert_eq!(loss.name().parse::<SurrogateLoss>().unwrap(), loss);
        }
        assert!("quadratic".parse::<SurrogateLoss>().is_err());
    }
}
