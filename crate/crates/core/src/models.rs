//! Parametric families: Gaussian with known covariance, Laplace with known scale
//! and Rayleigh, each in its natural parametrization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    check_dim, check_symmetric, cholesky, quad_form, spd_inverse, sym_sqrt, BoxBounds, HalfSpace,
    Matrix, NumericsError, RandomSource, Vector,
};

/// Pairs closer than this are treated as identical.
pub const DEGENERATE_PAIR_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter outside the parameter space: {0}")]
    Domain(String),
    #[error("sample outside the support: {0}")]
    OffSupport(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("preference value is not differentiable at this parameter")]
    NonDifferentiable,
    #[error("no samples")]
    EmptyData,
    #[error("invalid family specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn dim_check(expected: usize, found: usize) -> Result<(), ModelError> {
    check_dim(expected, found).map_err(|_| ModelError::Dimension { expected, found })
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gaussian with known covariance Σ and natural parameter θ = Σ⁻¹μ.
#[derive(Debug, Clone)]
pub struct GaussianFamily {
    sigma: Matrix,
    sigma_inv: Matrix,
    sigma_sqrt: Matrix,
    sigma_inv_sqrt: Matrix,
    /// −½(d ln 2π + ln det Σ)
    log_norm: f64,
}

impl GaussianFamily {
    pub fn new(sigma: Matrix) -> Result<Self, ModelError> {
        check_symmetric(&sigma, 1e-12)?;
        let l = cholesky(&sigma)?;
        let sigma_inv = spd_inverse(&sigma)?;
        let (sigma_sqrt, sigma_inv_sqrt) = sym_sqrt(&sigma)?;
        let d = sigma.nrows();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(Self {
            sigma,
            sigma_inv,
            sigma_sqrt,
            sigma_inv_sqrt,
            log_norm,
        })
    }

    pub fn identity(d: usize) -> Result<Self, ModelError> {
        if d == 0 {
            return Err(ModelError::InvalidSpec("dimension must be at least 1".into()));
        }
        Self::new(Matrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &Matrix {
        &self.sigma_inv
    }

    pub fn sigma_sqrt(&self) -> &Matrix {
        &self.sigma_sqrt
    }

    pub fn sigma_inv_sqrt(&self) -> &Matrix {
        &self.sigma_inv_sqrt
    }

    pub fn is_identity(&self) -> bool {
        self.sigma == Matrix::identity(self.dim(), self.dim())
    }

    /// Σ⁻¹(x+y)/2: the parameter at which the pair is tied along x − y.
    fn tie_point(&self, x: &Vector, y: &Vector) -> Vector {
        &self.sigma_inv * ((x + y) * 0.5)
    }
}

/// One draw of two independent samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub x: Vector,
    pub y: Vector,
}

impl SamplePair {
    pub fn new(x: Vector, y: Vector) -> Self {
        Self { x, y }
    }

    pub fn scalar(x: f64, y: f64) -> Self {
        Self {
            x: Vector::from_element(1, x),
            y: Vector::from_element(1, y),
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

/// A halfspace `a·θ ≥ b` induced by one labelled pair, or nothing.
#[derive(Debug, Clone, PartialEq)]
pub enum HalfSpaceRow {
    Half(HalfSpace),
    /// Label `z = 0`: the pair carries no constraint.
    Tie,
    /// `x = y` within [`DEGENERATE_PAIR_TOL`]: the normal would vanish.
    Degenerate,
}

/// Serializable description of a family, as used in configs and on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilySpec {
    Gaussian {
        d: usize,
        #[serde(default)]
        sigma: SigmaSpec,
    },
    Laplace {
        b: f64,
    },
    Rayleigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    /// Only `"identity"` is recognised.
    Named(String),
    Diagonal { diag: Vec<f64> },
    Full(Vec<Vec<f64>>),
}

impl Default for SigmaSpec {
    fn default() -> Self {
        SigmaSpec::Named("identity".into())
    }
}

impl SigmaSpec {
    /// Parses `identity`, `diag:a,b,...` or `full:a11,a12,...` (row-major).
    pub fn parse_flag(s: &str) -> Result<Self, ModelError> {
        let nums = |body: &str| -> Result<Vec<f64>, ModelError> {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| ModelError::InvalidSpec(format!("bad number {t:?} in sigma")))
                })
                .collect()
        };
        if s == "identity" {
            Ok(SigmaSpec::default())
        } else if let Some(body) = s.strip_prefix("diag:") {
            Ok(SigmaSpec::Diagonal { diag: nums(body)? })
        } else if let Some(body) = s.strip_prefix("full:") {
            let v = nums(body)?;
            let d = (v.len() as f64).sqrt().round() as usize;
            if d * d != v.len() {
                return Err(ModelError::InvalidSpec("full sigma needs d² entries".into()));
            }
            Ok(SigmaSpec::Full(v.chunks(d).map(|c| c.to_vec()).collect()))
        } else {
            Err(ModelError::InvalidSpec(format!(
                "sigma must be identity, diag:... or full:..., got {s:?}"
            )))
        }
    }

    fn matrix(&self, d: usize) -> Result<Matrix, ModelError> {
        match self {
            SigmaSpec::Named(n) if n == "identity" => Ok(Matrix::identity(d, d)),
            SigmaSpec::Named(n) => Err(ModelError::InvalidSpec(format!("unknown sigma {n:?}"))),
            SigmaSpec::Diagonal { diag } => {
                dim_check(d, diag.len())?;
                if diag.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(ModelError::InvalidSpec("diagonal entries must be > 0".into()));
                }
                Ok(Matrix::from_diagonal(&Vector::from_row_slice(diag)))
            }
            SigmaSpec::Full(rows) => {
                dim_check(d, rows.len())?;
                for r in rows {
                    dim_check(d, r.len())?;
                }
                Ok(Matrix::from_fn(d, d, |i, j| rows[i][j]))
            }
        }
    }
}

impl FamilySpec {
    pub fn build(&self) -> Result<ModelFamily, ModelError> {
        match self {
            FamilySpec::Gaussian { d, sigma } => {
                if *d == 0 {
                    return Err(ModelError::InvalidSpec("dimension must be at least 1".into()));
                }
                Ok(ModelFamily::Gaussian(GaussianFamily::new(sigma.matrix(*d)?)?))
            }
            FamilySpec::Laplace { b } => ModelFamily::laplace(*b),
            FamilySpec::Rayleigh => Ok(ModelFamily::Rayleigh),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelFamily {
    Gaussian(GaussianFamily),
    /// Laplace location family with known scale `b > 0`; θ is the location.
    Laplace { scale: f64 },
    /// Rayleigh with natural parameter θ = −1/(2σ²) < 0.
    Rayleigh,
}

impl ModelFamily {
    pub fn gaussian_identity(d: usize) -> Result<Self, ModelError> {
        Ok(ModelFamily::Gaussian(GaussianFamily::identity(d)?))
    }

    pub fn gaussian(sigma: Matrix) -> Result<Self, ModelError> {
        Ok(ModelFamily::Gaussian(GaussianFamily::new(sigma)?))
    }

    pub fn laplace(scale: f64) -> Result<Self, ModelError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(ModelError::InvalidSpec(format!("Laplace scale must be > 0, got {scale}")));
        }
        Ok(ModelFamily::Laplace { scale })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Gaussian(_) => "gaussian",
            ModelFamily::Laplace { .. } => "laplace",
            ModelFamily::Rayleigh => "rayleigh",
        }
    }

    pub fn spec(&self) -> FamilySpec {
        match self {
            ModelFamily::Gaussian(g) => {
                let sigma = if g.is_identity() {
                    SigmaSpec::default()
                } else {
                    let s = g.sigma();
                    SigmaSpec::Full(
                        (0..s.nrows())
                            .map(|i| (0..s.ncols()).map(|j| s[(i, j)]).collect())
                            .collect(),
                    )
                };
                FamilySpec::Gaussian { d: g.dim(), sigma }
            }
            ModelFamily::Laplace { scale } => FamilySpec::Laplace { b: *scale },
            ModelFamily::Rayleigh => FamilySpec::Rayleigh,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelFamily::Gaussian(g) => g.dim(),
            _ => 1,
        }
    }

    /// Default parameter box: `[−10, 10]^d`, or `[−10, −1e−6]` for Rayleigh.
    pub fn default_bounds(&self) -> BoxBounds {
        let (lo, hi) = match self {
            ModelFamily::Rayleigh => (-10.0, -1e-6),
            _ => (-10.0, 10.0),
        };
        BoxBounds::uniform(self.dim(), lo, hi).expect("default box is valid")
    }

    pub fn check_param(&self, theta: &Vector) -> Result<(), ModelError> {
        dim_check(self.dim(), theta.len())?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Domain("non-finite parameter".into()));
        }
        if let ModelFamily::Rayleigh = self {
            if !(theta[0] < 0.0) {
                return Err(ModelError::Domain(format!(
                    "Rayleigh natural parameter must be < 0, got {}",
                    theta[0]
                )));
            }
        }
        Ok(())
    }

    pub fn check_sample(&self, x: &Vector) -> Result<(), ModelError> {
        dim_check(self.dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::OffSupport("non-finite sample".into()));
        }
        if let ModelFamily::Rayleigh = self {
            if !(x[0] > 0.0) {
                return Err(ModelError::OffSupport(format!(
                    "Rayleigh samples must be > 0, got {}",
                    x[0]
                )));
            }
        }
        Ok(())
    }

    fn check_pair(&self, pair: &SamplePair) -> Result<(), ModelError> {
        self.check_sample(&pair.x)?;
        self.check_sample(&pair.y)
    }

    /// One draw from p_θ.
    pub fn sample(&self, theta: &Vector, rng: &mut RandomSource) -> Result<Vector, ModelError> {
        self.check_param(theta)?;
        Ok(match self {
            ModelFamily::Gaussian(g) => {
                let mu = g.sigma() * theta;
                let z = rng.normal_vector(g.dim());
                mu + g.sigma_sqrt() * z
            }
            ModelFamily::Laplace { scale } => {
                let u = rng.uniform_open() - 0.5;
                let x = theta[0] - scale * sign(u) * (1.0 - 2.0 * u.abs()).ln();
                Vector::from_element(1, x)
            }
            ModelFamily::Rayleigh => {
                let sigma = (-0.5 / theta[0]).sqrt();
                let u = rng.uniform_open();
                Vector::from_element(1, sigma * (-2.0 * u.ln()).sqrt())
            }
        })
    }

    pub fn sample_pair(
        &self,
        theta: &Vector,
        rng: &mut RandomSource,
    ) -> Result<SamplePair, ModelError> {
        let x = self.sample(theta, rng)?;
        let y = self.sample(theta, rng)?;
        Ok(SamplePair { x, y })
    }

    pub fn log_density(&self, theta: &Vector, x: &Vector) -> Result<f64, ModelError> {
        self.check_param(theta)?;
        self.check_sample(x)?;
        Ok(match self {
            ModelFamily::Gaussian(g) => {
                let r = x - g.sigma() * theta;
                g.log_norm - 0.5 * quad_form(g.sigma_inv(), &r)?
            }
            ModelFamily::Laplace { scale } => -(x[0] - theta[0]).abs() / scale - (2.0 * scale).ln(),
            ModelFamily::Rayleigh => {
                x[0] * x[0] * theta[0] + x[0].ln() + (-2.0 * theta[0]).ln()
            }
        })
    }

    /// ℓ_θ(x, y) = log p_θ(x) − log p_θ(y).
    pub fn pref_value(&self, theta: &Vector, pair: &SamplePair) -> Result<f64, ModelError> {
        self.check_param(theta)?;
        self.check_pair(pair)?;
        Ok(self.pref_value_unchecked(theta, pair))
    }

    pub(crate) fn pref_value_unchecked(&self, theta: &Vector, pair: &SamplePair) -> f64 {
        let (x, y) = (&pair.x, &pair.y);
        match self {
            ModelFamily::Gaussian(g) => (x - y).dot(&(theta - g.tie_point(x, y))),
            ModelFamily::Laplace { scale } => {
                ((y[0] - theta[0]).abs() - (x[0] - theta[0]).abs()) / scale
            }
            ModelFamily::Rayleigh => {
                (x[0] * x[0] - y[0] * y[0]) * theta[0] + (x[0].ln() - y[0].ln())
            }
        }
    }

    /// ∇_θ ℓ_θ(x, y).
    pub fn pref_gradient(&self, theta: &Vector, pair: &SamplePair) -> Result<Vector, ModelError> {
        self.check_param(theta)?;
        self.check_pair(pair)?;
        let (x, y) = (&pair.x, &pair.y);
        Ok(match self {
            ModelFamily::Gaussian(_) => x - y,
            ModelFamily::Laplace { scale } => {
                let (t, a, b) = (theta[0], x[0], y[0]);
                if a == b {
                    return Ok(Vector::zeros(1));
                }
                if t == a || t == b {
                    return Err(ModelError::NonDifferentiable);
                }
                let g = if t > a.min(b) && t < a.max(b) {
                    2.0 / scale * sign(a - b)
                } else {
                    0.0
                };
                Vector::from_element(1, g)
            }
            ModelFamily::Rayleigh => Vector::from_element(1, x[0] * x[0] - y[0] * y[0]),
        })
    }

    /// Score ∇_θ log p_θ(x).
    pub fn score(&self, theta: &Vector, x: &Vector) -> Result<Vector, ModelError> {
        self.check_param(theta)?;
        self.check_sample(x)?;
        Ok(match self {
            ModelFamily::Gaussian(g) => x - g.sigma() * theta,
            ModelFamily::Laplace { scale } => {
                Vector::from_element(1, sign(x[0] - theta[0]) / scale)
            }
            ModelFamily::Rayleigh => Vector::from_element(1, x[0] * x[0] + 1.0 / theta[0]),
        })
    }

    /// Closed-form maximum-likelihood estimate from the pooled samples of all pairs.
    pub fn so_mle<'a, I>(&self, pairs: I) -> Result<Vector, ModelError>
    where
        I: IntoIterator<Item = &'a SamplePair>,
    {
        let d = self.dim();
        match self {
            ModelFamily::Gaussian(g) => {
                let mut sum = Vector::zeros(d);
                let mut count = 0usize;
                for p in pairs {
                    dim_check(d, p.x.len())?;
                    dim_check(d, p.y.len())?;
                    sum += &p.x;
                    sum += &p.y;
                    count += 2;
                }
                if count == 0 {
                    return Err(ModelError::EmptyData);
                }
                Ok(g.sigma_inv() * (sum / count as f64))
            }
            ModelFamily::Laplace { .. } => {
                let mut pooled: Vec<f64> = Vec::new();
                for p in pairs {
                    pooled.push(p.x[0]);
                    pooled.push(p.y[0]);
                }
                if pooled.is_empty() {
                    return Err(ModelError::EmptyData);
                }
                Ok(Vector::from_element(1, median(&mut pooled)))
            }
            ModelFamily::Rayleigh => {
                let mut sq = 0.0;
                let mut n = 0usize;
                for p in pairs {
                    self.check_pair(p)?;
                    sq += p.x[0] * p.x[0] + p.y[0] * p.y[0];
                    n += 1;
                }
                if n == 0 {
                    return Err(ModelError::EmptyData);
                }
                Ok(Vector::from_element(1, -2.0 * n as f64 / sq))
            }
        }
    }

    /// The halfspace of parameters that label `pair` with `z`: `{θ : z·ℓ_θ(x,y) ≥ 0}`.
    ///
    /// One-dimensional rows are normalized to `|a| = 1`, so `b/a` is the tie point itself.
    pub fn constraint_row(&self, pair: &SamplePair, z: i8) -> Result<HalfSpaceRow, ModelError> {
        self.check_pair(pair)?;
        if z == 0 {
            return Ok(HalfSpaceRow::Tie);
        }
        if !(z == 1 || z == -1) {
            return Err(ModelError::Domain(format!("label must be in {{-1,0,1}}, got {z}")));
        }
        let z = z as f64;
        let (x, y) = (&pair.x, &pair.y);
        if (x - y).amax() <= DEGENERATE_PAIR_TOL {
            return Ok(HalfSpaceRow::Degenerate);
        }
        let row = match self {
            ModelFamily::Gaussian(g) if g.dim() == 1 => {
                let a = z * sign(x[0] - y[0]);
                HalfSpace::new(Vector::from_element(1, a), a * g.tie_point(x, y)[0])
            }
            ModelFamily::Gaussian(g) => {
                let diff = x - y;
                let b = z * diff.dot(&g.tie_point(x, y));
                HalfSpace::new(diff * z, b)
            }
            ModelFamily::Laplace { .. } => {
                let a = z * sign(x[0] - y[0]);
                HalfSpace::new(Vector::from_element(1, a), a * (0.5 * (x[0] + y[0])))
            }
            ModelFamily::Rayleigh => {
                let q = x[0] * x[0] - y[0] * y[0];
                let tie = -(x[0] / y[0]).ln() / q;
                let a = z * sign(q);
                HalfSpace::new(Vector::from_element(1, a), a * tie)
            }
        };
        Ok(HalfSpaceRow::Half(row))
    }

    /// V = ℓ_θ*(x,y) / (−⟨u, ∇ℓ_θ*(x,y)⟩) when positive, `None` for uninformative pairs.
    pub fn deviation_statistic(
        &self,
        theta_star: &Vector,
        u: &Vector,
        pair: &SamplePair,
    ) -> Result<Option<f64>, ModelError> {
        dim_check(self.dim(), u.len())?;
        let ell = self.pref_value(theta_star, pair)?;
        let grad = match self.pref_gradient(theta_star, pair) {
            Ok(g) => g,
            Err(ModelError::NonDifferentiable) => return Ok(None),
            Err(e) => return Err(e),
        };
        let denom = -u.dot(&grad);
        if denom == 0.0 {
            return Ok(None);
        }
        let v = ell / denom;
        Ok((v > 0.0).then_some(v))
    }

    /// ‖v‖_Σ for Gaussian, |v| otherwise.
    pub fn family_norm(&self, v: &Vector) -> Result<f64, ModelError> {
        dim_check(self.dim(), v.len())?;
        Ok(match self {
            ModelFamily::Gaussian(g) => quad_form(g.sigma(), v)?.max(0.0).sqrt(),
            _ => v[0].abs(),
        })
    }

    /// `v` rescaled to unit family norm.
    pub fn normalize_direction(&self, v: &Vector) -> Result<Vector, ModelError> {
        let n = self.family_norm(v)?;
        if !(n > 0.0) {
            return Err(ModelError::Domain("direction must be non-zero".into()));
        }
        Ok(v / n)
    }

    /// Metric defining the family norm (Σ, or 1 for the scalar families).
    pub fn metric(&self) -> Matrix {
        match self {
            ModelFamily::Gaussian(g) => g.sigma().clone(),
            _ => Matrix::identity(1, 1),
        }
    }
}

/// Median with the midpoint rule for even counts. Reorders `values`.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    fn gauss1() -> ModelFamily {
        ModelFamily::gaussian_identity(1).unwrap()
    }

    #[test]
    fn gaussian_caches_are_consistent() {
        let sigma = Matrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]);
        let g = GaussianFamily::new(sigma.clone()).unwrap();
        assert!((g.sigma_sqrt() * g.sigma_sqrt() - &sigma).norm() <= 1e-10);
        assert!((g.sigma_inv() * &sigma - Matrix::identity(3, 3)).norm() <= 1e-10);
        assert!((g.sigma_inv_sqrt() * g.sigma_sqrt() - Matrix::identity(3, 3)).norm() <= 1e-10);
    }

    #[test]
    fn invalid_families_rejected() {
        assert!(ModelFamily::laplace(0.0).is_err());
        assert!(ModelFamily::laplace(-1.0).is_err());
        assert!(ModelFamily::gaussian(Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(GaussianFamily::identity(0).is_err());
        assert!(ModelFamily::Rayleigh.check_param(&s(0.5)).is_err());
        assert!(ModelFamily::Rayleigh.check_param(&s(0.0)).is_err());
    }

    #[test]
    fn spec_parsing() {
        let f: FamilySpec =
            serde_json::from_str(r#"{"family":"gaussian","d":20,"sigma":"identity"}"#).unwrap();
        assert_eq!(f.build().unwrap().dim(), 20);
        let f: FamilySpec = serde_json::from_str(r#"{"family":"laplace","b":1.0}"#).unwrap();
        assert!(matches!(f.build().unwrap(), ModelFamily::Laplace { scale } if scale == 1.0));
        let f: FamilySpec = serde_json::from_str(r#"{"family":"rayleigh"}"#).unwrap();
        assert!(matches!(f.build().unwrap(), ModelFamily::Rayleigh));
        let f: FamilySpec =
            serde_json::from_str(r#"{"family":"gaussian","d":2,"sigma":{"diag":[4,1]}}"#).unwrap();
        let fam = f.build().unwrap();
        assert_eq!(fam.family_norm(&Vector::from_vec(vec![1.0, 0.0])).unwrap(), 2.0);
        assert!(serde_json::from_str::<FamilySpec>(r#"{"family":"cauchy"}"#).is_err());
        assert_eq!(
            SigmaSpec::parse_flag("diag:4,1").unwrap(),
            SigmaSpec::Diagonal { diag: vec![4.0, 1.0] }
        );
        assert!(SigmaSpec::parse_flag("full:1,0,0").is_err());
    }

    #[test]
    fn log_density_examples() {
        let v = gauss1().log_density(&s(0.0), &s(0.0)).unwrap();
        assert!((v + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!((v + 0.9189385332046727).abs() < 1e-12);
        let lap = ModelFamily::laplace(1.0).unwrap();
        assert!((lap.log_density(&s(0.0), &s(0.0)).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!(ModelFamily::Rayleigh.log_density(&s(-0.5), &s(-1.0)).is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        let cases = [
            (gauss1(), s(0.7), -15.0, 15.0),
            (ModelFamily::gaussian(Matrix::from_element(1, 1, 2.5)).unwrap(), s(0.3), -20.0, 20.0),
            (ModelFamily::laplace(1.5).unwrap(), s(-1.0), -60.0, 60.0),
            (ModelFamily::Rayleigh, s(-0.5), 1e-12, 30.0),
        ];
        for (fam, theta, lo, hi) in cases {
            let pieces = 200;
            let w = (hi - lo) / pieces as f64;
            let total: f64 = (0..pieces)
                .map(|k| {
                    let a = lo + w * k as f64;
                    crate::numerics::adaptive_simpson(
                        |x| fam.log_density(&theta, &s(x)).unwrap().exp(),
                        a,
                        a + w,
                        1e-12,
                    )
                })
                .sum();
            assert!((total - 1.0).abs() <= 0.005, "{} integrates to {total}", fam.name());
        }
    }

    #[test]
    fn pref_value_examples() {
        let p = SamplePair::scalar(2.0, 0.0);
        assert_eq!(gauss1().pref_value(&s(0.0), &p).unwrap(), -2.0);
        let lap = ModelFamily::laplace(1.0).unwrap();
        assert_eq!(lap.pref_value(&s(0.0), &SamplePair::scalar(0.0, 2.0)).unwrap(), 2.0);
        let r = ModelFamily::Rayleigh
            .pref_value(&s(-0.5), &SamplePair::scalar(2.0, 1.0))
            .unwrap();
        assert!((r - (-1.5 + 2f64.ln())).abs() < 1e-15);
        assert!((r + 0.8069).abs() < 1e-4);
    }

    #[test]
    fn pref_gradient_examples() {
        let g = ModelFamily::gaussian_identity(2).unwrap();
        let p = SamplePair::new(Vector::from_vec(vec![1.0, 2.0]), Vector::from_vec(vec![0.5, -1.0]));
        for th in [[0.0, 0.0], [3.0, -1.0]] {
            let grad = g.pref_gradient(&Vector::from_row_slice(&th), &p).unwrap();
            assert_eq!(grad, Vector::from_vec(vec![0.5, 3.0]));
        }
        let lap = ModelFamily::laplace(1.0).unwrap();
        let p = SamplePair::scalar(0.0, 2.0);
        assert_eq!(lap.pref_gradient(&s(1.0), &p).unwrap()[0], -2.0);
        assert_eq!(lap.pref_gradient(&s(3.0), &p).unwrap()[0], 0.0);
        assert_eq!(lap.pref_gradient(&s(0.0), &p), Err(ModelError::NonDifferentiable));
        assert_eq!(lap.pref_gradient(&s(2.0), &p), Err(ModelError::NonDifferentiable));
    }

    #[test]
    fn so_mle_examples() {
        let g = gauss1();
        assert_eq!(g.so_mle(&[SamplePair::scalar(1.0, 3.0)]).unwrap()[0], 2.0);
        let lap = ModelFamily::laplace(1.0).unwrap();
        assert_eq!(lap.so_mle(&[SamplePair::scalar(0.0, 10.0)]).unwrap()[0], 5.0);
        assert_eq!(
            ModelFamily::Rayleigh.so_mle(&[SamplePair::scalar(1.0, 1.0)]).unwrap()[0],
            -1.0
        );
        assert_eq!(g.so_mle(&[]), Err(ModelError::EmptyData));
        let g2 = ModelFamily::gaussian(Matrix::from_element(1, 1, 2.0)).unwrap();
        assert!((g2.so_mle(&[SamplePair::scalar(1.0, 3.0)]).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    fn half(row: HalfSpaceRow) -> HalfSpace {
        match row {
            HalfSpaceRow::Half(h) => h,
            other => panic!("expected a halfspace, got {other:?}"),
        }
    }

    #[test]
    fn constraint_row_examples() {
        // −2θ ≥ −2, normalized to −θ ≥ −1
        let h = half(gauss1().constraint_row(&SamplePair::scalar(2.0, 0.0), -1).unwrap());
        assert_eq!((h.a[0], h.b), (-1.0, -1.0));
        let lap = ModelFamily::laplace(1.0).unwrap();
        let h = half(lap.constraint_row(&SamplePair::scalar(0.0, 2.0), 1).unwrap());
        assert_eq!((h.a[0], h.b), (-1.0, -1.0));
        let h = half(
            ModelFamily::Rayleigh
                .constraint_row(&SamplePair::scalar(2.0, 1.0), -1)
                .unwrap(),
        );
        // θ ≤ −ln2/3
        assert_eq!(h.a[0], -1.0);
        assert!((h.b / h.a[0] + 2f64.ln() / 3.0).abs() < 1e-15);
        let g2 = ModelFamily::gaussian_identity(2).unwrap();
        let p = SamplePair::new(Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![0.0, 1.0]));
        let h = half(g2.constraint_row(&p, 1).unwrap());
        assert_eq!(h.a, Vector::from_vec(vec![1.0, -1.0]));
        assert_eq!(h.b, 0.0);
    }

    #[test]
    fn null_rows() {
        let p = SamplePair::scalar(1.0, 3.0);
        assert_eq!(gauss1().constraint_row(&p, 0).unwrap(), HalfSpaceRow::Tie);
        let same = SamplePair::scalar(1.0, 1.0);
        assert_eq!(gauss1().constraint_row(&same, 1).unwrap(), HalfSpaceRow::Degenerate);
        assert!(gauss1().constraint_row(&p, 2).is_err());
    }

    #[test]
    fn deviation_statistic_examples() {
        let lap = ModelFamily::laplace(1.0).unwrap();
        let v = lap
            .deviation_statistic(&s(0.0), &s(1.0), &SamplePair::scalar(-1.0, 3.0))
            .unwrap();
        assert_eq!(v, Some(1.0));
        let v = gauss1()
            .deviation_statistic(&s(0.0), &s(1.0), &SamplePair::scalar(3.0, 1.0))
            .unwrap();
        assert_eq!(v, Some(2.0));
        // opposite direction: the same pair is uninformative
        let v = gauss1()
            .deviation_statistic(&s(0.0), &s(-1.0), &SamplePair::scalar(3.0, 1.0))
            .unwrap();
        assert_eq!(v, None);
        // θ* outside [min, max] for Laplace
        let v = lap
            .deviation_statistic(&s(0.0), &s(1.0), &SamplePair::scalar(1.0, 3.0))
            .unwrap();
        assert_eq!(v, None);
    }

    #[test]
    fn family_norm_examples() {
        let g = gauss1();
        assert_eq!(g.family_norm(&s(-3.0)).unwrap(), 3.0);
        let g2 = ModelFamily::gaussian(Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 1.0])))
            .unwrap();
        assert_eq!(g2.family_norm(&Vector::from_vec(vec![1.0, 0.0])).unwrap(), 2.0);
        let v = Vector::from_vec(vec![3.0, 4.0]);
        let id = ModelFamily::gaussian_identity(2).unwrap();
        assert_eq!(id.family_norm(&v).unwrap(), 5.0);
        assert_eq!(ModelFamily::laplace(2.0).unwrap().family_norm(&s(-3.0)).unwrap(), 3.0);
        assert!(id.family_norm(&s(1.0)).is_err());
    }

    #[test]
    fn sampling_moments() {
        let mut rng = RandomSource::seed_from_u64(1);
        let n = 100_000;
        let g = gauss1();
        let xs: Vec<f64> = (0..n).map(|_| g.sample(&s(0.0), &mut rng).unwrap()[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 0.02 && (var - 1.0).abs() <= 0.02);

        let lap = ModelFamily::laplace(1.0).unwrap();
        let mut xs: Vec<f64> = (0..n).map(|_| lap.sample(&s(5.0), &mut rng).unwrap()[0]).collect();
        assert!((median(&mut xs) - 5.0).abs() <= 0.02);

        let r = ModelFamily::Rayleigh;
        let m = (0..n).map(|_| r.sample(&s(-0.5), &mut rng).unwrap()[0]).sum::<f64>() / n as f64;
        assert!((m - (std::f64::consts::PI / 2.0).sqrt()).abs() <= 0.01, "mean {m}");
    }

    #[test]
    fn median_rule() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [0.0, 10.0, 4.0, 6.0]), 5.0);
    }
}
