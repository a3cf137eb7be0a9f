use std::f64::consts::{FRAC_PI_2, PI};

use crate::models::ModelFamily;
use crate::numerics::{adaptive_simpson, erf, ln_gamma, RandomSource, Vector};

use super::AnalysisError;

const QUAD_TOL: f64 = 1e-9;

/// P(the pair is informative about a fixed direction): 1/2 for Gaussian, 1/4 for Laplace.
pub fn informative_probability(family: &ModelFamily) -> Result<f64, AnalysisError> {
    match family {
        ModelFamily::Gaussian(_) => Ok(0.5),
        ModelFamily::Laplace { .. } => Ok(0.25),
        ModelFamily::Rayleigh => Err(AnalysisError::Unavailable("the Rayleigh deviation law".into())),
    }
}

/// Density constant of the first coordinate of a uniform point on the unit sphere in `d ≥ 2`
/// dimensions: Γ(d/2) / (√π Γ((d−1)/2)).
fn sphere_marginal_constant(d: usize) -> f64 {
    let d = d as f64;
    (ln_gamma(d / 2.0) - 0.5 * PI.ln() - ln_gamma((d - 1.0) / 2.0)).exp()
}

/// CDF of the deviation statistic, counting only informative pairs: F(ε) = P(V ∈ (0, ε]).
///
/// Gaussian: ½E[erf(ε|U₁|)] with U uniform on the sphere, evaluated as
/// c∫₀^{π/2} erf(ε sin φ) cos^{d−2}φ dφ. Laplace: (1 − e^{−2ε/b})/4.
pub fn cdf_v_analytic(family: &ModelFamily, eps: f64) -> Result<f64, AnalysisError> {
    if !(eps >= 0.0) {
        return Err(AnalysisError::Domain(format!("ε must be ≥ 0, got {eps}")));
    }
    match family {
        ModelFamily::Laplace { scale } => Ok(-(-2.0 * eps / scale).exp_m1() / 4.0),
        ModelFamily::Gaussian(g) if g.dim() == 1 => Ok(erf(eps) / 2.0),
        ModelFamily::Gaussian(g) => {
            if eps.is_infinite() {
                return Ok(0.5);
            }
            let d = g.dim();
            let c = sphere_marginal_constant(d);
            let p = (d - 2) as i32;
            let v = adaptive_simpson(|phi| erf(eps * phi.sin()) * phi.cos().powi(p), 0.0, FRAC_PI_2, QUAD_TOL);
            Ok(c * v)
        }
        ModelFamily::Rayleigh => Err(AnalysisError::Unavailable("the Rayleigh deviation law".into())),
    }
}

/// F′(0): 1/(2b) for Laplace, E|U₁|/√π for Gaussian.
pub fn cdf_v_slope_at_zero(family: &ModelFamily) -> Result<f64, AnalysisError> {
    match family {
        ModelFamily::Laplace { scale } => Ok(1.0 / (2.0 * scale)),
        ModelFamily::Gaussian(g) if g.dim() == 1 => Ok(1.0 / PI.sqrt()),
        ModelFamily::Gaussian(g) => Ok(mean_abs_u1(g.dim())? / PI.sqrt()),
        ModelFamily::Rayleigh => Err(AnalysisError::Unavailable("the Rayleigh deviation law".into())),
    }
}

/// Laplace only: F⁻¹(x) = −(b/2) ln(1 − 4x) on [0, 1/4).
pub fn inverse_cdf_v(family: &ModelFamily, x: f64) -> Result<f64, AnalysisError> {
    match family {
        ModelFamily::Laplace { scale } => {
            if !(0.0..0.25).contains(&x) {
                return Err(AnalysisError::Domain(format!("x must lie in [0, 1/4), got {x}")));
            }
            Ok(-(scale / 2.0) * (-4.0 * x).ln_1p())
        }
        _ => Err(AnalysisError::Unavailable(format!(
            "the inverse deviation CDF of the {} family",
            family.name()
        ))),
    }
}

/// Sorted informative deviation values from `n_mc` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub values: Vec<f64>,
    pub n_mc: usize,
    pub p_informative: f64,
}

impl EmpiricalCdf {
    /// Unconditional empirical F(ε) = #{V ≤ ε} / n_mc.
    pub fn eval(&self, eps: f64) -> f64 {
        self.values.partition_point(|v| *v <= eps) as f64 / self.n_mc as f64
    }

    /// sup_ε |F_emp(ε) − F(ε)|, including the limit ε → ∞ where F tends to `f_limit`.
    pub fn ks_distance(&self, f: impl Fn(f64) -> f64, f_limit: f64) -> f64 {
        let n = self.n_mc as f64;
        let mut ks: f64 = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let fv = f(*v);
            ks = ks.max((fv - i as f64 / n).abs()).max((fv - (i + 1) as f64 / n).abs());
        }
        ks.max((f_limit - self.values.len() as f64 / n).abs())
    }
}

pub fn cdf_v_empirical(
    family: &ModelFamily,
    theta_star: &Vector,
    u: &Vector,
    n_mc: usize,
    rng: &mut RandomSource,
) -> Result<EmpiricalCdf, AnalysisError> {
    let norm = family.family_norm(u)?;
    if (norm - 1.0).abs() > 1e-9 {
        return Err(AnalysisError::Domain(format!("direction must have unit norm, got {norm}")));
    }
    if n_mc == 0 {
        return Err(AnalysisError::Domain("n_mc must be positive".into()));
    }
    let mut values = Vec::new();
    for _ in 0..n_mc {
        let pair = family.sample_pair(theta_star, rng)?;
        if let Some(v) = family.deviation_statistic(theta_star, u, &pair)? {
            values.push(v);
        }
    }
    values.sort_unstable_by(f64::total_cmp);
    let p_informative = values.len() as f64 / n_mc as f64;
    Ok(EmpiricalCdf {
        values,
        n_mc,
        p_informative,
    })
}

/// Constants of the finite-sample deviation bound. `b` and `c` are `None` where no closed
/// form exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    pub a: f64,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

/// Laplace: (2b, 8, 16b). Gaussian: A = π(d−1)Γ(d/2) / (2Γ((d−1)/2)) for d ≥ 2 and
/// A = 1/F′(0) = √π for d = 1, with B and C unavailable.
pub fn theorem_constants(family: &ModelFamily) -> Result<TheoremConstants, AnalysisError> {
    match family {
        ModelFamily::Laplace { scale } => Ok(TheoremConstants {
            a: 2.0 * scale,
            b: Some(8.0),
            c: Some(16.0 * scale),
        }),
        ModelFamily::Gaussian(g) => {
            let d = g.dim();
            let a = if d == 1 {
                PI.sqrt()
            } else {
                let df = d as f64;
                PI * (df - 1.0) * (ln_gamma(df / 2.0) - ln_gamma((df - 1.0) / 2.0)).exp() / 2.0
            };
            Ok(TheoremConstants { a, b: None, c: None })
        }
        ModelFamily::Rayleigh => Err(AnalysisError::Unavailable("Rayleigh bound constants".into())),
    }
}

/// E|U₁| for U uniform on the unit sphere of R^d: 2Γ(d/2) / ((d−1)√π Γ((d−1)/2)).
pub fn mean_abs_u1(d: usize) -> Result<f64, AnalysisError> {
    if d < 2 {
        return Err(AnalysisError::Domain(format!("dimension must be ≥ 2, got {d}")));
    }
    Ok(2.0 / (d as f64 - 1.0) * sphere_marginal_constant(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap(b: f64) -> ModelFamily {
        ModelFamily::laplace(b).unwrap()
    }

    fn gauss(d: usize) -> ModelFamily {
        ModelFamily::gaussian_identity(d).unwrap()
    }

    #[test]
    fn laplace_cdf_examples() {
        assert_eq!(cdf_v_analytic(&lap(1.0), f64::INFINITY).unwrap(), 0.25);
        assert!((cdf_v_analytic(&lap(1.0), 2f64.ln() / 2.0).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(inverse_cdf_v(&lap(1.0), 0.0).unwrap(), 0.0);
        assert!((inverse_cdf_v(&lap(1.0), 0.125).unwrap() - 2f64.ln() / 2.0).abs() < 1e-15);
        assert!(inverse_cdf_v(&lap(1.0), 0.25).is_err());
        for b in [0.5, 1.0, 3.0] {
            for k in 0..100 {
                let x = 0.2499 * k as f64 / 99.0;
                let back = cdf_v_analytic(&lap(b), inverse_cdf_v(&lap(b), x).unwrap()).unwrap();
                assert!((back - x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_cdf_examples() {
        assert_eq!(cdf_v_analytic(&gauss(1), 0.0).unwrap(), 0.0);
        let h = 1e-6;
        let slope = cdf_v_analytic(&gauss(1), h).unwrap() / h;
        assert!((slope - 1.0 / PI.sqrt()).abs() < 1e-6);
        assert!((slope - 0.5642).abs() < 1e-4);
        for d in [2, 3, 10] {
            let big = cdf_v_analytic(&gauss(d), 1e4).unwrap();
            assert!((big - 0.5).abs() < 1e-4, "d={d}: {big}");
            let fd = (cdf_v_analytic(&gauss(d), 1e-4).unwrap()) / 1e-4;
            assert!((fd - cdf_v_slope_at_zero(&gauss(d)).unwrap()).abs() < 1e-4, "d={d}");
        }
    }

    #[test]
    fn cdfs_monotone_and_bounded() {
        for fam in [gauss(1), gauss(2), gauss(5), lap(1.0), lap(2.0)] {
            let limit = informative_probability(&fam).unwrap();
            let mut prev = 0.0;
            for k in 0..1000 {
                let f = cdf_v_analytic(&fam, k as f64 * 0.01).unwrap();
                assert!(f >= prev - 1e-12 && f <= limit + 1e-12);
                prev = f;
            }
        }
    }

    #[test]
    fn laplace_a_is_reciprocal_slope() {
        for b in [1.0, 2.0, 0.3] {
            let h = 1e-7;
            let fd = cdf_v_analytic(&lap(b), h).unwrap() / h;
            let a = theorem_constants(&lap(b)).unwrap().a;
            assert!((1.0 / fd - a).abs() < 1e-6 * a.max(1.0));
        }
    }

    #[test]
    fn theorem_constant_examples() {
        let c = theorem_constants(&lap(1.0)).unwrap();
        assert_eq!((c.a, c.b, c.c), (2.0, Some(8.0), Some(16.0)));
        let c = theorem_constants(&lap(2.0)).unwrap();
        assert_eq!((c.a, c.b, c.c), (4.0, Some(8.0), Some(32.0)));
        let c = theorem_constants(&gauss(2)).unwrap();
        assert!((c.a - PI.sqrt() / 2.0).abs() < 1e-12);
        assert!((c.a - 0.8862).abs() < 1e-4);
        assert_eq!((c.b, c.c), (None, None));
    }

    #[test]
    fn mean_abs_u1_values() {
        assert!((mean_abs_u1(2).unwrap() - 2.0 / PI).abs() < 1e-12);
        assert!((mean_abs_u1(3).unwrap() - 0.5).abs() < 1e-12);
        assert!(mean_abs_u1(1).is_err());
        let mut prev = 1.0;
        for d in 2..60 {
            let m = mean_abs_u1(d).unwrap();
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn empirical_matches_analytic() {
        let mut rng = RandomSource::seed_from_u64(17);
        for fam in [gauss(1), gauss(3), lap(2.0)] {
            let d = fam.dim();
            let u = fam.normalize_direction(&Vector::from_fn(d, |i, _| 1.0 + i as f64)).unwrap();
            let theta = Vector::from_element(d, 0.4);
            let emp = cdf_v_empirical(&fam, &theta, &u, 50_000, &mut rng).unwrap();
            let limit = informative_probability(&fam).unwrap();
            let ks = emp.ks_distance(|e| cdf_v_analytic(&fam, e).unwrap(), limit);
            assert!(ks < 0.015, "{}: {ks}", fam.name());
            let se = (limit * (1.0 - limit) / 50_000f64).sqrt();
            assert!((emp.p_informative - limit).abs() < 4.0 * se);
        }
    }

    #[test]
    fn empirical_eval_counts() {
        let e = EmpiricalCdf {
            values: vec![0.1, 0.2, 0.2, 0.5],
            n_mc: 8,
            p_informative: 0.5,
        };
        assert_eq!(e.eval(0.0), 0.0);
        assert_eq!(e.eval(0.2), 3.0 / 8.0);
        assert_eq!(e.eval(9.0), 0.5);
    }
}
