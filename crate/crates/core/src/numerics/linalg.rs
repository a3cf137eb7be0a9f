use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::NumericsError;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// The constraint `a·θ ≥ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub a: Vector,
    pub b: f64,
}

impl HalfSpace {
    pub fn new(a: Vector, b: f64) -> Self {
        Self { a, b }
    }

    /// `a·θ − b`; non-negative exactly when θ satisfies the constraint.
    pub fn slack(&self, theta: &Vector) -> f64 {
        self.a.dot(theta) - self.b
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

/// Per-coordinate bounds `lower ≤ θ ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lower: Vector,
    pub upper: Vector,
}

impl BoxBounds {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self, NumericsError> {
        check_dim(lower.len(), upper.len())?;
        for (l, u) in lower.iter().zip(upper.iter()) {
            if !l.is_finite() || !u.is_finite() {
                return Err(NumericsError::InvalidBounds("bounds must be finite".into()));
            }
            if l >= u {
                return Err(NumericsError::InvalidBounds(format!(
                    "lower {l} is not below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self, NumericsError> {
        Self::new(Vector::from_element(dim, lo), Vector::from_element(dim, hi))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &Vector, tol: f64) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(t, (l, u))| *t >= l - tol && *t <= u + tol)
    }

    /// The box written as `2d` halfspaces.
    pub fn as_halfspaces(&self) -> Vec<HalfSpace> {
        let d = self.dim();
        let mut rows = Vec::with_capacity(2 * d);
        for j in 0..d {
            let mut e = Vector::zeros(d);
            e[j] = 1.0;
            rows.push(HalfSpace::new(e.clone(), self.lower[j]));
            rows.push(HalfSpace::new(-e, -self.upper[j]));
        }
        rows
    }

    pub fn clamp(&self, theta: &Vector) -> Vector {
        Vector::from_iterator(
            theta.len(),
            theta
                .iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(t, (l, u))| t.clamp(*l, *u)),
        )
    }
}

pub fn check_dim(expected: usize, found: usize) -> Result<(), NumericsError> {
    if expected == found {
        Ok(())
    } else {
        Err(NumericsError::DimensionMismatch { expected, found })
    }
}

fn check_square(m: &Matrix) -> Result<(), NumericsError> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(NumericsError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// Rejects non-square matrices and those asymmetric beyond `tol` (relative to the largest entry).
pub fn check_symmetric(m: &Matrix, tol: f64) -> Result<(), NumericsError> {
    check_square(m)?;
    let scale = m.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > tol * scale {
        return Err(NumericsError::NotSymmetric { asymmetry: worst });
    }
    Ok(())
}

/// Lower-triangular `L` with `L Lᵀ = m`.
pub fn cholesky(m: &Matrix) -> Result<Matrix, NumericsError> {
    check_symmetric(m, 1e-12)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite("cholesky input"));
    }
    Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or(NumericsError::NotPositiveDefinite)
}

pub fn spd_inverse(m: &Matrix) -> Result<Matrix, NumericsError> {
    check_symmetric(m, 1e-12)?;
    let inv = Cholesky::new(m.clone())
        .ok_or(NumericsError::NotPositiveDefinite)?
        .inverse();
    // symmetrize away rounding noise
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Symmetric square root and its inverse, `(m^{1/2}, m^{-1/2})`.
pub fn sym_sqrt(m: &Matrix) -> Result<(Matrix, Matrix), NumericsError> {
    check_symmetric(m, 1e-12)?;
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return Err(NumericsError::NotPositiveDefinite);
    }
    let v = &eig.eigenvectors;
    let root = v * Matrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * v.transpose();
    let inv_root =
        v * Matrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * v.transpose();
    Ok((
        (&root + root.transpose()) * 0.5,
        (&inv_root + inv_root.transpose()) * 0.5,
    ))
}

pub fn mat_vec(m: &Matrix, v: &Vector) -> Result<Vector, NumericsError> {
    check_dim(m.ncols(), v.len())?;
    Ok(m * v)
}

/// `vᵀ m v`.
pub fn quad_form(m: &Matrix, v: &Vector) -> Result<f64, NumericsError> {
    check_square(m)?;
    check_dim(m.ncols(), v.len())?;
    Ok(v.dot(&(m * v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RandomSource;

    #[test]
    fn cholesky_identity_and_diagonal() {
        let l = cholesky(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(l, Matrix::identity(3, 3));
        let l = cholesky(&Matrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0])).unwrap();
        assert_eq!(l, Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut rng = RandomSource::seed_from_u64(11);
        for _ in 0..20 {
            let b = Matrix::from_fn(5, 5, |_, _| rng.standard_normal());
            let a = b.transpose() * &b + Matrix::identity(5, 5);
            let l = cholesky(&a).unwrap();
            let rel = (&l * l.transpose() - &a).norm() / a.norm();
            assert!(rel <= 1e-10, "relative error {rel}");
            assert!(l.upper_triangle().iter().enumerate().all(|(k, v)| {
                let (i, j) = (k % 5, k / 5);
                i >= j || *v == 0.0
            }));
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_and_asymmetric() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(cholesky(&m), Err(NumericsError::NotPositiveDefinite));
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(cholesky(&m), Err(NumericsError::NotSymmetric { .. })));
        let m = Matrix::zeros(2, 3);
        assert!(matches!(cholesky(&m), Err(NumericsError::NotSquare { .. })));
    }

    #[test]
    fn sym_sqrt_squares_back() {
        let mut rng = RandomSource::seed_from_u64(3);
        let b = Matrix::from_fn(4, 4, |_, _| rng.standard_normal());
        let a = b.transpose() * &b + Matrix::identity(4, 4);
        let (r, ri) = sym_sqrt(&a).unwrap();
        assert!((&r * &r - &a).norm() <= 1e-10 * a.norm());
        assert!((&r * &ri - Matrix::identity(4, 4)).norm() <= 1e-10);
        let inv = spd_inverse(&a).unwrap();
        assert!((&inv * &a - Matrix::identity(4, 4)).norm() <= 1e-10);
    }

    #[test]
    fn dimension_checks() {
        let m = Matrix::identity(2, 2);
        assert!(mat_vec(&m, &Vector::zeros(3)).is_err());
        assert!(quad_form(&m, &Vector::zeros(1)).is_err());
        assert_eq!(quad_form(&m, &Vector::from_vec(vec![3.0, 4.0])).unwrap(), 25.0);
        assert!(BoxBounds::uniform(2, 1.0, 1.0).is_err());
        assert!(BoxBounds::new(Vector::zeros(2), Vector::from_element(3, 1.0)).is_err());
    }

    #[test]
    fn box_halfspaces_match_contains() {
        let bx = BoxBounds::uniform(2, -1.0, 2.0).unwrap();
        let rows = bx.as_halfspaces();
        for p in [[0.0, 0.0], [-1.5, 0.0], [0.0, 2.5], [2.0, -1.0]] {
            let t = Vector::from_row_slice(&p);
            let inside = rows.iter().all(|h| h.slack(&t) >= 0.0);
            assert_eq!(inside, bx.contains(&t, 0.0));
        }
    }
}
