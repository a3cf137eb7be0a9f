//! The feasible set of a deterministic-channel dataset as a polytope in parameter space.

use std::io::Write;

use thiserror::Error;

use crate::models::{HalfSpaceRow, ModelError, ModelFamily};
use crate::numerics::{lp_solve, quad_form, BoxBounds, HalfSpace, Matrix, NumericsError, Vector};
use crate::preferences::Triplet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("no triplets")]
    EmptyData,
    #[error("the constraint set is empty")]
    Infeasible,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(NumericsError),
}

impl From<NumericsError> for GeometryError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::Infeasible => GeometryError::Infeasible,
            NumericsError::DimensionMismatch { expected, found } => {
                GeometryError::Dimension { expected, found }
            }
            other => GeometryError::Numerics(other),
        }
    }
}

/// `{θ ∈ box : a·θ ≥ b for every row}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub dim: usize,
    pub rows: Vec<HalfSpace>,
    pub bounds: BoxBounds,
    /// Triplets with z = 0, which carry no constraint.
    pub ties: usize,
    /// Triplets with x = y, whose row is trivially satisfied.
    pub degenerate: usize,
}

/// Closed interval; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

/// Norm used to rank candidates in [`support_distance`].
#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    L1,
    L2,
    /// `sqrt(vᵀ M v)`.
    Metric(Matrix),
}

impl NormKind {
    pub fn eval(&self, v: &Vector) -> f64 {
        match self {
            NormKind::L1 => v.lp_norm(1),
            NormKind::L2 => v.norm(),
            NormKind::Metric(m) => quad_form(m, v).unwrap_or(f64::NAN).max(0.0).sqrt(),
        }
    }
}

fn dim_check(expected: usize, found: usize) -> Result<(), GeometryError> {
    if expected == found {
        Ok(())
    } else {
        Err(GeometryError::Dimension { expected, found })
    }
}

pub fn build_polytope(
    family: &ModelFamily,
    triplets: &[Triplet],
    bounds: &BoxBounds,
) -> Result<Polytope, GeometryError> {
    if triplets.is_empty() {
        return Err(GeometryError::EmptyData);
    }
    let dim = family.dim();
    dim_check(dim, bounds.dim())?;
    let mut rows = Vec::with_capacity(triplets.len());
    let (mut ties, mut degenerate) = (0, 0);
    for t in triplets {
        match family.constraint_row(&t.pair, t.z)? {
            HalfSpaceRow::Half(h) => rows.push(h),
            HalfSpaceRow::Tie => ties += 1,
            HalfSpaceRow::Degenerate => degenerate += 1,
        }
    }
    Ok(Polytope {
        dim,
        rows,
        bounds: bounds.clone(),
        ties,
        degenerate,
    })
}

impl Polytope {
    /// The box alone.
    pub fn from_box(bounds: &BoxBounds) -> Self {
        Self {
            dim: bounds.dim(),
            rows: Vec::new(),
            bounds: bounds.clone(),
            ties: 0,
            degenerate: 0,
        }
    }

    pub fn with_rows(bounds: &BoxBounds, rows: Vec<HalfSpace>) -> Result<Self, GeometryError> {
        for r in &rows {
            dim_check(bounds.dim(), r.dim())?;
        }
        Ok(Self {
            dim: bounds.dim(),
            rows,
            bounds: bounds.clone(),
            ties: 0,
            degenerate: 0,
        })
    }

    /// Data rows followed by the 2d box rows.
    pub fn all_rows(&self) -> Vec<HalfSpace> {
        let mut all = self.rows.clone();
        all.extend(self.bounds.as_halfspaces());
        all
    }

    pub fn contains(&self, theta: &Vector, tol: f64) -> Result<bool, GeometryError> {
        dim_check(self.dim, theta.len())?;
        Ok(self.bounds.contains(theta, tol) && self.rows.iter().all(|h| h.slack(theta) >= -tol))
    }

    /// Largest violation `max(0, b − a·θ)` over rows and box.
    pub fn max_violation(&self, theta: &Vector) -> f64 {
        self.all_rows()
            .iter()
            .map(|h| -h.slack(theta))
            .fold(0.0, f64::max)
    }

    pub fn reduce_to_interval(&self) -> Result<Interval, GeometryError> {
        if self.dim != 1 {
            return Err(GeometryError::Dimension {
                expected: 1,
                found: self.dim,
            });
        }
        let mut lo = self.bounds.lower[0];
        let mut hi = self.bounds.upper[0];
        for h in &self.rows {
            let a = h.a[0];
            if a > 0.0 {
                lo = lo.max(h.b / a);
            } else if a < 0.0 {
                hi = hi.min(h.b / a);
            } else if h.b > 0.0 {
                return Ok(Interval {
                    lo: f64::INFINITY,
                    hi: f64::NEG_INFINITY,
                });
            }
        }
        Ok(Interval { lo, hi })
    }

    /// Center and radius of the largest Euclidean ball inside the polytope.
    pub fn chebyshev_center(&self) -> Result<(Vector, f64), GeometryError> {
        let d = self.dim;
        if d == 1 {
            let iv = self.reduce_to_interval()?;
            if iv.is_empty() {
                return Err(GeometryError::Infeasible);
            }
            return Ok((Vector::from_element(1, 0.5 * (iv.lo + iv.hi)), 0.5 * iv.len()));
        }
        let widths = &self.bounds.upper - &self.bounds.lower;
        let r_max = 0.5 * widths.min();
        let lower = self.bounds.lower.clone().insert_row(d, 0.0);
        let upper = self.bounds.upper.clone().insert_row(d, r_max);
        let lifted = BoxBounds::new(lower, upper)?;
        let lift = |h: &HalfSpace| {
            let norm = h.a.norm();
            HalfSpace::new(h.a.clone().insert_row(d, -norm), h.b)
        };
        let rows: Vec<HalfSpace> = self.all_rows().iter().map(lift).collect();
        let mut objective = Vector::zeros(d + 1);
        objective[d] = 1.0;
        let sol = lp_solve(&objective, &rows, &lifted)?;
        let center = sol.point.rows(0, d).into_owned();
        Ok((center, sol.point[d].max(0.0)))
    }

    /// Vertex maximizing the all-ones direction; the upper end in one dimension.
    pub fn feasible_point(&self) -> Result<Vector, GeometryError> {
        if self.dim == 1 {
            let iv = self.reduce_to_interval()?;
            if iv.is_empty() {
                return Err(GeometryError::Infeasible);
            }
            return Ok(Vector::from_element(1, iv.hi));
        }
        Ok(lp_solve(&Vector::from_element(self.dim, 1.0), &self.rows, &self.bounds)?.point)
    }

    /// Maximizes `s·(θ − θ_ref)` for each direction and returns the candidate farthest
    /// from `θ_ref` in `norm`. A lower bound on the true maximum distance, exact in one
    /// dimension.
    pub fn support_distance(
        &self,
        theta_ref: &Vector,
        directions: &[Vector],
        norm: &NormKind,
    ) -> Result<(Vector, f64), GeometryError> {
        dim_check(self.dim, theta_ref.len())?;
        if self.dim == 1 {
            let iv = self.reduce_to_interval()?;
            if iv.is_empty() {
                return Err(GeometryError::Infeasible);
            }
            let (lo, hi) = (
                Vector::from_element(1, iv.lo),
                Vector::from_element(1, iv.hi),
            );
            let (dl, dh) = (norm.eval(&(&lo - theta_ref)), norm.eval(&(&hi - theta_ref)));
            return Ok(if dl > dh { (lo, dl) } else { (hi, dh) });
        }
        let mut best: Option<(Vector, f64)> = None;
        for s in directions {
            dim_check(self.dim, s.len())?;
            let p = lp_solve(s, &self.rows, &self.bounds)?.point;
            let dist = norm.eval(&(&p - theta_ref));
            if best.as_ref().is_none_or(|(_, b)| dist > *b) {
                best = Some((p, dist));
            }
        }
        best.ok_or(GeometryError::EmptyData)
    }

    /// One line per row: `a...,b`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for h in &self.rows {
            let mut line: Vec<String> = h.a.iter().map(|v| format!("{v:.16e}")).collect();
            line.push(format!("{:.16e}", h.b));
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}
