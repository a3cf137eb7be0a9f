//! Metric projection onto an intersection of halfspaces.
//!
//! Cyclic Dykstra runs in whitened coordinates `φ = Lᵀθ` (`metric = L Lᵀ`), where
//! the metric projection becomes Euclidean. Only rows violated so far are cycled;
//! any row violated by the result of a sub-problem joins the working set and the
//! sub-problem restarts, so the final answer is the projection onto the full set.
//! Periodically the active rows suggested by Dykstra's correction terms are solved
//! exactly; the result is accepted only when it passes the KKT conditions against
//! every row.

use nalgebra::Cholesky;

use super::{cholesky, check_dim, HalfSpace, Matrix, NumericsError, Vector};

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    /// Dykstra stops once the correction terms move less than this in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub point: Vector,
    pub sweeps: usize,
    /// Whether the exact active-set solve certified the result.
    pub certified: bool,
}

const POLISH_EVERY: usize = 25;
const KKT_FEAS_TOL: f64 = 1e-11;
const ADD_TOL: f64 = 1e-11;

struct Whitened {
    d: usize,
    normals: Vec<f64>,
    offsets: Vec<f64>,
}

impl Whitened {
    fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.d..(i + 1) * self.d]
    }

    /// `b_i − ã_i·x`; positive when row `i` is violated.
    fn violation(&self, i: usize, x: &[f64]) -> f64 {
        self.offsets[i] - dot(self.normal(i), x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projection of `point` onto `{θ : a·θ ≥ b ∀ rows}` in the norm `‖v‖² = vᵀ metric v`.
pub fn dykstra_project(
    point: &Vector,
    halfspaces: &[HalfSpace],
    metric: &Matrix,
    opts: ProjectionOptions,
) -> Result<Projection, NumericsError> {
    let d = point.len();
    check_dim(d, metric.nrows())?;
    for h in halfspaces {
        check_dim(d, h.dim())?;
    }
    if halfspaces.iter().all(|h| h.slack(point) >= 0.0) {
        return Ok(Projection {
            point: point.clone(),
            sweeps: 0,
            certified: true,
        });
    }

    let l = cholesky(metric)?;
    let lt = l.transpose();
    let p: Vec<f64> = (&lt * point).iter().copied().collect();

    // ã = L⁻¹a, normalized to unit length together with b
    let mut normals = Vec::with_capacity(halfspaces.len() * d);
    let mut offsets = Vec::with_capacity(halfspaces.len());
    for h in halfspaces {
        let w = l
            .solve_lower_triangular(&h.a)
            .ok_or(NumericsError::NotPositiveDefinite)?;
        let n = w.norm();
        if n == 0.0 {
            // a zero normal is either vacuous or infeasible
            if h.b > 0.0 {
                return Err(NumericsError::Infeasible);
            }
            normals.extend(std::iter::repeat(0.0).take(d));
            offsets.push(f64::NEG_INFINITY);
            continue;
        }
        normals.extend(w.iter().map(|v| v / n));
        offsets.push(h.b / n);
    }
    let rows = Whitened { d, normals, offsets };

    let mut working: Vec<usize> = (0..halfspaces.len())
        .filter(|&i| rows.violation(i, &p) > 0.0)
        .collect();
    let mut in_working = vec![false; halfspaces.len()];
    for &i in &working {
        in_working[i] = true;
    }

    let mut sweeps = 0;
    loop {
        let outcome = match dykstra_cycle(&rows, &working, &p, opts, &mut sweeps) {
            Ok(o) => o,
            // Slow Dykstra on near-parallel rows: finish with the exact dual method.
            Err(NumericsError::MaxIterExceeded { .. }) | Err(NumericsError::Infeasible) => {
                let x = dual_active_set(&rows, &p)?;
                return Ok(finish(&lt, x, sweeps, true));
            }
            Err(e) => return Err(e),
        };
        let x = match outcome {
            Cycle::Certified(x) => {
                return Ok(finish(&lt, x, sweeps, true));
            }
            Cycle::Converged(x) => x,
        };
        let newly: Vec<usize> = (0..halfspaces.len())
            .filter(|&i| !in_working[i] && rows.violation(i, &x) > ADD_TOL)
            .collect();
        if newly.is_empty() {
            return Ok(finish(&lt, x, sweeps, false));
        }
        for i in newly {
            in_working[i] = true;
            working.push(i);
        }
    }
}

fn finish(lt: &Matrix, x: Vec<f64>, sweeps: usize, certified: bool) -> Projection {
    let phi = Vector::from_vec(x);
    let point = lt
        .solve_upper_triangular(&phi)
        .expect("triangular factor of an SPD matrix is invertible");
    Projection {
        point,
        sweeps,
        certified,
    }
}

enum Cycle {
    /// KKT-certified projection onto the full constraint set.
    Certified(Vec<f64>),
    /// Dykstra converged on the working rows only.
    Converged(Vec<f64>),
}

fn dykstra_cycle(
    rows: &Whitened,
    working: &[usize],
    p: &[f64],
    opts: ProjectionOptions,
    sweeps: &mut usize,
) -> Result<Cycle, NumericsError> {
    let d = rows.d;
    let k = working.len();
    let mut x = p.to_vec();
    // correction for row r is −mult[r]·ã_r, so only the multiplier is stored
    let mut mult = vec![0.0; k];
    let mut since_polish = 0;
    loop {
        if *sweeps >= opts.max_sweeps {
            let residual = working
                .iter()
                .map(|&i| rows.violation(i, &x))
                .fold(0.0f64, f64::max);
            if residual > 1e-6 {
                return Err(NumericsError::Infeasible);
            }
            return Err(NumericsError::MaxIterExceeded {
                iterations: *sweeps,
                residual,
                last: Vector::from_vec(x),
                trace: Vec::new(),
            });
        }
        *sweeps += 1;
        let mut change = 0.0;
        for (r, &i) in working.iter().enumerate() {
            let a = rows.normal(i);
            // y = x + correction; project y onto row i
            let y_dot = dot(a, &x) - mult[r];
            let viol = rows.offsets[i] - y_dot;
            let new_mult = viol.max(0.0);
            let step = new_mult - mult[r];
            if step != 0.0 {
                for j in 0..d {
                    x[j] += step * a[j];
                }
            }
            change += step * step;
            mult[r] = new_mult;
        }
        since_polish += 1;
        let converged = change.sqrt() <= opts.tol;
        if converged || since_polish >= POLISH_EVERY {
            since_polish = 0;
            let active: Vec<usize> = working
                .iter()
                .zip(&mult)
                .filter(|(_, &m)| m > 0.0)
                .map(|(&i, _)| i)
                .collect();
            if let Some(z) = polish(rows, &active, p) {
                return Ok(Cycle::Certified(z));
            }
        }
        if converged {
            return Ok(Cycle::Converged(x));
        }
    }
}

/// Solves `min ‖z − p‖²` with the rows in `active` held at equality, dropping rows
/// with negative multipliers; returns `z` only if it satisfies KKT for all rows.
fn polish(rows: &Whitened, active: &[usize], p: &[f64]) -> Option<Vec<f64>> {
    let d = rows.d;
    let mut set: Vec<usize> = active.to_vec();
    while !set.is_empty() && set.len() <= d {
        let k = set.len();
        let gram = Matrix::from_fn(k, k, |r, c| dot(rows.normal(set[r]), rows.normal(set[c])));
        let rhs = Vector::from_fn(k, |r, _| rows.violation(set[r], p));
        let lambda = Cholesky::new(gram)?.solve(&rhs);
        let (worst, worst_val) = lambda
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (r, &v)| if v < acc.1 { (r, v) } else { acc });
        if worst_val < 0.0 {
            set.remove(worst);
            continue;
        }
        let mut z = p.to_vec();
        for (r, &i) in set.iter().enumerate() {
            let a = rows.normal(i);
            for j in 0..d {
                z[j] += lambda[r] * a[j];
            }
        }
        let scale = 1.0 + z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let feasible = (0..rows.offsets.len()).all(|i| rows.violation(i, &z) <= KKT_FEAS_TOL * scale);
        return feasible.then_some(z);
    }
    None
}

/// Exact projection by the dual active-set method of Goldfarb and Idnani with identity
/// Hessian: repeatedly add the most violated row, dropping active rows whose multiplier
/// would turn negative. Active normals stay linearly independent, so at most `d` are kept.
fn dual_active_set(rows: &Whitened, p: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let d = rows.d;
    let m = rows.offsets.len();
    let mut z = p.to_vec();
    let mut active: Vec<usize> = Vec::new();
    let mut lam: Vec<f64> = Vec::new();
    let max_adds = 20 * (m + d);
    for _ in 0..max_adds {
        let scale = 1.0 + z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let (q, worst) = (0..m)
            .map(|i| (i, rows.violation(i, &z)))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        if worst <= KKT_FEAS_TOL * scale {
            return Ok(z);
        }
        let nq = Vector::from_row_slice(rows.normal(q));
        let mut lam_q = 0.0;
        loop {
            let k = active.len();
            let (dz, r) = if k == 0 {
                (nq.clone(), Vector::zeros(0))
            } else {
                let n = Matrix::from_fn(d, k, |j, c| rows.normal(active[c])[j]);
                let qr = n.qr();
                let qm = qr.q();
                let qtn = qm.transpose() * &nq;
                let r = qr
                    .r()
                    .solve_upper_triangular(&qtn)
                    .ok_or(NumericsError::Infeasible)?;
                (&nq - &qm * &qtn, r)
            };
            let (mut t1, mut block) = (f64::INFINITY, None);
            for j in 0..k {
                if r[j] > 0.0 && lam[j] / r[j] < t1 {
                    t1 = lam[j] / r[j];
                    block = Some(j);
                }
            }
            let curv = nq.dot(&dz);
            let t2 = if dz.norm() <= 1e-12 {
                f64::INFINITY
            } else {
                rows.violation(q, &z) / curv
            };
            if t1.is_infinite() && t2.is_infinite() {
                return Err(NumericsError::Infeasible);
            }
            let t = t1.min(t2);
            if t2.is_finite() {
                for j in 0..d {
                    z[j] += t * dz[j];
                }
            }
            for j in 0..k {
                lam[j] -= t * r[j];
            }
            lam_q += t;
            if t2 <= t1 {
                active.push(q);
                lam.push(lam_q);
                break;
            }
            let j = block.expect("finite partial step has a blocking row");
            active.remove(j);
            lam.remove(j);
        }
    }
    Err(NumericsError::MaxIterExceeded {
        iterations: max_adds,
        residual: (0..m).map(|i| rows.violation(i, &z)).fold(0.0, f64::max),
        last: Vector::from_vec(z),
        trace: Vec::new(),
    })
}
