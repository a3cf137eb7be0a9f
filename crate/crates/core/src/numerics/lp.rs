//! Dense two-phase simplex (Bland's rule) wrapped in a constraint-generation loop.
//!
//! The box is always present, so the LP is bounded. Halfspaces enter the dense
//! tableau only once they are violated by the current optimum of the relaxation;
//! the final point is optimal for the full problem because the relaxation's
//! optimum is feasible for every row.

use super::{check_dim, BoxBounds, HalfSpace, NumericsError, Vector};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const GENERATION_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub point: Vector,
    pub value: f64,
    /// Simplex pivots over all generation rounds.
    pub pivots: usize,
}

/// Maximizes `objective·θ` over `{θ : a·θ ≥ b for every halfspace} ∩ box`.
pub fn lp_solve(
    objective: &Vector,
    halfspaces: &[HalfSpace],
    bounds: &BoxBounds,
) -> Result<LpSolution, NumericsError> {
    let d = objective.len();
    check_dim(d, bounds.dim())?;
    if objective.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite("LP objective"));
    }
    for h in halfspaces {
        check_dim(d, h.dim())?;
        if !h.b.is_finite() || h.a.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("LP constraint"));
        }
    }

    let batch = (2 * d).max(10);
    let mut working: Vec<usize> = Vec::new();
    let mut in_working = vec![false; halfspaces.len()];
    let mut pivots = 0;
    loop {
        let rows: Vec<&HalfSpace> = working.iter().map(|&i| &halfspaces[i]).collect();
        let (point, p) = solve_dense(objective, &rows, bounds)?;
        pivots += p;

        let mut violated: Vec<(f64, usize)> = halfspaces
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_working[*i])
            .filter_map(|(i, h)| {
                let s = h.slack(&point);
                (s < -GENERATION_TOL).then(|| (-s / h.a.norm().max(f64::MIN_POSITIVE), i))
            })
            .collect();
        if violated.is_empty() {
            let worst = halfspaces
                .iter()
                .map(|h| h.slack(&point))
                .fold(0.0f64, f64::min);
            if worst < -FEASIBILITY_TOL {
                return Err(NumericsError::NonFinite("LP solution drifted outside a constraint"));
            }
            let value = objective.dot(&point);
            return Ok(LpSolution {
                point,
                value,
                pivots,
            });
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in violated.iter().take(batch) {
            working.push(i);
            in_working[i] = true;
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.get(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on the objective row (index `rows`) until no
    /// allowed column has a positive reduced cost.
    fn optimize(&mut self, allowed: usize, pivots: &mut usize) -> Result<(), NumericsError> {
        let obj = self.rows;
        loop {
            let Some(c) = (0..allowed).find(|&j| self.get(obj, j) > COST_EPS) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.rows {
                let a = self.get(i, c);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                let better = match best {
                    None => true,
                    Some((r, bidx, _)) => {
                        let slack = 1e-12 * (1.0 + r.abs());
                        ratio < r - slack || (ratio <= r + slack && self.basis[i] < bidx)
                    }
                };
                if better {
                    best = Some((ratio, self.basis[i], i));
                }
            }
            let Some((_, _, r)) = best else {
                return Err(NumericsError::NonFinite("LP relaxation unbounded"));
            };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(NumericsError::MaxIterExceeded {
                    iterations: *pivots,
                    residual: f64::NAN,
                    last: Vector::zeros(0),
                    trace: Vec::new(),
                });
            }
        }
    }
}

/// Solves the LP over `rows ∩ box` with a dense tableau in shifted variables `w = θ − lower`.
fn solve_dense(
    objective: &Vector,
    rows: &[&HalfSpace],
    bounds: &BoxBounds,
) -> Result<(Vector, usize), NumericsError> {
    let d = objective.len();
    // G w ≤ g: halfspaces become −a·w ≤ a·l − b; box tops w_j ≤ u_j − l_j
    let m = rows.len() + d;
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    for h in rows {
        coeffs.push(h.a.iter().map(|v| -v).collect());
        rhs.push(h.a.dot(&bounds.lower) - h.b);
    }
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        coeffs.push(e);
        rhs.push(bounds.upper[j] - bounds.lower[j]);
    }

    let n_art = rhs.iter().filter(|&&v| v < 0.0).count();
    let art_start = d + m;
    let cols = d + m + n_art;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * (cols + 1)],
        basis: vec![0; m],
    };
    let w = cols + 1;
    let mut next_art = art_start;
    for i in 0..m {
        let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            t.data[i * w + j] = sign * coeffs[i][j];
        }
        t.data[i * w + d + i] = sign;
        t.data[i * w + cols] = sign * rhs[i];
        if sign < 0.0 {
            t.data[i * w + next_art] = 1.0;
            t.basis[i] = next_art;
            next_art += 1;
        } else {
            t.basis[i] = d + i;
        }
    }

    let mut pivots = 0;
    if n_art > 0 {
        // phase 1: maximize −Σ artificials
        let obj = m;
        for j in 0..cols {
            let c = if j >= art_start { -1.0 } else { 0.0 };
            let mut r = c;
            for i in 0..m {
                if t.basis[i] >= art_start {
                    r += t.get(i, j);
                }
            }
            t.data[obj * w + j] = r;
        }
        t.data[obj * w + cols] = (0..m)
            .filter(|&i| t.basis[i] >= art_start)
            .map(|i| t.rhs(i))
            .sum();
        t.optimize(cols, &mut pivots)?;
        let infeasibility = t.get(obj, cols);
        let scale = 1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeasibility > 1e-9 * scale {
            return Err(NumericsError::Infeasible);
        }
        for i in 0..m {
            if t.basis[i] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| t.get(i, j).abs() > PIVOT_EPS) {
                    t.pivot(i, j);
                    pivots += 1;
                }
            }
        }
    }

    // phase 2 objective row
    let obj = m;
    let cost = |j: usize| if j < d { objective[j] } else { 0.0 };
    for j in 0..cols {
        let mut r = cost(j);
        for i in 0..m {
            let b = t.basis[i];
            if b < art_start {
                r -= cost(b) * t.get(i, j);
            }
        }
        t.data[obj * w + j] = if j >= art_start { 0.0 } else { r };
    }
    t.data[obj * w + cols] = -(0..m)
        .filter(|&i| t.basis[i] < art_start)
        .map(|i| cost(t.basis[i]) * t.rhs(i))
        .sum::<f64>();
    t.optimize(art_start, &mut pivots)?;

    let mut point = bounds.lower.clone();
    for i in 0..m {
        let b = t.basis[i];
        if b < d {
            point[b] += t.rhs(i).max(0.0);
        }
    }
    Ok((bounds.clamp(&point), pivots))
}
