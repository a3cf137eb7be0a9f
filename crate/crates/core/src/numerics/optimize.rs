use nalgebra::Cholesky;

use super::{Matrix, NumericsError, Vector};

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
/// Newton decrement (relative to |f|) at which further line searches only see roundoff.
const FLAT_DECREASE: f64 = 16.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum1d {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search on `[lo, hi]`; stops once the bracket is narrower than `tol`.
pub fn minimize_1d<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum1d {
    if hi <= lo {
        let value = f(lo);
        return Minimum1d {
            x: lo,
            value,
            evaluations: 1,
        };
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    // bracket shrinks geometrically; the cap only guards tol below the ulp of the bracket
    while b - a > tol && evaluations < 400 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    evaluations += 1;
    let (x, value) = [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 < best.1 { cand } else { best });
    Minimum1d {
        x,
        value,
        evaluations,
    }
}

/// Grid scan with `points` nodes over `[lo, hi]`, then golden-section inside the best cell pair.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Minimum1d {
    let points = points.max(3);
    let h = (hi - lo) / (points - 1) as f64;
    let node = |i: usize| if i + 1 == points { hi } else { lo + h * i as f64 };
    let mut best = (0usize, f64::INFINITY);
    for i in 0..points {
        let v = f(node(i));
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    let a = node(i.saturating_sub(1));
    let b = node((i + 1).min(points - 1));
    let mut refined = minimize_1d(&mut f, a, b, tol);
    refined.evaluations += points;
    if best.1 < refined.value {
        refined.x = node(i);
        refined.value = best.1;
    }
    refined
}

#[derive(Debug, Clone, Copy)]
pub struct SmoothOptions {
    /// Stop once the gradient's Euclidean norm is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoothOutcome {
    pub x: Vector,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Objective value at every accepted iterate, starting with `x0`.
    pub trace: Vec<f64>,
}

/// Descent with Armijo backtracking; takes Newton steps when a Hessian is supplied
/// and it is positive definite, gradient steps otherwise.
pub fn minimize_smooth(
    f: &dyn Fn(&Vector) -> f64,
    grad: &dyn Fn(&Vector) -> Vector,
    hess: Option<&dyn Fn(&Vector) -> Matrix>,
    x0: &Vector,
    opts: SmoothOptions,
) -> Result<SmoothOutcome, NumericsError> {
    let mut x = x0.clone();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(NumericsError::NonFinite("objective at start point"));
    }
    let mut g = grad(&x);
    let mut trace = vec![fx];
    for it in 0..opts.max_iter {
        let gn = g.norm();
        if gn <= opts.tol {
            return Ok(SmoothOutcome {
                x,
                value: fx,
                grad_norm: gn,
                iterations: it,
                trace,
            });
        }
        let newton = hess.and_then(|h| {
            let hm = h(&x);
            Cholesky::new(hm).map(|c| -c.solve(&g))
        });
        if let Some(dir) = &newton {
            // Predicted decrease below what f can resolve: the Newton step is trusted as is.
            if -g.dot(dir) <= FLAT_DECREASE * (1.0 + fx.abs()) {
                x += dir;
                g = grad(&x);
                fx = f(&x);
                trace.push(fx);
                return Ok(SmoothOutcome {
                    x,
                    value: fx,
                    grad_norm: g.norm(),
                    iterations: it + 1,
                    trace,
                });
            }
        }
        let mut accepted = None;
        for dir in newton.into_iter().chain(std::iter::once(-&g)) {
            let slope = g.dot(&dir);
            if !(slope < 0.0) {
                continue;
            }
            let mut t = 1.0;
            while t >= MIN_STEP {
                let cand = &x + &dir * t;
                let fc = f(&cand);
                if fc.is_finite() && fc <= fx + ARMIJO_C1 * t * slope {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        match accepted {
            Some((xn, fxn)) => {
                x = xn;
                fx = fxn;
                g = grad(&x);
                trace.push(fx);
            }
            None => {
                return Err(NumericsError::LineSearchFailed {
                    residual: gn,
                    last: x,
                })
            }
        }
    }
    let gn = g.norm();
    if gn <= opts.tol {
        return Ok(SmoothOutcome {
            x,
            value: fx,
            grad_norm: gn,
            iterations: opts.max_iter,
            trace,
        });
    }
    Err(NumericsError::MaxIterExceeded {
        iterations: opts.max_iter,
        residual: gn,
        last: x,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::softplus;

    #[test]
    fn golden_on_parabola() {
        let m = minimize_1d(|t| (t - 3.0) * (t - 3.0), 0.0, 10.0, 1e-8);
        assert!((m.x - 3.0).abs() <= 1e-8);
    }

    #[test]
    fn golden_on_flat_minimum() {
        let m = minimize_1d(|t| (t - 1.0).abs() + (t - 2.0).abs(), 0.0, 5.0, 1e-8);
        assert!((m.value - 1.0).abs() <= 1e-8);
        assert!((1.0 - 1e-8..=2.0 + 1e-8).contains(&m.x));
    }

    #[test]
    fn golden_reaches_boundary() {
        let m = minimize_1d(|t| t, -2.0, 3.0, 1e-9);
        assert!((m.x + 2.0).abs() <= 1e-9);
    }

    #[test]
    fn grid_escapes_local_minimum() {
        // global minimum near 4, local near −3
        let f = |t: f64| 0.05 * (t + 3.0).powi(2) * (t - 4.0).powi(2) - t;
        let m = grid_then_golden(f, -10.0, 10.0, 200, 1e-9);
        assert!(m.x > 3.0, "found {}", m.x);
    }

    #[test]
    fn quadratic_newton_single_step() {
        let c = Vector::from_vec(vec![1.0, -2.0, 3.0]);
        let f = |x: &Vector| (x - &c).norm_squared();
        let g = |x: &Vector| (x - &c) * 2.0;
        let h = |_: &Vector| Matrix::identity(3, 3) * 2.0;
        let out = minimize_smooth(&f, &g, Some(&h), &Vector::zeros(3), SmoothOptions::default())
            .unwrap();
        assert!((out.x - &c).norm() <= 1e-12);
        assert!(out.iterations <= 3);
    }

    #[test]
    fn quadratic_gradient_only() {
        let c = Vector::from_vec(vec![0.5, 0.25]);
        let f = |x: &Vector| (x - &c).norm_squared();
        let g = |x: &Vector| (x - &c) * 2.0;
        let out =
            minimize_smooth(&f, &g, None, &Vector::zeros(2), SmoothOptions::default()).unwrap();
        assert!((out.x - &c).norm() <= 1e-6);
    }

    #[test]
    fn separable_logistic_trace_is_monotone() {
        // all margins positive along θ = (1, 1): no finite minimizer
        let rows = [[1.0, 0.5], [0.3, 2.0], [1.5, 1.5]];
        let f = |x: &Vector| {
            rows.iter()
                .map(|r| softplus(-(r[0] * x[0] + r[1] * x[1])))
                .sum::<f64>()
        };
        let g = |x: &Vector| {
            let mut out = Vector::zeros(2);
            for r in &rows {
                let m = r[0] * x[0] + r[1] * x[1];
                let w = -crate::numerics::sigmoid(-m);
                out[0] += w * r[0];
                out[1] += w * r[1];
            }
            out
        };
        let res = minimize_smooth(
            &f,
            &g,
            None,
            &Vector::zeros(2),
            SmoothOptions {
                tol: 1e-14,
                max_iter: 50,
            },
        );
        let trace = match res {
            Ok(o) => o.trace,
            Err(NumericsError::MaxIterExceeded { trace, .. }) => trace,
            Err(e) => panic!("unexpected {e}"),
        };
        assert!(trace.len() > 10);
        assert!(trace.windows(2).all(|w| w[1] < w[0]));
    }
}
