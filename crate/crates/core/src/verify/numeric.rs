//! Floating-point evaluation, strictly feasible points and ray exits.

use nalgebra::{DMatrix, DVector};

use crate::quadratic::NumericQuadratic;

/// Rays that have not left the set by this parameter are treated as unbounded.
pub const RAY_HORIZON: f64 = 1e12;

const SUBGRADIENT_ITERS: usize = 5000;
const NEWTON_ITERS: usize = 20;

pub fn max_value(quads: &[NumericQuadratic], x: &[f64]) -> f64 {
    quads
        .iter()
        .map(|q| q.value(x))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn axpy(x: &[f64], t: f64, u: &[f64]) -> Vec<f64> {
    x.iter().zip(u).map(|(a, b)| a + t * b).collect()
}

/// `f(x + t u) = c0 + c1 t + c2 t²`.
fn ray_coefficients(q: &NumericQuadratic, x: &[f64], u: &[f64]) -> (f64, f64, f64) {
    let au = q.mat_vec(u);
    (q.value(x), dot(&q.gradient(x), u), dot(&au, u))
}

/// Smallest `t > 0` with `f(x + t u) = 0`, given `f(x) < 0`.
fn first_root(c0: f64, c1: f64, c2: f64) -> Option<f64> {
    if c2 > 0.0 {
        let disc = (c1 * c1 - 4.0 * c2 * c0).max(0.0);
        let sq = disc.sqrt();
        // Avoid cancellation in whichever branch would subtract nearly equal terms.
        let t = if c1 >= 0.0 {
            -2.0 * c0 / (c1 + sq)
        } else {
            (-c1 + sq) / (2.0 * c2)
        };
        (t > 0.0).then_some(t)
    } else if c1 > 0.0 {
        Some(-c0 / c1)
    } else {
        None
    }
}

/// Exit parameter of the ray `x + t u` from an interior point `x`, if it leaves within [`RAY_HORIZON`].
pub fn ray_exit(quads: &[NumericQuadratic], x: &[f64], u: &[f64]) -> Option<f64> {
    quads
        .iter()
        .filter_map(|q| {
            let (c0, c1, c2) = ray_coefficients(q, x, u);
            first_root(c0, c1, c2)
        })
        .fold(None, |acc: Option<f64>, t| {
            Some(acc.map_or(t, |a| a.min(t)))
        })
        .filter(|&t| t <= RAY_HORIZON)
}

/// A point with `max_j f_j < 0`: subgradient descent on `max_j f_j` with steps
/// `s0/√(k+1)`, then a damped Newton polish of the log barrier.
pub fn phase_one(quads: &[NumericQuadratic], start: &[f64]) -> Option<Vec<f64>> {
    if quads.is_empty() {
        return Some(start.to_vec());
    }
    let mut x = start.to_vec();
    let mut best = x.clone();
    let mut best_val = max_value(quads, &x);
    let step0 = 1.0_f64.max(norm(start));
    for k in 0..SUBGRADIENT_ITERS {
        if best_val < 0.0 {
            break;
        }
        let (j, _) = quads
            .iter()
            .enumerate()
            .map(|(j, q)| (j, q.value(&x)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let g = quads[j].gradient(&x);
        let gn = norm(&g);
        if gn == 0.0 {
            // Minimum of the active piece reached while still infeasible.
            return None;
        }
        let step = step0 / ((k + 1) as f64).sqrt();
        x = axpy(&x, -step / gn, &g);
        let v = max_value(quads, &x);
        if v < best_val {
            best_val = v;
            best = x.clone();
        }
    }
    if best_val >= 0.0 {
        return None;
    }
    Some(barrier_polish(quads, best))
}

fn barrier(quads: &[NumericQuadratic], x: &[f64]) -> Option<f64> {
    let mut total = 0.0;
    for q in quads {
        let v = q.value(x);
        if v >= 0.0 {
            return None;
        }
        total -= (-v).ln();
    }
    Some(total)
}

fn barrier_polish(quads: &[NumericQuadratic], mut x: Vec<f64>) -> Vec<f64> {
    let n = x.len();
    let Some(mut phi) = barrier(quads, &x) else {
        return x;
    };
    for _ in 0..NEWTON_ITERS {
        let mut grad = DVector::<f64>::zeros(n);
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for q in quads {
            let v = -q.value(&x);
            let g = DVector::from_vec(q.gradient(&x));
            grad += &g / v;
            hess += &g * g.transpose() / (v * v);
            for i in 0..n {
                for k in 0..n {
                    hess[(i, k)] += 2.0 * q.matrix[i][k] / v;
                }
            }
        }
        // Unbounded sets give a singular Hessian; a tiny ridge keeps the step defined.
        for i in 0..n {
            hess[(i, i)] += 1e-9;
        }
        let Some(step) = hess.lu().solve(&(-&grad)) else {
            break;
        };
        let mut step: Vec<f64> = step.iter().copied().collect();
        let len = norm(&step);
        if len < 1e-12 {
            break;
        }
        if len > 1.0 {
            step.iter_mut().for_each(|s| *s /= len);
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = axpy(&x, t, &step);
            if let Some(p) = barrier(quads, &cand) {
                if p < phi {
                    x = cand;
                    phi = p;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    x
}
