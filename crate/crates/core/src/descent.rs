//! Gradient descent on the stabilizing set with Barzilai-Borwein trial steps
//! and Armijo backtracking. Objectives return `None` outside the stabilizing
//! set, which the line search treats as a rejected trial.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct DescentSettings<T: Real> {
    pub max_iter: usize,
    /// Stop when `‖g‖_F <= grad_tol · (1 + ‖x‖_F)`.
    pub grad_tol: T,
    /// Sufficient-decrease constant.
    pub armijo: T,
    pub shrink: T,
    pub max_backtracks: usize,
}

impl<T: Real> Default for DescentSettings<T> {
    fn default() -> Self {
        Self {
            max_iter: 5_000,
            grad_tol: T::tol(1e-8),
            armijo: T::lit(1e-4),
            shrink: T::lit(0.5),
            max_backtracks: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No trial step gave sufficient decrease.
    Stalled,
    /// Every trial step left the stabilizing set.
    Unstable,
}

#[derive(Clone, Debug)]
pub struct DescentOutcome<T: Real> {
    pub x: DMatrix<T>,
    pub value: T,
    pub grad_norm: T,
    pub iterations: usize,
    pub stop: StopReason,
    /// Objective at every accepted iterate, starting with `x0`.
    pub history: Vec<T>,
}

impl<T: Real> DescentOutcome<T> {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

/// Consecutive rounding-level steps tolerated before giving up.
const FLAT_LIMIT: usize = 10;

fn apply_mask<T: Real>(g: DMatrix<T>, mask: Option<&DMatrix<T>>) -> DMatrix<T> {
    match mask {
        Some(m) => g.component_mul(m),
        None => g,
    }
}

/// Minimizes `f` from `x0`; when `mask` is set only entries where it equals
/// one move. Returns `None` if `f(x0)` is itself infeasible.
pub fn minimize<T, F>(
    x0: DMatrix<T>,
    mask: Option<&DMatrix<T>>,
    f: F,
    settings: &DescentSettings<T>,
) -> Option<DescentOutcome<T>>
where
    T: Real,
    F: Fn(&DMatrix<T>) -> Option<(T, DMatrix<T>)>,
{
    let (mut value, g0) = f(&x0)?;
    let mut g = apply_mask(g0, mask);
    let mut x = x0;
    let mut history = vec![value];
    let mut prev: Option<(DMatrix<T>, DMatrix<T>)> = None;
    let mut step = T::one() / g.norm().max(T::one());
    let mut flat = 0;

    for iter in 0..settings.max_iter {
        let gn = g.norm();
        if gn <= settings.grad_tol * (T::one() + x.norm()) {
            return Some(DescentOutcome {
                x,
                value,
                grad_norm: gn,
                iterations: iter,
                stop: StopReason::Converged,
                history,
            });
        }
        if let Some((px, pg)) = &prev {
            let s = &x - px;
            let y = &g - pg;
            let sy = s.dot(&y);
            if sy > T::zero() {
                step = s.norm_squared() / sy;
            } else {
                step *= T::lit(2.0);
            }
        }
        let lo = T::tol(1e-14);
        step = step.max(lo).min(T::lit(1e12));

        let g2 = gn * gn;
        let mut accepted = None;
        let mut any_feasible = false;
        let mut alpha = step;
        for _ in 0..settings.max_backtracks {
            let trial = &x - &g * alpha;
            if let Some((tv, tg)) = f(&trial) {
                any_feasible = true;
                if tv <= value - settings.armijo * alpha * g2 {
                    accepted = Some((trial, tv, tg, alpha));
                    break;
                }
            }
            alpha *= settings.shrink;
        }
        let Some((nx, nv, ng, used)) = accepted else {
            return Some(DescentOutcome {
                x,
                value,
                grad_norm: gn,
                iterations: iter,
                stop: if any_feasible {
                    StopReason::Stalled
                } else {
                    StopReason::Unstable
                },
                history,
            });
        };
        step = used;
        // decreases at rounding level mean the iterate can no longer improve
        if value - nv <= T::default_epsilon() * T::lit(16.0) * value.abs() {
            flat += 1;
        } else {
            flat = 0;
        }
        prev = Some((std::mem::replace(&mut x, nx), std::mem::replace(&mut g, apply_mask(ng, mask))));
        value = nv;
        history.push(value);
        if flat >= FLAT_LIMIT {
            return Some(DescentOutcome {
                grad_norm: g.norm(),
                x,
                value,
                iterations: iter + 1,
                stop: StopReason::Stalled,
                history,
            });
        }
    }
    let gn = g.norm();
    Some(DescentOutcome {
        x,
        value,
        grad_norm: gn,
        iterations: settings.max_iter,
        stop: if gn <= settings.grad_tol * T::one() {
            StopReason::Converged
        } else {
            StopReason::MaxIterations
        },
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let target = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let scales = DMatrix::from_row_slice(2, 2, &[1.0, 10.0, 100.0, 0.1]);
        let f = |x: &DMatrix<f64>| {
            let d = x - &target;
            let v = 0.5 * d.component_mul(&d).component_mul(&scales).sum();
            Some((v, d.component_mul(&scales)))
        };
        let out = minimize(DMatrix::zeros(2, 2), None, f, &DescentSettings::default()).unwrap();
        assert!(out.converged());
        assert!((out.x - target).norm() < 1e-6);
        assert!(out.history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn mask_freezes_entries() {
        let mask = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let f = |x: &DMatrix<f64>| Some((x.norm_squared(), x * 2.0));
        let x0 = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let out = minimize(x0, Some(&mask), f, &DescentSettings::default()).unwrap();
        assert!(out.x[(0, 0)].abs() < 1e-6);
        assert_eq!(out.x[(0, 1)], 4.0);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // minimize (x+1)² subject to x > 0 (encoded as None)
        let f = |x: &DMatrix<f64>| {
            let v = x[(0, 0)];
            (v > 0.0).then(|| ((v + 1.0).powi(2), DMatrix::from_element(1, 1, 2.0 * (v + 1.0))))
        };
        let settings = DescentSettings {
            max_iter: 200,
            ..Default::default()
        };
        let out = minimize(DMatrix::from_element(1, 1, 1.0), None, f, &settings).unwrap();
        assert!(out.x[(0, 0)] > 0.0);
        assert!(out.x[(0, 0)] < 1e-3);
        assert!(f(&DMatrix::from_element(1, 1, -1.0)).is_none());
    }
}
