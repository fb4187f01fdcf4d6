//! Closed-loop H2 cost `J(K) = trace(Wᵀ P(K) W)` and its gradient.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;

use super::lyapunov::{SchurLyapunov, STABILITY_TOL};
use super::{GainMatrix, LtiPlant};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cost value with an explicit tag for non-stabilizing gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cost<T> {
    Finite(T),
    /// `K` does not stabilize the plant.
    Unbounded,
}

impl<T: Real> Cost<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Unbounded => None,
        }
    }

    /// `f64` view with `+inf` for the unbounded tag.
    pub fn as_f64(self) -> f64 {
        self.finite().map_or(f64::INFINITY, Real::as_f64)
    }

    /// Difference `self - other`; unbounded when `self` is.
    pub fn minus(self, other: T) -> Cost<T> {
        match self {
            Cost::Finite(v) => Cost::Finite(v - other),
            Cost::Unbounded => Cost::Unbounded,
        }
    }
}

impl<T: Real> PartialOrd for Cost<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => a.partial_cmp(b),
            (Cost::Finite(_), Cost::Unbounded) => Some(Ordering::Less),
            (Cost::Unbounded, Cost::Finite(_)) => Some(Ordering::Greater),
            (Cost::Unbounded, Cost::Unbounded) => Some(Ordering::Equal),
        }
    }
}

impl<T: Real> fmt::Display for Cost<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Unbounded => write!(f, "inf"),
        }
    }
}

/// Cost and (optionally) gradient at one gain, sharing a single Schur factorization.
pub(crate) struct Evaluation<T: Real> {
    pub cost: T,
    pub gradient: Option<DMatrix<T>>,
}

/// `None` when `K` is not stabilizing or the Lyapunov solve breaks down.
pub(crate) fn evaluate<T: Real>(
    plant: &LtiPlant<T>,
    k: &DMatrix<T>,
    with_gradient: bool,
) -> Option<Evaluation<T>> {
    let acl = plant.closed_loop(k);
    let schur = SchurLyapunov::new(&acl, T::lit(STABILITY_TOL)).ok()?;
    let weight = plant.q() + k.transpose() * plant.r() * k;
    let p = schur.solve_observability(&weight).ok()?;
    let cost = (plant.w().transpose() * &p * plant.w()).trace();
    if !cost.is_finite() {
        return None;
    }
    let gradient = if with_gradient {
        let ww = plant.w() * plant.w().transpose();
        let l = schur.solve_controllability(&ww).ok()?;
        Some((plant.r() * k - plant.b().transpose() * &p) * l * T::lit(2.0))
    } else {
        None
    };
    Some(Evaluation { cost, gradient })
}

/// Cost and gradient; `None` outside the stabilizing set.
pub(crate) fn cost_and_gradient<T: Real>(
    plant: &LtiPlant<T>,
    k: &DMatrix<T>,
) -> Option<(T, DMatrix<T>)> {
    evaluate(plant, k, true).map(|e| (e.cost, e.gradient.expect("gradient requested")))
}

pub(crate) fn cost_of<T: Real>(plant: &LtiPlant<T>, k: &DMatrix<T>) -> Cost<T> {
    evaluate(plant, k, false).map_or(Cost::Unbounded, |e| Cost::Finite(e.cost))
}

fn check_dims<T: Real>(plant: &LtiPlant<T>, k: &GainMatrix<T>) -> Result<()> {
    if k.matrix().shape() != (plant.inputs(), plant.states()) {
        return Err(Error::DimensionMismatch(format!(
            "gain {:?} vs plant {}x{}",
            k.matrix().shape(),
            plant.inputs(),
            plant.states()
        )));
    }
    Ok(())
}

/// True iff every eigenvalue of `A - BK` has real part below `-1e-9`.
pub fn is_stabilizing<T: Real>(plant: &LtiPlant<T>, k: &GainMatrix<T>) -> Result<bool> {
    check_dims(plant, k)?;
    Ok(SchurLyapunov::new(&plant.closed_loop(k.matrix()), T::lit(STABILITY_TOL)).is_ok())
}

/// `trace(Wᵀ P W)` with `P` the closed-loop observability Gramian, or
/// [`Cost::Unbounded`] when `K` is not stabilizing.
pub fn closed_loop_cost<T: Real>(plant: &LtiPlant<T>, k: &GainMatrix<T>) -> Result<Cost<T>> {
    check_dims(plant, k)?;
    Ok(cost_of(plant, k.matrix()))
}

/// `∇J(K) = 2 (R K - Bᵀ P) L`, where `L` is the closed-loop controllability
/// Gramian `(A-BK) L + L (A-BK)ᵀ = -W Wᵀ`.
pub fn cost_gradient<T: Real>(plant: &LtiPlant<T>, k: &GainMatrix<T>) -> Result<DMatrix<T>> {
    check_dims(plant, k)?;
    cost_and_gradient(plant, k.matrix())
        .map(|(_, g)| g)
        .ok_or(Error::NotStabilizing)
}

/// Observability Gramian `P(K)`.
pub fn observability_gramian<T: Real>(
    plant: &LtiPlant<T>,
    k: &GainMatrix<T>,
) -> Result<DMatrix<T>> {
    check_dims(plant, k)?;
    let km = k.matrix();
    let schur = SchurLyapunov::new(&plant.closed_loop(km), T::lit(STABILITY_TOL))?;
    schur.solve_observability(&(plant.q() + km.transpose() * plant.r() * km))
}

/// Controllability Gramian `L(K)`.
pub fn controllability_gramian<T: Real>(
    plant: &LtiPlant<T>,
    k: &GainMatrix<T>,
) -> Result<DMatrix<T>> {
    check_dims(plant, k)?;
    let schur = SchurLyapunov::new(&plant.closed_loop(k.matrix()), T::lit(STABILITY_TOL))?;
    schur.solve_controllability(&(plant.w() * plant.w().transpose()))
}
