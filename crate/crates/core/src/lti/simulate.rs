use nalgebra::{DMatrix, DVector};

use super::{GainMatrix, LtiPlant};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sampled closed-loop trajectory.
///
/// The loop is closed as `u = -K x`, so the state matrix is `A - BK`.
#[derive(Clone, Debug)]
pub struct SimulationTrace<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
    pub inputs: Vec<DVector<T>>,
    pub outputs: Vec<DVector<T>>,
    pub disturbances: Vec<DVector<T>>,
    pub x0: DVector<T>,
}

/// Fixed-step RK4 integration of `ẋ = Ax + Bu + Wd(t)` with `u = -Kx` over
/// `[0, horizon]`.
pub fn simulate_closed_loop<T, D>(
    plant: &LtiPlant<T>,
    k: &GainMatrix<T>,
    x0: &DVector<T>,
    disturbance: D,
    horizon: T,
    dt: T,
) -> Result<SimulationTrace<T>>
where
    T: Real,
    D: Fn(T) -> DVector<T>,
{
    let n = plant.states();
    if x0.len() != n || k.matrix().shape() != (plant.inputs(), n) {
        return Err(Error::DimensionMismatch("initial state or gain".into()));
    }
    if dt <= T::zero() || horizon < T::zero() {
        return Err(Error::InvalidConfig("dt must be positive and horizon non-negative".into()));
    }
    let steps = (horizon / dt).round().to_usize().unwrap_or(0);
    let acl: DMatrix<T> = plant.closed_loop(k.matrix());
    let w = plant.w();
    let (c, d) = plant.output_matrices();
    let f = |t: T, x: &DVector<T>| -> DVector<T> {
        let dist = disturbance(t);
        &acl * x + w * dist
    };

    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let mut trace = SimulationTrace {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        disturbances: Vec::with_capacity(steps + 1),
        x0: x0.clone(),
    };
    let mut x = x0.clone();
    for s in 0..=steps {
        let t = dt * T::from_usize(s).expect("step count fits");
        let u = -(k.matrix() * &x);
        trace.outputs.push(&c * &x + &d * &u);
        trace.disturbances.push(disturbance(t));
        trace.inputs.push(u);
        trace.states.push(x.clone());
        trace.times.push(t);
        if s == steps {
            break;
        }
        let k1 = f(t, &x);
        let k2 = f(t + dt * half, &(&x + &k1 * (dt * half)));
        let k3 = f(t + dt * half, &(&x + &k2 * (dt * half)));
        let k4 = f(t + dt, &(&x + &k3 * dt));
        x += (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (dt * sixth);
    }
    Ok(trace)
}
