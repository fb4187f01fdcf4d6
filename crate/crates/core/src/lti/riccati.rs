//! Continuous algebraic Riccati equation by Kleinman-Newton iteration.
//!
//! Each Newton step is one Lyapunov solve:
//! `(A-BKₖ)ᵀ Pₖ + Pₖ (A-BKₖ) + Q + Kₖᵀ R Kₖ = 0`, then `Kₖ₊₁ = R⁻¹ Bᵀ Pₖ`.

use nalgebra::DMatrix;

use super::lyapunov::{spectral_abscissa, SchurLyapunov, STABILITY_TOL};
use super::{GainMatrix, LtiPlant};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct RiccatiOptions<T> {
    /// Stop once `‖Pₖ₊₁ - Pₖ‖_F <= tol · max(1, ‖Pₖ₊₁‖_F)`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for RiccatiOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-10),
            max_iter: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CareSolution<T: Real> {
    pub p: DMatrix<T>,
    pub k: DMatrix<T>,
    pub iterations: usize,
}

/// A stabilizing gain used to start Newton.
///
/// Zero when `A` is already Hurwitz. Otherwise shifts `A` by `σI` so that
/// `-(A+σI)` is Hurwitz, solves `(A+σI) Z + Z (A+σI)ᵀ = 2 B R⁻¹ Bᵀ` and takes
/// `K = R⁻¹ Bᵀ Z⁻¹`, which places every closed-loop pole left of `-σ`.
pub fn stabilizing_seed<T: Real>(plant: &LtiPlant<T>) -> Result<DMatrix<T>> {
    let (a, b) = (plant.a(), plant.b());
    let n = a.nrows();
    if spectral_abscissa(a)? < -T::lit(STABILITY_TOL) {
        return Ok(DMatrix::zeros(b.ncols(), n));
    }
    let min_re = a
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(T::max_value().unwrap_or(T::one() / T::default_epsilon()), |m, v| m.min(v));
    let sigma = (-min_re).max(T::zero()) + T::one();
    let shifted = -(a + DMatrix::<T>::identity(n, n) * sigma);
    let r_inv_bt = solve_r(plant.r(), &b.transpose())?;
    let rhs = b * &r_inv_bt * T::lit(2.0);
    let z = SchurLyapunov::new(&shifted, T::lit(STABILITY_TOL))?.solve_controllability(&rhs)?;
    let z_chol = z
        .cholesky()
        .ok_or_else(|| Error::RiccatiFailure("shifted Gramian is singular; (A, B) not controllable".into()))?;
    // K = R⁻¹ Bᵀ Z⁻¹ = (Z⁻¹ B R⁻¹)ᵀ
    Ok(z_chol.solve(&r_inv_bt.transpose()).transpose())
}

fn solve_r<T: Real>(r: &DMatrix<T>, rhs: &DMatrix<T>) -> Result<DMatrix<T>> {
    r.clone()
        .cholesky()
        .map(|c| c.solve(rhs))
        .ok_or_else(|| Error::RiccatiFailure("R is not positive definite".into()))
}

/// Stabilizing solution of `AᵀP + PA - P B R⁻¹ Bᵀ P + Q = 0`.
pub fn solve_care<T: Real>(plant: &LtiPlant<T>, opts: &RiccatiOptions<T>) -> Result<CareSolution<T>> {
    let mut k = stabilizing_seed(plant)?;
    let mut prev: Option<DMatrix<T>> = None;
    for it in 1..=opts.max_iter {
        let acl = plant.closed_loop(&k);
        let schur = SchurLyapunov::new(&acl, T::lit(STABILITY_TOL))
            .map_err(|e| Error::RiccatiFailure(format!("Newton iterate lost stability: {e}")))?;
        let p = schur.solve_observability(&(plant.q() + k.transpose() * plant.r() * &k))?;
        k = solve_r(plant.r(), &(plant.b().transpose() * &p))?;
        if let Some(prev) = prev {
            if (&p - prev).norm() <= opts.tol * p.norm().max(T::one()) {
                return Ok(CareSolution { p, k, iterations: it });
            }
        }
        prev = Some(p);
    }
    Err(Error::RiccatiFailure(format!(
        "no convergence within {} Newton steps",
        opts.max_iter
    )))
}

/// Centralized LQR gain `K_c = R⁻¹ Bᵀ P*`.
pub fn lqr_centralized<T: Real>(plant: &LtiPlant<T>) -> Result<GainMatrix<T>> {
    let sol = solve_care(plant, &RiccatiOptions::default())?;
    GainMatrix::new(sol.k, plant.partition().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{cost_gradient, is_stabilizing, BlockPartition};

    fn scalar_plant(a: f64) -> LtiPlant<f64> {
        let one = DMatrix::from_element(1, 1, 1.0);
        LtiPlant::new(
            DMatrix::from_element(1, 1, a),
            one.clone(),
            one.clone(),
            one.clone(),
            one,
            BlockPartition::new(vec![1], vec![1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_riccati_roots() {
        let s0 = solve_care(&scalar_plant(0.0), &RiccatiOptions::default()).unwrap();
        assert!((s0.p[(0, 0)] - 1.0).abs() < 1e-10);
        let k0 = lqr_centralized(&scalar_plant(0.0)).unwrap();
        assert!((k0.matrix()[(0, 0)] - 1.0).abs() < 1e-10);

        let s1 = solve_care(&scalar_plant(1.0), &RiccatiOptions::default()).unwrap();
        let expect = 1.0 + 2f64.sqrt();
        assert!((s1.p[(0, 0)] - expect).abs() < 1e-10);
        assert!((s1.k[(0, 0)] - expect).abs() < 1e-10);
    }

    #[test]
    fn seed_stabilizes_unstable_plant() {
        let p = LtiPlant::new(
            DMatrix::from_row_slice(2, 2, &[1., 2., 0., 3.]),
            DMatrix::from_row_slice(2, 1, &[0., 1.]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(1, 1),
            BlockPartition::new(vec![1], vec![2]).unwrap(),
        )
        .unwrap();
        let k0 = GainMatrix::new(stabilizing_seed(&p).unwrap(), p.partition().clone()).unwrap();
        assert!(is_stabilizing(&p, &k0).unwrap());
        let kc = lqr_centralized(&p).unwrap();
        let g = cost_gradient(&p, &kc).unwrap();
        assert!(g.norm() <= 1e-6 * (1.0 + kc.matrix().norm()));
    }
}
