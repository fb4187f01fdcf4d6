//! Continuous Lyapunov equations via a real Schur factorization
//! (Bartels-Stewart), with a dense Kronecker solve kept as a reference.
//!
//! Two forms share one factorization `Acl = U T Uᵀ`:
//!
//! - observability: `Aclᵀ X + X Acl + Q = 0`
//! - controllability: `Acl X + X Aclᵀ + Q = 0`

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real parts must be below `-STABILITY_TOL` for a matrix to count as Hurwitz.
pub const STABILITY_TOL: f64 = 1e-9;

const SCHUR_MAX_ITER: usize = 10_000;

/// Real Schur factorization of a Hurwitz matrix, reusable for several solves.
#[derive(Clone, Debug)]
pub struct SchurLyapunov<T: Real> {
    u: DMatrix<T>,
    t: DMatrix<T>,
    /// `(start, size)` of each diagonal block of `t`; size is 1 or 2.
    blocks: Vec<(usize, usize)>,
    abscissa: T,
}

impl<T: Real> SchurLyapunov<T> {
    /// Factorizes `acl`, failing with `NotHurwitz` unless every eigenvalue
    /// has real part below `-stability_tol`.
    pub fn new(acl: &DMatrix<T>, stability_tol: T) -> Result<Self> {
        let me = Self::factor(acl)?;
        if me.abscissa >= -stability_tol {
            return Err(Error::NotHurwitz {
                abscissa: me.abscissa.as_f64(),
            });
        }
        Ok(me)
    }

    fn factor(acl: &DMatrix<T>) -> Result<Self> {
        if !acl.is_square() {
            return Err(Error::DimensionMismatch("Lyapunov matrix must be square".into()));
        }
        if acl.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSolve("non-finite entries".into()));
        }
        let n = acl.nrows();
        let (u, t) = Schur::try_new(acl.clone(), T::default_epsilon(), SCHUR_MAX_ITER)
            .ok_or_else(|| Error::SingularSolve("Schur iteration did not converge".into()))?
            .unpack();
        let mut blocks = Vec::new();
        let mut abscissa = T::min_value().unwrap_or(-T::one() / T::default_epsilon());
        let mut i = 0;
        while i < n {
            if i + 1 < n && !t[(i + 1, i)].is_zero() {
                let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
                let half_tr = (a + d) * T::lit(0.5);
                let half_diff = (a - d) * T::lit(0.5);
                let disc = half_diff * half_diff + b * c;
                let re = if disc >= T::zero() {
                    half_tr + disc.sqrt()
                } else {
                    half_tr
                };
                abscissa = abscissa.max(re);
                blocks.push((i, 2));
                i += 2;
            } else {
                abscissa = abscissa.max(t[(i, i)]);
                blocks.push((i, 1));
                i += 1;
            }
        }
        Ok(Self {
            u,
            t,
            blocks,
            abscissa,
        })
    }

    /// Largest real part among the eigenvalues.
    pub fn spectral_abscissa(&self) -> T {
        self.abscissa
    }

    /// Solves `Aclᵀ X + X Acl + Q = 0`.
    pub fn solve_observability(&self, q: &DMatrix<T>) -> Result<DMatrix<T>> {
        let c = self.u.transpose() * q * &self.u;
        let y = self.solve_transposed_left(&c)?;
        Ok(symmetrize(&self.u * y * self.u.transpose()))
    }

    /// Solves `Acl X + X Aclᵀ + Q = 0`.
    pub fn solve_controllability(&self, q: &DMatrix<T>) -> Result<DMatrix<T>> {
        let c = self.u.transpose() * q * &self.u;
        let y = self.solve_transposed_right(&c)?;
        Ok(symmetrize(&self.u * y * self.u.transpose()))
    }

    /// `Tᵀ Y + Y T = -C`, sweeping blocks forward.
    fn solve_transposed_left(&self, c: &DMatrix<T>) -> Result<DMatrix<T>> {
        let t = &self.t;
        let n = t.nrows();
        let mut y = DMatrix::<T>::zeros(n, n);
        for (bk, &(k0, kp)) in self.blocks.iter().enumerate() {
            for (bl, &(l0, lq)) in self.blocks.iter().enumerate() {
                let mut rhs = -c.view((k0, l0), (kp, lq)).clone_owned();
                for &(i0, ip) in &self.blocks[..bk] {
                    rhs -= t.view((i0, k0), (ip, kp)).transpose() * y.view((i0, l0), (ip, lq));
                }
                for &(j0, jq) in &self.blocks[..bl] {
                    rhs -= y.view((k0, j0), (kp, jq)) * t.view((j0, l0), (jq, lq));
                }
                let left = t.view((k0, k0), (kp, kp)).transpose();
                let right = t.view((l0, l0), (lq, lq)).clone_owned();
                let blk = small_sylvester(&left, &right, &rhs)?;
                y.view_mut((k0, l0), (kp, lq)).copy_from(&blk);
            }
        }
        Ok(y)
    }

    /// `T Y + Y Tᵀ = -C`, sweeping blocks backward.
    fn solve_transposed_right(&self, c: &DMatrix<T>) -> Result<DMatrix<T>> {
        let t = &self.t;
        let n = t.nrows();
        let mut y = DMatrix::<T>::zeros(n, n);
        let nb = self.blocks.len();
        for bk in (0..nb).rev() {
            let (k0, kp) = self.blocks[bk];
            for bl in (0..nb).rev() {
                let (l0, lq) = self.blocks[bl];
                let mut rhs = -c.view((k0, l0), (kp, lq)).clone_owned();
                for &(i0, ip) in &self.blocks[bk + 1..] {
                    rhs -= t.view((k0, i0), (kp, ip)) * y.view((i0, l0), (ip, lq));
                }
                for &(j0, jq) in &self.blocks[bl + 1..] {
                    rhs -= y.view((k0, j0), (kp, jq)) * t.view((l0, j0), (lq, jq)).transpose();
                }
                let left = t.view((k0, k0), (kp, kp)).clone_owned();
                let right = t.view((l0, l0), (lq, lq)).transpose();
                let blk = small_sylvester(&left, &right, &rhs)?;
                y.view_mut((k0, l0), (kp, lq)).copy_from(&blk);
            }
        }
        Ok(y)
    }
}

/// Solves `L Y + Y R = S` for blocks of order at most two.
fn small_sylvester<T: Real>(l: &DMatrix<T>, r: &DMatrix<T>, s: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (p, q) = (l.nrows(), r.nrows());
    if p == 1 && q == 1 {
        let d = l[(0, 0)] + r[(0, 0)];
        if d.is_zero() {
            return Err(Error::SingularSolve("zero pivot in Sylvester block".into()));
        }
        return Ok(DMatrix::from_element(1, 1, s[(0, 0)] / d));
    }
    // column-major vec: (I_q ⊗ L + Rᵀ ⊗ I_p) vec(Y) = vec(S)
    let sys = DMatrix::<T>::identity(q, q).kronecker(l)
        + r.transpose().kronecker(&DMatrix::<T>::identity(p, p));
    let rhs = nalgebra::DVector::from_column_slice(s.as_slice());
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSolve("singular Sylvester block".into()))?;
    Ok(DMatrix::from_column_slice(p, q, sol.as_slice()))
}

fn symmetrize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    (&m + m.transpose()) * T::lit(0.5)
}

/// Solves `Aclᵀ P + P Acl + Q = 0` for Hurwitz `acl`.
pub fn solve_lyapunov<T: Real>(acl: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    if q.shape() != acl.shape() {
        return Err(Error::DimensionMismatch("Q must match Acl".into()));
    }
    SchurLyapunov::new(acl, T::lit(STABILITY_TOL))?.solve_observability(q)
}

/// Reference solver for `Aclᵀ P + P Acl + Q = 0` through the `n² x n²`
/// system `(I ⊗ Aclᵀ + Aclᵀ ⊗ I) vec(P) = -vec(Q)`. Cubic in `n²`; meant for
/// cross-checking small problems.
pub fn solve_lyapunov_kronecker<T: Real>(acl: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = acl.nrows();
    if !acl.is_square() || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch("Q must match Acl".into()));
    }
    let at = acl.transpose();
    let eye = DMatrix::<T>::identity(n, n);
    let sys = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -nalgebra::DVector::from_column_slice(q.as_slice());
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSolve("Kronecker system is singular".into()))?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Largest real part of the eigenvalues of a square matrix.
pub fn spectral_abscissa<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(SchurLyapunov::factor(m)?.abscissa)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
        (a.transpose() * p + p * a + q).norm()
    }

    #[test]
    fn negative_identity_gives_half_identity() {
        let a = -DMatrix::<f64>::identity(2, 2);
        let p = solve_lyapunov(&a, &DMatrix::identity(2, 2)).unwrap();
        assert!((p - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn companion_matches_kronecker_oracle() {
        let a = DMatrix::from_row_slice(2, 2, &[0., 1., -2., -3.]);
        let q = DMatrix::identity(2, 2);
        let p = solve_lyapunov(&a, &q).unwrap();
        let oracle = solve_lyapunov_kronecker(&a, &q).unwrap();
        assert!((&p - &oracle).norm() < 1e-10);
        assert!(residual(&a, &p, &q) < 1e-12);
        // closed form: p11 = 1.25, p12 = 0.25, p22 = 0.25
        assert!((p[(0, 0)] - 1.25).abs() < 1e-12);
        assert!((p[(0, 1)] - 0.25).abs() < 1e-12);
        assert!((p[(1, 1)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn unstable_is_rejected() {
        let a = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(
            solve_lyapunov(&a, &DMatrix::identity(1, 1)),
            Err(Error::NotHurwitz { .. })
        ));
        // marginal case sits inside the tolerance band
        let z = DMatrix::from_element(1, 1, -1e-12);
        assert!(matches!(
            solve_lyapunov(&z, &DMatrix::identity(1, 1)),
            Err(Error::NotHurwitz { .. })
        ));
    }

    #[test]
    fn complex_pair_blocks_are_handled() {
        // eigenvalues -0.5 ± 3i and -2
        let a = DMatrix::from_row_slice(3, 3, &[-0.5, 3., 1., -3., -0.5, 0.2, 0.4, 0., -2.]);
        let q = DMatrix::from_row_slice(3, 3, &[2., 0.3, 0., 0.3, 1., 0.1, 0., 0.1, 1.5]);
        let s = SchurLyapunov::new(&a, 1e-9).unwrap();
        assert!(s.blocks.iter().any(|&(_, sz)| sz == 2));
        let p = s.solve_observability(&q).unwrap();
        assert!(residual(&a, &p, &q) < 1e-12);
        let l = s.solve_controllability(&q).unwrap();
        assert!((&a * &l + &l * a.transpose() + &q).norm() < 1e-12);
        assert!((p - solve_lyapunov_kronecker(&a, &q).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn single_precision_solve() {
        let a = DMatrix::<f32>::from_row_slice(2, 2, &[0., 1., -2., -3.]);
        let p = solve_lyapunov(&a, &DMatrix::identity(2, 2)).unwrap();
        assert!((p[(0, 0)] - 1.25).abs() < 1e-5);
    }
}
