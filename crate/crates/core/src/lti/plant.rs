use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::matio::{from_rows, to_rows};
use super::BlockPartition;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Continuous-time LTI plant `ẋ = Ax + Bu + Wd` with quadratic weights.
///
/// The performance output is `y = Cx + Du` with `C = [Q^{1/2}; 0]` and
/// `D = [0; R^{1/2}]`, see [`LtiPlant::output_matrices`].
#[derive(Clone, Debug, PartialEq)]
pub struct LtiPlant<T: Real> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    w: DMatrix<T>,
    q: DMatrix<T>,
    r: DMatrix<T>,
    partition: BlockPartition,
}

/// On-disk plant layout. Matrices are row-major nested arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct PlantDocument<T: Real> {
    #[serde(rename = "A")]
    pub a: Vec<Vec<T>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<T>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<T>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<T>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<T>>,
    pub row_block_sizes: Vec<usize>,
    pub col_block_sizes: Vec<usize>,
}

impl<T: Real> LtiPlant<T> {
    /// Validates dimensions, weight definiteness, stabilizability of `(A, B)`
    /// and detectability of `(A, Q^{1/2})`.
    pub fn new(
        a: DMatrix<T>,
        b: DMatrix<T>,
        w: DMatrix<T>,
        q: DMatrix<T>,
        r: DMatrix<T>,
        partition: BlockPartition,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        let dims_ok = a.is_square()
            && b.nrows() == n
            && w.nrows() == n
            && q.shape() == (n, n)
            && r.shape() == (m, m)
            && partition.n() == n
            && partition.m() == m;
        if !dims_ok {
            return Err(Error::DimensionMismatch(format!(
                "A {:?}, B {:?}, W {:?}, Q {:?}, R {:?}, partition {}x{}",
                a.shape(),
                b.shape(),
                w.shape(),
                q.shape(),
                r.shape(),
                partition.m(),
                partition.n()
            )));
        }
        check_symmetric(&q, "Q")?;
        check_symmetric(&r, "R")?;
        let tol = T::tol(1e-10);
        let q_min = q.clone().symmetric_eigenvalues().min();
        if q_min < -tol * (T::one() + q.norm()) {
            return Err(Error::InvalidPlant("Q is not positive semidefinite".into()));
        }
        let r_min = r.clone().symmetric_eigenvalues().min();
        if r_min <= tol * r.norm() {
            return Err(Error::InvalidPlant("R is not positive definite".into()));
        }

        let plant = Self {
            a,
            b,
            w,
            q,
            r,
            partition,
        };
        if !plant.is_stabilizable() {
            return Err(Error::InvalidPlant("(A, B) is not stabilizable".into()));
        }
        if !plant.is_detectable() {
            return Err(Error::InvalidPlant("(A, Q^1/2) is not detectable".into()));
        }
        Ok(plant)
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn w(&self) -> &DMatrix<T> {
        &self.w
    }
    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }
    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn disturbances(&self) -> usize {
        self.w.ncols()
    }

    /// `A - BK`.
    pub fn closed_loop(&self, k: &DMatrix<T>) -> DMatrix<T> {
        &self.a - &self.b * k
    }

    /// `(C, D)` with `C = [Q^{1/2}; 0]` and `D = [0; R^{1/2}]`, each with `n + m` rows.
    pub fn output_matrices(&self) -> (DMatrix<T>, DMatrix<T>) {
        let (n, m) = (self.states(), self.inputs());
        let mut c = DMatrix::zeros(n + m, n);
        let mut d = DMatrix::zeros(n + m, m);
        c.view_mut((0, 0), (n, n)).copy_from(&psd_sqrt(&self.q));
        d.view_mut((n, 0), (m, m)).copy_from(&psd_sqrt(&self.r));
        (c, d)
    }

    /// PBH test on every eigenvalue with non-negative real part.
    pub fn is_stabilizable(&self) -> bool {
        pbh_full_rank(&self.a, &self.b, false)
    }

    pub fn is_detectable(&self) -> bool {
        pbh_full_rank(&self.a, &psd_sqrt(&self.q), true)
    }

    pub fn to_document(&self) -> PlantDocument<T> {
        PlantDocument {
            a: to_rows(&self.a),
            b: to_rows(&self.b),
            w: to_rows(&self.w),
            q: to_rows(&self.q),
            r: to_rows(&self.r),
            row_block_sizes: self.partition.row_sizes().to_vec(),
            col_block_sizes: self.partition.col_sizes().to_vec(),
        }
    }

    pub fn from_document(doc: &PlantDocument<T>) -> Result<Self> {
        let n = doc.a.len();
        Self::new(
            from_rows(&doc.a, "A", n)?,
            from_rows(&doc.b, "B", 0)?,
            from_rows(&doc.w, "W", 0)?,
            from_rows(&doc.q, "Q", n)?,
            from_rows(&doc.r, "R", 0)?,
            BlockPartition::new(doc.row_block_sizes.clone(), doc.col_block_sizes.clone())?,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("plant serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

fn check_symmetric<T: Real>(m: &DMatrix<T>, name: &str) -> Result<()> {
    if (m - m.transpose()).norm() > T::tol(1e-10) * (T::one() + m.norm()) {
        return Err(Error::InvalidPlant(format!("{name} is not symmetric")));
    }
    Ok(())
}

/// Symmetric square root of a PSD matrix; tiny negative eigenvalues are clipped.
pub(crate) fn psd_sqrt<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let eig = m.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|v| if v > T::zero() { v.sqrt() } else { T::zero() });
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// For every eigenvalue `λ` of `a` with `Re λ >= 0`, checks that `[A - λI, X]`
/// (or its transposed dual when `dual`) has full rank `n`.
fn pbh_full_rank<T: Real>(a: &DMatrix<T>, x: &DMatrix<T>, dual: bool) -> bool {
    let n = a.nrows();
    if n == 0 {
        return true;
    }
    let ac: DMatrix<Complex<T>> = a.map(|v| Complex::new(v, T::zero()));
    let xc: DMatrix<Complex<T>> = x.map(|v| Complex::new(v, T::zero()));
    let scale = T::one() + a.norm() + x.norm();
    let tol = T::tol(1e-10) * scale;
    a.complex_eigenvalues().iter().all(|lam| {
        if lam.re < -T::tol(1e-9) {
            return true;
        }
        let shifted = &ac - DMatrix::<Complex<T>>::identity(n, n) * *lam;
        let stacked = if dual {
            let mut s = DMatrix::zeros(n + xc.nrows(), n);
            s.view_mut((0, 0), (n, n)).copy_from(&shifted);
            s.view_mut((n, 0), (xc.nrows(), n)).copy_from(&xc);
            s
        } else {
            let mut s = DMatrix::zeros(n, n + xc.ncols());
            s.view_mut((0, 0), (n, n)).copy_from(&shifted);
            s.view_mut((0, n), (n, xc.ncols())).copy_from(&xc);
            s
        };
        let sv = stacked.singular_values();
        sv.iter().filter(|s| **s > tol).count() >= n
    })
}
