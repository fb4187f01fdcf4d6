//! Row-major nested-array encoding of dense matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) fn to_rows<T: Copy + nalgebra::Scalar>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Builds a matrix from nested rows. An empty outer list yields a `0 x cols`
/// matrix where `cols` comes from `empty_cols`.
pub(crate) fn from_rows<T: Copy + nalgebra::Scalar>(
    rows: &[Vec<T>],
    name: &str,
    empty_cols: usize,
) -> Result<DMatrix<T>> {
    let ncols = rows.first().map_or(empty_cols, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("matrix {name} has ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}
