use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use super::matio;
use super::{BlockPartition, SparsityPattern};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A feedback gain `K` (m x n) together with its block partition.
#[derive(Clone, Debug, PartialEq)]
pub struct GainMatrix<T: Real> {
    k: DMatrix<T>,
    partition: BlockPartition,
}

impl<T: Real> GainMatrix<T> {
    pub fn new(k: DMatrix<T>, partition: BlockPartition) -> Result<Self> {
        if k.shape() != (partition.m(), partition.n()) {
            return Err(Error::DimensionMismatch(format!(
                "gain is {}x{} but partition implies {}x{}",
                k.nrows(),
                k.ncols(),
                partition.m(),
                partition.n()
            )));
        }
        Ok(Self { k, partition })
    }

    pub fn zeros(partition: BlockPartition) -> Self {
        Self {
            k: DMatrix::zeros(partition.m(), partition.n()),
            partition,
        }
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.k
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.k
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    /// Same partition, new entries.
    pub fn with_matrix(&self, k: DMatrix<T>) -> Result<Self> {
        Self::new(k, self.partition.clone())
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrixView<'_, T> {
        let (r, c) = (self.partition.row_range(i), self.partition.col_range(j));
        self.k.view((r.start, c.start), (r.len(), c.len()))
    }

    /// Block entries flattened row-major.
    pub fn block_values(&self, i: usize, j: usize) -> Vec<T> {
        let b = self.block(i, j);
        (0..b.nrows())
            .flat_map(|r| (0..b.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| b[(r, c)])
            .collect()
    }

    /// Writes row-major `values` into block `(i, j)`.
    pub fn set_block_values(&mut self, i: usize, j: usize, values: &[T]) {
        let (r, c) = (self.partition.row_range(i), self.partition.col_range(j));
        assert_eq!(values.len(), r.len() * c.len());
        let w = c.len();
        for (idx, &v) in values.iter().enumerate() {
            self.k[(r.start + idx / w, c.start + idx % w)] = v;
        }
    }

    pub fn zero_block(&mut self, i: usize, j: usize) {
        let (r, c) = (self.partition.row_range(i), self.partition.col_range(j));
        self.k.view_mut((r.start, c.start), (r.len(), c.len())).fill(T::zero());
    }

    /// `K ∘ I_Ω`: zero every block that is not free in `pattern`.
    pub fn masked(&self, pattern: &SparsityPattern) -> Self {
        let mut out = self.clone();
        for (i, j) in self.partition.blocks() {
            if !pattern.is_free(i, j) {
                out.zero_block(i, j);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        matio::to_rows(&self.k)
    }
}

/// JSON form of a gain used by the CLI: `{K, pattern, J, iterations, converged}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GainDocument<T: Real> {
    #[serde(rename = "K")]
    pub k: Vec<Vec<T>>,
    pub pattern: SparsityPattern,
    #[serde(rename = "J")]
    pub j: Option<T>,
    pub iterations: usize,
    pub converged: bool,
}
