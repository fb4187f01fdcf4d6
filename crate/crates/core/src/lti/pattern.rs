use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{BlockPartition, GainMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Boolean block mask over the gain's block grid; `true` marks a free block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PatternDoc", into = "PatternDoc")]
pub struct SparsityPattern {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct PatternDoc {
    mask: Vec<Vec<bool>>,
}

impl TryFrom<PatternDoc> for SparsityPattern {
    type Error = Error;
    fn try_from(doc: PatternDoc) -> Result<Self> {
        SparsityPattern::from_rows(&doc.mask)
    }
}

impl From<SparsityPattern> for PatternDoc {
    fn from(p: SparsityPattern) -> Self {
        PatternDoc { mask: p.to_rows() }
    }
}

impl SparsityPattern {
    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            mask: vec![true; rows * cols],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            mask: vec![false; rows * cols],
        }
    }

    /// Only the local (diagonal) blocks are free.
    pub fn diagonal(rows: usize, cols: usize) -> Self {
        let mut p = Self::empty(rows, cols);
        for d in 0..rows.min(cols) {
            p.set(d, d, true);
        }
        p
    }

    pub fn for_partition(partition: &BlockPartition) -> Self {
        Self::full(partition.row_blocks(), partition.col_blocks())
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("pattern mask must be a non-empty rectangle".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            mask: rows.iter().flatten().copied().collect(),
        })
    }

    /// Blocks whose Frobenius norm exceeds `threshold` are free.
    pub fn from_gain<T: Real>(gain: &GainMatrix<T>, threshold: T) -> Self {
        let p = gain.partition();
        let mut out = Self::empty(p.row_blocks(), p.col_blocks());
        for (i, j) in p.blocks() {
            out.set(i, j, gain.block(i, j).norm() > threshold);
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        self.mask.chunks(self.cols).map(<[bool]>::to_vec).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_free(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, free: bool) {
        self.mask[i * self.cols + j] = free;
    }

    /// Copy of `self` with block `(i, j)` forced to zero.
    pub fn without(&self, i: usize, j: usize) -> Self {
        let mut p = self.clone();
        p.set(i, j, false);
        p
    }

    pub fn free_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Free blocks in row-major order.
    pub fn free_blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k / self.cols, k % self.cols))
    }

    /// Blockwise inclusion of free sets.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn matches(&self, partition: &BlockPartition) -> bool {
        self.rows == partition.row_blocks() && self.cols == partition.col_blocks()
    }

    /// Entrywise 0/1 structural identity, constant within each block.
    pub fn indicator<T: Real>(&self, partition: &BlockPartition) -> DMatrix<T> {
        assert!(self.matches(partition), "pattern/partition shape mismatch");
        let mut out = DMatrix::zeros(partition.m(), partition.n());
        for (i, j) in self.free_blocks() {
            let (r, c) = (partition.row_range(i), partition.col_range(j));
            out.view_mut((r.start, c.start), (r.len(), c.len())).fill(T::one());
        }
        out
    }

    /// `1 - indicator`: marks entries that must vanish.
    pub fn complement_indicator<T: Real>(&self, partition: &BlockPartition) -> DMatrix<T> {
        self.indicator::<T>(partition).map(|v| T::one() - v)
    }
}
