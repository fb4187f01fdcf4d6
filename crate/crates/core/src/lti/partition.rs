use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block structure of a feedback gain: control inputs are grouped into row
/// blocks of sizes `m_1..`, states into column blocks of sizes `n_1..`.
///
/// Block `(i, j)` is the link carrying state group `j` to controller `i`.
/// Row and column block counts are independent so that several inputs can
/// be bundled into one link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionDoc", into = "PartitionDoc")]
pub struct BlockPartition {
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct PartitionDoc {
    row_block_sizes: Vec<usize>,
    col_block_sizes: Vec<usize>,
}

impl TryFrom<PartitionDoc> for BlockPartition {
    type Error = Error;
    fn try_from(doc: PartitionDoc) -> Result<Self> {
        BlockPartition::new(doc.row_block_sizes, doc.col_block_sizes)
    }
}

impl From<BlockPartition> for PartitionDoc {
    fn from(p: BlockPartition) -> Self {
        PartitionDoc {
            row_block_sizes: p.row_sizes,
            col_block_sizes: p.col_sizes,
        }
    }
}

impl BlockPartition {
    pub fn new(row_sizes: Vec<usize>, col_sizes: Vec<usize>) -> Result<Self> {
        if row_sizes.is_empty() || col_sizes.is_empty() {
            return Err(Error::InvalidPlant("partition needs at least one block".into()));
        }
        if row_sizes.iter().chain(&col_sizes).any(|&s| s == 0) {
            return Err(Error::InvalidPlant("block sizes must be positive".into()));
        }
        Ok(Self {
            row_sizes,
            col_sizes,
        })
    }

    /// `nodes` nodes, each with `inputs` controls and `states` states.
    pub fn uniform(nodes: usize, inputs: usize, states: usize) -> Result<Self> {
        Self::new(vec![inputs; nodes], vec![states; nodes])
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.row_sizes
    }

    pub fn col_sizes(&self) -> &[usize] {
        &self.col_sizes
    }

    pub fn row_blocks(&self) -> usize {
        self.row_sizes.len()
    }

    pub fn col_blocks(&self) -> usize {
        self.col_sizes.len()
    }

    /// Total number of inputs `m`.
    pub fn m(&self) -> usize {
        self.row_sizes.iter().sum()
    }

    /// Total number of states `n`.
    pub fn n(&self) -> usize {
        self.col_sizes.iter().sum()
    }

    pub fn row_range(&self, i: usize) -> Range<usize> {
        let start: usize = self.row_sizes[..i].iter().sum();
        start..start + self.row_sizes[i]
    }

    pub fn col_range(&self, j: usize) -> Range<usize> {
        let start: usize = self.col_sizes[..j].iter().sum();
        start..start + self.col_sizes[j]
    }

    /// Number of gain entries (units of information) in block `(i, j)`.
    pub fn block_len(&self, i: usize, j: usize) -> usize {
        self.row_sizes[i] * self.col_sizes[j]
    }

    /// All block indices in row-major order.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.col_blocks();
        (0..self.row_blocks()).flat_map(move |i| (0..cols).map(move |j| (i, j)))
    }

    /// Block row containing input index `r`.
    pub fn row_block_of(&self, r: usize) -> usize {
        locate(&self.row_sizes, r)
    }

    /// Block column containing state index `c`.
    pub fn col_block_of(&self, c: usize) -> usize {
        locate(&self.col_sizes, c)
    }
}

fn locate(sizes: &[usize], idx: usize) -> usize {
    let mut acc = 0;
    for (b, &s) in sizes.iter().enumerate() {
        acc += s;
        if idx < acc {
            return b;
        }
    }
    panic!("index {idx} beyond partition of size {acc}");
}
