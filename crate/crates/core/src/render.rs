//! Block-grid renderings of sparsity patterns and reroute outcomes.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lti::{BlockPartition, SparsityPattern};
use crate::prioritization::PriorityTable;
use crate::rerouting::RerouteOutcome;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellState {
    Free,
    Zero,
    /// Attacked and dropped (or attacked with no feasible countermeasure).
    Attacked,
    Sacrificed,
    Rerouted,
}

impl CellState {
    pub fn symbol(self) -> char {
        match self {
            CellState::Free => '■',
            CellState::Zero => '·',
            CellState::Attacked => 'A',
            CellState::Sacrificed => 'S',
            CellState::Rerouted => 'R',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        Some(match c {
            '■' => CellState::Free,
            '·' => CellState::Zero,
            'A' => CellState::Attacked,
            'S' => CellState::Sacrificed,
            'R' => CellState::Rerouted,
            _ => return None,
        })
    }

    /// Whether the block carries a gain after the countermeasure.
    pub fn is_free(self) -> bool {
        matches!(self, CellState::Free | CellState::Rerouted)
    }

    fn fill(self) -> &'static str {
        match self {
            CellState::Free => "#2b6cb0",
            CellState::Zero => "#f7fafc",
            CellState::Attacked => "#c53030",
            CellState::Sacrificed => "#d69e2e",
            CellState::Rerouted => "#2f855a",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Svg,
}

impl FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(RenderFormat::Text),
            "svg" => Ok(RenderFormat::Svg),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Per-block state with optional size and priority annotations.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockGrid {
    rows: usize,
    cols: usize,
    cells: Vec<CellState>,
    sizes: Option<Vec<usize>>,
    priorities: Vec<Option<usize>>,
}

impl BlockGrid {
    pub fn from_pattern(pattern: &SparsityPattern) -> Self {
        let (rows, cols) = (pattern.rows(), pattern.cols());
        let cells = (0..rows * cols)
            .map(|k| if pattern.is_free(k / cols, k % cols) { CellState::Free } else { CellState::Zero })
            .collect();
        Self { rows, cols, cells, sizes: None, priorities: vec![None; rows * cols] }
    }

    /// Table blocks as free cells, annotated with sizes and priorities.
    pub fn from_table<T: Real>(table: &PriorityTable<T>, partition: &BlockPartition) -> Result<Self> {
        let mut grid = Self::from_pattern(&table.pattern(partition)?);
        grid.annotate(table, partition);
        Ok(grid)
    }

    /// Pre-attack table with attacked blocks marked.
    pub fn from_attack<T: Real>(
        table: &PriorityTable<T>,
        attacked: &std::collections::BTreeSet<usize>,
        partition: &BlockPartition,
    ) -> Result<Self> {
        let mut grid = Self::from_table(table, partition)?;
        for r in table.rows().iter().filter(|r| attacked.contains(&r.q)) {
            grid.cells[r.i * grid.cols + r.j] = CellState::Attacked;
        }
        Ok(grid)
    }

    /// Post-countermeasure state of every block.
    pub fn from_outcome<T: Real>(outcome: &RerouteOutcome<T>, partition: &BlockPartition) -> Result<Self> {
        let table = &outcome.n_final;
        table.check_partition(partition)?;
        let mut grid = Self::from_pattern(&SparsityPattern::empty(partition.row_blocks(), partition.col_blocks()));
        for r in table.rows() {
            grid.cells[r.i * grid.cols + r.j] = if outcome.rerouted.contains(&r.q) {
                CellState::Rerouted
            } else if outcome.attacked.contains(&r.q) {
                CellState::Attacked
            } else if outcome.sacrificed.contains(&r.q) {
                CellState::Sacrificed
            } else {
                CellState::Free
            };
        }
        grid.annotate(table, partition);
        Ok(grid)
    }

    fn annotate<T: Real>(&mut self, table: &PriorityTable<T>, partition: &BlockPartition) {
        self.sizes = Some(
            (0..self.rows * self.cols)
                .map(|k| partition.block_len(k / self.cols, k % self.cols))
                .collect(),
        );
        for r in table.rows() {
            self.priorities[r.i * self.cols + r.j] = Some(r.q);
        }
    }

    pub fn cell(&self, i: usize, j: usize) -> CellState {
        self.cells[i * self.cols + j]
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    pub fn render(&self, format: RenderFormat) -> String {
        match format {
            RenderFormat::Text => self.to_text(),
            RenderFormat::Svg => self.to_svg(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols * 3 + 1));
        for row in self.cells.chunks(self.cols.max(1)) {
            out.extend(row.iter().map(|c| c.symbol()));
            out.push('\n');
        }
        out
    }

    pub fn to_svg(&self) -> String {
        const CELL: usize = 48;
        let (w, h) = (self.cols * CELL, self.rows * CELL);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"monospace\" font-size=\"10\">\n"
        );
        for (k, c) in self.cells.iter().enumerate() {
            let (x, y) = ((k % self.cols) * CELL, (k / self.cols) * CELL);
            let _ = writeln!(
                out,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\" stroke=\"#4a5568\"/>",
                c.fill()
            );
            let ink = if *c == CellState::Zero { "#4a5568" } else { "#ffffff" };
            let mut label = |dy: usize, text: String| {
                let _ = writeln!(
                    out,
                    "<text x=\"{}\" y=\"{}\" fill=\"{ink}\" text-anchor=\"middle\">{text}</text>",
                    x + CELL / 2,
                    y + dy
                );
            };
            if let Some(sizes) = &self.sizes {
                label(18, format!("s={}", sizes[k]));
            }
            if let Some(q) = self.priorities[k] {
                label(34, format!("q={q}"));
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Renders a bare pattern.
pub fn render_pattern(pattern: &SparsityPattern, format: &str) -> Result<String> {
    Ok(BlockGrid::from_pattern(pattern).render(format.parse()?))
}

/// Reads a text grid back into the pattern of blocks that carry a gain.
pub fn parse_text(text: &str) -> Result<SparsityPattern> {
    let rows: Vec<Vec<bool>> = text
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.chars()
                .map(|c| CellState::from_symbol(c).map(CellState::is_free).ok_or_else(|| Error::Parse(format!("unknown cell {c:?}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    SparsityPattern::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rerouting::{reroute_uniform, tests::nine_block_table, Attack};

    fn nine_block_partition() -> BlockPartition {
        BlockPartition::new(vec![1; 4], vec![2; 4]).unwrap()
    }

    #[test]
    fn empty_pattern_is_all_dots() {
        let text = render_pattern(&SparsityPattern::empty(2, 3), "text").unwrap();
        assert_eq!(text, "···\n···\n");
    }

    #[test]
    fn unknown_format() {
        assert!(matches!(render_pattern(&SparsityPattern::full(1, 1), "png"), Err(Error::UnknownFormat(_))));
    }

    #[test]
    fn nine_block_grids() {
        let t = nine_block_table();
        let part = nine_block_partition();
        let pre = BlockGrid::from_table(&t, &part).unwrap().to_text();
        assert_eq!(pre, "■·■■\n·■·■\n·■··\n■■·■\n");
        let mask = Attack::AttackedPriorities(vec![3, 7, 8]).to_mask(9).unwrap();
        let out = reroute_uniform(&t, &mask).unwrap();
        let grid = BlockGrid::from_outcome(&out, &part).unwrap();
        // q1=(0,0) q2=(3,0) sacrificed; q3=(1,1) dropped; q7=(0,3) q8=(1,3) rerouted
        assert_eq!(grid.to_text(), "S·■R\n·A·R\n·■··\nS■·■\n");
        assert_eq!(grid.count(CellState::Sacrificed), 2);
        assert_eq!(grid.count(CellState::Rerouted) + grid.count(CellState::Attacked), 3);
        let parsed = parse_text(&grid.to_text()).unwrap();
        assert_eq!(parsed, crate::rerouting::pattern_from(&out, &part).unwrap());
        let svg = grid.to_svg();
        assert!(svg.starts_with("<svg") && svg.contains("q=8") && svg.contains("s=2"));
    }

    #[test]
    fn text_round_trip() {
        let mut p = SparsityPattern::full(3, 4);
        p.set(0, 1, false);
        p.set(2, 3, false);
        assert_eq!(parse_text(&render_pattern(&p, "text").unwrap()).unwrap(), p);
        assert!(parse_text("■x\n").is_err());
    }
}
