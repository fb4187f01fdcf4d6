//! Offline link ranking: the order in which control blocks vanish as β
//! grows, tie-broken by the performance lost when a block is removed.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{BlockPartition, Cost, GainMatrix, LtiPlant, SparsityPattern};
use crate::scalar::Real;
use crate::sparse::SweepResult;
use crate::structured::{structured_optimal_cost, AugLagConfig};

/// One row of the priority table. Block indices are 0-based, `q` is 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PriorityRow<T: Real> {
    pub i: usize,
    pub j: usize,
    pub q: usize,
    /// Information units carried by the block (`m_i · n_j`).
    pub s: usize,
    /// Row-major block entries, zero-padded to the table width.
    pub values: Vec<T>,
}

impl<T: Real> PriorityRow<T> {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }
}

/// Blocks ordered by ascending priority `q`; larger `q` matters more.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PriorityRow<T>>", into = "Vec<PriorityRow<T>>", bound = "T: Real")]
pub struct PriorityTable<T: Real> {
    rows: Vec<PriorityRow<T>>,
}

impl<T: Real> TryFrom<Vec<PriorityRow<T>>> for PriorityTable<T> {
    type Error = Error;

    fn try_from(rows: Vec<PriorityRow<T>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl<T: Real> From<PriorityTable<T>> for Vec<PriorityRow<T>> {
    fn from(t: PriorityTable<T>) -> Self {
        t.rows
    }
}

impl<T: Real> PriorityTable<T> {
    /// Rows may come in any order; they are stored by ascending `q`.
    pub fn new(mut rows: Vec<PriorityRow<T>>) -> Result<Self> {
        rows.sort_by_key(|r| r.q);
        let width = rows.iter().map(|r| r.s).max().unwrap_or(0);
        let mut seen = BTreeSet::new();
        for (k, r) in rows.iter().enumerate() {
            if r.q != k + 1 {
                return Err(Error::Parse(format!("priorities must be a permutation of 1..={}", rows.len())));
            }
            if !seen.insert((r.i, r.j)) {
                return Err(Error::Parse(format!("block ({}, {}) listed twice", r.i, r.j)));
            }
            if r.s == 0 || r.values.len() != width {
                return Err(Error::Parse(format!("row q={} must have {width} values", r.q)));
            }
            if r.values[r.s..].iter().any(|v| !v.is_zero()) {
                return Err(Error::Parse(format!("row q={} has non-zero padding", r.q)));
            }
        }
        Ok(Self { rows })
    }

    /// Table whose `k`-th listed block receives priority `k + 1`.
    pub fn from_gain_with_order(gain: &GainMatrix<T>, order: &[(usize, usize)]) -> Result<Self> {
        let part = gain.partition();
        let width = order
            .iter()
            .map(|&(i, j)| check_block(part, i, j).map(|_| part.block_len(i, j)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        let rows = order
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| {
                let mut values = gain.block_values(i, j);
                let s = values.len();
                values.resize(width, T::zero());
                PriorityRow { i, j, q: k + 1, s, values }
            })
            .collect();
        Self::new(rows)
    }

    pub fn rows(&self) -> &[PriorityRow<T>] {
        &self.rows
    }

    /// Row with priority `q` (1-based).
    pub fn row(&self, q: usize) -> Result<&PriorityRow<T>> {
        q.checked_sub(1)
            .and_then(|k| self.rows.get(k))
            .ok_or(Error::IndexOutOfRange { index: q, len: self.rows.len() })
    }

    pub(crate) fn row_mut(&mut self, q: usize) -> &mut PriorityRow<T> {
        &mut self.rows[q - 1]
    }

    /// Number of ranked blocks.
    pub fn r1(&self) -> usize {
        self.rows.len()
    }

    /// Table width: the largest block size.
    pub fn r2(&self) -> usize {
        self.rows.first().map_or(0, |r| r.values.len())
    }

    /// Sizes by ascending priority.
    pub fn sizes(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.s).collect()
    }

    pub fn priority_of(&self, i: usize, j: usize) -> Option<usize> {
        self.rows.iter().find(|r| r.i == i && r.j == j).map(|r| r.q)
    }

    /// Checks block indices and sizes against `partition`.
    pub fn check_partition(&self, partition: &BlockPartition) -> Result<()> {
        for r in &self.rows {
            check_block(partition, r.i, r.j)?;
            if partition.block_len(r.i, r.j) != r.s {
                return Err(Error::DimensionMismatch(format!(
                    "row q={} has size {} but block ({}, {}) holds {}",
                    r.q,
                    r.s,
                    r.i,
                    r.j,
                    partition.block_len(r.i, r.j)
                )));
            }
        }
        Ok(())
    }

    /// Gain holding the table's values; unlisted blocks are zero.
    pub fn reassemble(&self, partition: &BlockPartition) -> Result<GainMatrix<T>> {
        self.check_partition(partition)?;
        let mut g = GainMatrix::zeros(partition.clone());
        for r in &self.rows {
            g.set_block_values(r.i, r.j, &r.values[..r.s]);
        }
        Ok(g)
    }

    /// Pattern freeing the blocks whose rows are non-zero.
    pub fn pattern(&self, partition: &BlockPartition) -> Result<SparsityPattern> {
        self.check_partition(partition)?;
        let mut p = SparsityPattern::empty(partition.row_blocks(), partition.col_blocks());
        for r in self.rows.iter().filter(|r| !r.is_zero()) {
            p.set(r.i, r.j, true);
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_block(part: &BlockPartition, i: usize, j: usize) -> Result<()> {
    if i >= part.row_blocks() {
        return Err(Error::IndexOutOfRange { index: i, len: part.row_blocks() });
    }
    if j >= part.col_blocks() {
        return Err(Error::IndexOutOfRange { index: j, len: part.col_blocks() });
    }
    Ok(())
}

/// Relative resolution below which two losses count as tied.
const TIE_TOL: f64 = 1e-9;

/// `J*(base ∖ block) − J*(base)`; unbounded when removing the block loses
/// stabilizability.
pub fn delta_j<T: Real>(
    plant: &LtiPlant<T>,
    base: &SparsityPattern,
    block: (usize, usize),
    config: &AugLagConfig<T>,
) -> Result<Cost<T>> {
    let (base_cost, base_gain) = structured_optimal_cost(plant, base, config, None)?;
    let base_cost = base_cost
        .finite()
        .ok_or_else(|| Error::PatternNotStabilizable("base pattern".into()))?;
    delta_j_from(plant, base, block, config, base_cost, base_gain.as_ref().map(|s| &s.gain))
}

/// As [`delta_j`] with the base optimum already known; `warm` seeds the
/// reduced synthesis after zeroing `block`.
pub fn delta_j_from<T: Real>(
    plant: &LtiPlant<T>,
    base: &SparsityPattern,
    block: (usize, usize),
    config: &AugLagConfig<T>,
    base_cost: T,
    warm: Option<&GainMatrix<T>>,
) -> Result<Cost<T>> {
    let (i, j) = block;
    check_block(plant.partition(), i, j)?;
    if !base.is_free(i, j) {
        return Err(Error::InvalidConfig(format!("block ({i}, {j}) is not free in the base pattern")));
    }
    let reduced = base.without(i, j);
    let start = warm.map(|g| g.masked(&reduced));
    let (cost, _) = structured_optimal_cost(plant, &reduced, config, start.as_ref())?;
    Ok(cost.minus(base_cost))
}

/// Ranks the blocks free in the first sweep entry.
///
/// Blocks that vanish at an earlier β get lower priority. Blocks vanishing
/// at the same β, and blocks that never vanish, are ordered by [`delta_j`]
/// against the pattern they were removed from, then by `(i, j)`.
pub fn rank_links<T: Real>(
    plant: &LtiPlant<T>,
    sweep: &SweepResult<T>,
    config: &AugLagConfig<T>,
) -> Result<PriorityTable<T>> {
    let first = sweep.entries.first().ok_or(Error::EmptySweep)?;
    let part = plant.partition();
    if !first.pattern.matches(part) {
        return Err(Error::DimensionMismatch("sweep does not match the plant partition".into()));
    }
    let universe: Vec<(usize, usize)> = first.pattern.free_blocks().collect();
    let last = sweep.entries.len();

    // index of the first entry where each block is no longer free
    let vanish: Vec<usize> = universe
        .iter()
        .map(|&(i, j)| {
            (1..last)
                .find(|&k| !sweep.entries[k].pattern.is_free(i, j))
                .unwrap_or(last)
        })
        .collect();

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, &v) in vanish.iter().enumerate() {
        match groups.iter_mut().find(|(g, _)| *g == v) {
            Some((_, members)) => members.push(idx),
            None => groups.push((v, vec![idx])),
        }
    }
    groups.sort_by_key(|(v, _)| *v);

    let mut order = Vec::with_capacity(universe.len());
    for (v, members) in groups {
        let keys: Vec<f64> = if members.len() < 2 {
            vec![0.0; members.len()]
        } else {
            // base: the pattern the group was removed from
            let base_entry = &sweep.entries[v - 1];
            let mut base = base_entry.pattern.clone();
            for &m in &members {
                let (i, j) = universe[m];
                base.set(i, j, true);
            }
            let (base_cost, base_gain) = if base == base_entry.pattern {
                (base_entry.j_polished, base_entry.polished.clone())
            } else {
                let warm = base_entry.gain.masked(&base);
                let (c, g) = structured_optimal_cost(plant, &base, config, Some(&warm))?;
                (c, g.map(|s| s.gain))
            };
            match base_cost {
                Cost::Finite(bc) => {
                    let deltas: Vec<Cost<T>> = members
                        .par_iter()
                        .map(|&m| delta_j_from(plant, &base, universe[m], config, bc, base_gain.as_ref()))
                        .collect::<Result<_>>()?;
                    // losses equal up to solver noise tie-break on (i, j)
                    let quantum = TIE_TOL * (1.0 + bc.as_f64().abs());
                    deltas.iter().map(|d| (d.as_f64() / quantum).round()).collect()
                }
                // nothing to compare against; fall back to index order
                Cost::Unbounded => vec![0.0; members.len()],
            }
        };
        let mut keyed: Vec<(f64, (usize, usize))> =
            members.iter().zip(keys).map(|(&m, d)| (d, universe[m])).collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        order.extend(keyed.into_iter().map(|(_, b)| b));
    }
    PriorityTable::from_gain_with_order(&first.gain, &order)
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::lti::lqr_centralized;
    use crate::sparse::SweepEntry;

    pub(crate) fn nine_block_gain() -> GainMatrix<f64> {
        #[rustfmt::skip]
        let k = DMatrix::from_row_slice(4, 8, &[
            3., 1., 0., 0., 7., 9., 3., 2.,
            0., 0., 1., 5., 0., 0., 1., 2.,
            0., 0., 5., 1., 0., 0., 0., 0.,
            2., 4., 6., 8., 0., 0., 5., 3.,
        ]);
        GainMatrix::new(k, BlockPartition::new(vec![1; 4], vec![2; 4]).unwrap()).unwrap()
    }

    const NINE_BLOCK_ORDER: [(usize, usize); 9] =
        [(0, 0), (3, 0), (1, 1), (2, 1), (3, 1), (0, 2), (0, 3), (1, 3), (3, 3)];

    #[test]
    fn nine_block_table_shape() {
        let g = nine_block_gain();
        let t = PriorityTable::from_gain_with_order(&g, &NINE_BLOCK_ORDER).unwrap();
        assert_eq!((t.r1(), t.r2()), (9, 2));
        assert!(t.sizes().iter().all(|&s| s == 2));
        assert_eq!(t.row(1).unwrap().values, vec![3., 1.]);
        assert_eq!(t.row(9).unwrap().values, vec![5., 3.]);
        assert_eq!(t.reassemble(g.partition()).unwrap(), g);
        assert_eq!(t.priority_of(3, 1), Some(5));
    }

    #[test]
    fn json_round_trip_and_rejects_bad_tables() {
        let t = PriorityTable::from_gain_with_order(&nine_block_gain(), &NINE_BLOCK_ORDER).unwrap();
        let back = PriorityTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        let dup = r#"[{"i":0,"j":0,"q":1,"s":1,"values":[1.0]},{"i":0,"j":0,"q":2,"s":1,"values":[2.0]}]"#;
        assert!(PriorityTable::<f64>::from_json(dup).is_err());
        let gap = r#"[{"i":0,"j":0,"q":2,"s":1,"values":[1.0]}]"#;
        assert!(PriorityTable::<f64>::from_json(gap).is_err());
        let pad = r#"[{"i":0,"j":0,"q":1,"s":1,"values":[1.0,2.0]},{"i":0,"j":1,"q":2,"s":2,"values":[1.0,2.0]}]"#;
        assert!(PriorityTable::<f64>::from_json(pad).is_err());
    }

    fn fake_sweep(part: &BlockPartition, patterns: &[SparsityPattern]) -> SweepResult<f64> {
        let gain = GainMatrix::new(DMatrix::from_element(part.m(), part.n(), 1.0), part.clone()).unwrap();
        SweepResult {
            entries: patterns
                .iter()
                .enumerate()
                .map(|(k, p)| SweepEntry {
                    beta: k as f64,
                    gain: gain.masked(p),
                    pattern: p.clone(),
                    nnz_blocks: p.free_count(),
                    j_polished: Cost::Finite(1.0),
                    polished: None,
                })
                .collect(),
        }
    }

    fn stable_plant(nodes: usize) -> LtiPlant<f64> {
        let mut a = DMatrix::from_element(nodes, nodes, 0.2);
        a.fill_diagonal(-2.0);
        LtiPlant::new(
            a,
            DMatrix::identity(nodes, nodes),
            DMatrix::identity(nodes, nodes),
            DMatrix::identity(nodes, nodes),
            DMatrix::identity(nodes, nodes),
            BlockPartition::uniform(nodes, 1, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn vanish_order_maps_directly_to_priority() {
        let plant = stable_plant(3);
        let part = plant.partition().clone();
        let mut p = SparsityPattern::full(3, 3);
        let mut pats = vec![p.clone()];
        for (i, j) in [(0, 1), (2, 0), (1, 1)] {
            p.set(i, j, false);
            pats.push(p.clone());
        }
        let t = rank_links(&plant, &fake_sweep(&part, &pats), &AugLagConfig::default()).unwrap();
        assert_eq!(t.r1(), 9);
        assert_eq!(t.priority_of(0, 1), Some(1));
        assert_eq!(t.priority_of(2, 0), Some(2));
        assert_eq!(t.priority_of(1, 1), Some(3));
        let again = rank_links(&plant, &fake_sweep(&part, &pats), &AugLagConfig::default()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn simultaneous_vanish_is_ranked_by_loss() {
        let plant = stable_plant(2);
        let part = plant.partition().clone();
        let pats = [SparsityPattern::full(2, 2), SparsityPattern::empty(2, 2)];
        let cfg = AugLagConfig::default();
        let t = rank_links(&plant, &fake_sweep(&part, &pats), &cfg).unwrap();
        let full = SparsityPattern::full(2, 2);
        let mut prev = Cost::Finite(f64::NEG_INFINITY);
        for r in t.rows() {
            let d = delta_j(&plant, &full, (r.i, r.j), &cfg).unwrap();
            assert!(d.as_f64() >= prev.as_f64() - 1e-9, "deltas must ascend with q");
            prev = d;
        }
        // dropping a local link costs more than a coupling link here
        assert!(t.priority_of(0, 0).unwrap() > 2 && t.priority_of(1, 1).unwrap() > 2);
    }

    #[test]
    fn empty_sweep_is_an_error() {
        let plant = stable_plant(2);
        let sw = SweepResult::<f64> { entries: vec![] };
        assert!(matches!(rank_links(&plant, &sw, &AugLagConfig::default()), Err(Error::EmptySweep)));
    }

    #[test]
    fn removing_the_only_stabilizing_link_is_unbounded() {
        let plant = LtiPlant::new(
            DMatrix::from_diagonal(&nalgebra::dvector![1.0, -1.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            BlockPartition::uniform(2, 1, 1).unwrap(),
        )
        .unwrap();
        let base = SparsityPattern::diagonal(2, 2);
        let cfg = AugLagConfig::default();
        assert_eq!(delta_j(&plant, &base, (0, 0), &cfg).unwrap(), Cost::Unbounded);
        let d: f64 = delta_j(&plant, &base, (1, 1), &cfg).unwrap().finite().unwrap();
        assert!(d >= -1e-6 && d.is_finite());
    }

    #[test]
    fn removing_inactive_block_costs_nothing() {
        // decoupled nodes: the optimal coupling blocks are zero
        let mut plant = stable_plant(2);
        plant = LtiPlant::new(
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]),
            plant.b().clone(),
            plant.w().clone(),
            plant.q().clone(),
            plant.r().clone(),
            plant.partition().clone(),
        )
        .unwrap();
        let kc = lqr_centralized(&plant).unwrap();
        assert!(kc.block(0, 1).norm() < 1e-10);
        let d = delta_j(&plant, &SparsityPattern::full(2, 2), (0, 1), &AugLagConfig::default())
            .unwrap()
            .finite()
            .unwrap();
        assert!(d.abs() <= 1e-6);
    }
}
