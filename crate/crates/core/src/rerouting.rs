//! Online countermeasure: reroute attacked blocks' data through sacrificed
//! lower-priority links, or drop it when no capacity is left.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{BlockPartition, SparsityPattern};
use crate::prioritization::PriorityTable;
use crate::scalar::Real;

/// Attacked priorities (1-based). Serialized as `{"attacked_priorities": [..]}`
/// or `{"attacked_block": q}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Attack {
    AttackedPriorities(Vec<usize>),
    AttackedBlock(usize),
}

impl Attack {
    pub fn none() -> Self {
        Attack::AttackedPriorities(Vec::new())
    }

    /// Boolean vector indexed by `q - 1`.
    pub fn to_mask(&self, r1: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; r1];
        let qs = match self {
            Attack::AttackedPriorities(v) => v.as_slice(),
            Attack::AttackedBlock(q) => std::slice::from_ref(q),
        };
        for &q in qs {
            if q == 0 || q > r1 {
                return Err(Error::IndexOutOfRange { index: q, len: r1 });
            }
            mask[q - 1] = true;
        }
        Ok(mask)
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Attack::AttackedPriorities(attacked_of(mask).into_iter().collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerouteAlgorithm {
    /// Equal-size blocks, pairwise host assignment.
    Uniform,
    /// One attacked block of a mixed-size table.
    Single,
    /// General case.
    Multi,
}

/// Hosts given up for one rerouted block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub attacked: usize,
    pub hosts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RerouteOutcome<T: Real> {
    pub algorithm: RerouteAlgorithm,
    /// `false` when the countermeasure cannot be applied; the table is then unchanged.
    pub feasible: bool,
    pub attacked: BTreeSet<usize>,
    pub sacrificed: BTreeSet<usize>,
    pub rerouted: BTreeSet<usize>,
    pub dropped: BTreeSet<usize>,
    pub assignments: Vec<Assignment>,
    pub warnings: Vec<String>,
    pub n_final: PriorityTable<T>,
}

impl<T: Real> RerouteOutcome<T> {
    fn start(algorithm: RerouteAlgorithm, table: &PriorityTable<T>, attacked: BTreeSet<usize>) -> Self {
        Self {
            algorithm,
            feasible: true,
            attacked,
            sacrificed: BTreeSet::new(),
            rerouted: BTreeSet::new(),
            dropped: BTreeSet::new(),
            assignments: Vec::new(),
            warnings: Vec::new(),
            n_final: table.clone(),
        }
    }

    fn infeasible(mut self) -> Self {
        self.feasible = false;
        self
    }

    fn sacrifice(&mut self, q: usize) {
        self.sacrificed.insert(q);
        zero_row(&mut self.n_final, q);
    }

    fn drop_block(&mut self, q: usize) {
        self.dropped.insert(q);
        zero_row(&mut self.n_final, q);
    }

    fn reroute(&mut self, q: usize, hosts: Vec<usize>) {
        for &h in &hosts {
            self.sacrifice(h);
        }
        self.rerouted.insert(q);
        self.assignments.push(Assignment { attacked: q, hosts });
    }

    /// Priorities whose links are silent after the countermeasure.
    pub fn removed(&self) -> BTreeSet<usize> {
        self.sacrificed.union(&self.dropped).copied().collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn zero_row<T: Real>(table: &mut PriorityTable<T>, q: usize) {
    table.row_mut(q).values.iter_mut().for_each(|v| *v = T::zero());
}

fn attacked_of(mask: &[bool]) -> BTreeSet<usize> {
    mask.iter().enumerate().filter(|(_, &a)| a).map(|(k, _)| k + 1).collect()
}

fn check_mask<T: Real>(table: &PriorityTable<T>, mask: &[bool]) -> Result<()> {
    if mask.len() != table.r1() {
        return Err(Error::DimensionMismatch(format!(
            "attack vector has {} entries, table has {} rows",
            mask.len(),
            table.r1()
        )));
    }
    Ok(())
}

/// Pairs the j-th highest attacked priority with the j-th lowest available
/// host; reroutes when the attacked link outranks its host, else drops.
pub fn reroute_uniform<T: Real>(table: &PriorityTable<T>, p_attack: &[bool]) -> Result<RerouteOutcome<T>> {
    check_mask(table, p_attack)?;
    let sizes = table.sizes();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InvalidAssumption("uniform rerouting needs equal block sizes".into()));
    }
    let attacked = attacked_of(p_attack);
    let r3 = attacked.len();
    let mut out = RerouteOutcome::start(RerouteAlgorithm::Uniform, table, attacked.clone());
    if r3 == 0 {
        return Ok(out);
    }
    if 2 * r3 > table.r1() {
        return Ok(out.infeasible());
    }
    let hosts: Vec<usize> = (1..=table.r1()).filter(|q| !attacked.contains(q)).collect();
    let mut next = 0;
    for &a in attacked.iter().rev() {
        match hosts.get(next) {
            Some(&h) if a > h => {
                out.reroute(a, vec![h]);
                next += 1;
            }
            _ => out.drop_block(a),
        }
    }
    Ok(out)
}

/// Greedily sacrifices the lowest-priority hosts below `attacked` until
/// their capacity covers it. Returns `None` when they cannot.
fn host_loop<T: Real>(
    table: &PriorityTable<T>,
    attacked: usize,
    unavailable: &dyn Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let sizes = table.sizes();
    let candidates: Vec<usize> = (1..attacked).filter(|&q| !unavailable(q)).collect();
    let c1: usize = candidates.iter().map(|&q| sizes[q - 1]).sum();
    let mut c2 = sizes[attacked - 1] as isize;
    if c1 < c2 as usize {
        return None;
    }
    let mut hosts = Vec::new();
    for q in candidates {
        if c2 <= 0 {
            break;
        }
        c2 -= sizes[q - 1] as isize;
        hosts.push(q);
    }
    Some(hosts)
}

/// Single attacked link of priority `r_attack`.
pub fn reroute_single<T: Real>(table: &PriorityTable<T>, r_attack: usize) -> Result<RerouteOutcome<T>> {
    if r_attack == 0 || r_attack > table.r1() {
        return Err(Error::IndexOutOfRange { index: r_attack, len: table.r1() });
    }
    let mut out = RerouteOutcome::start(RerouteAlgorithm::Single, table, BTreeSet::from([r_attack]));
    match host_loop(table, r_attack, &|_| false) {
        Some(hosts) if r_attack > 1 => out.reroute(r_attack, hosts),
        _ => out.drop_block(r_attack),
    }
    Ok(out)
}

/// Several attacked links of arbitrary sizes; hosts are never reused.
pub fn reroute_multi<T: Real>(table: &PriorityTable<T>, p_attack: &[bool]) -> Result<RerouteOutcome<T>> {
    check_mask(table, p_attack)?;
    let sizes = table.sizes();
    let attacked = attacked_of(p_attack);
    let r1 = table.r1();
    let r3 = attacked.len();
    let mut out = RerouteOutcome::start(RerouteAlgorithm::Multi, table, attacked.clone());
    let Some(&top) = attacked.last() else {
        return Ok(out);
    };
    let b1: usize = attacked.iter().map(|&q| sizes[q - 1]).sum();
    let b2: usize = (1..top).filter(|q| !attacked.contains(q)).map(|q| sizes[q - 1]).sum();

    if b2 == 0 && 2 * r3 < r1 {
        for q in 1..=r3 {
            if attacked.contains(&q) {
                out.drop_block(q);
            } else {
                out.warnings.push(format!("row q={q} zeroed although it is not attacked"));
                out.sacrifice(q);
            }
        }
        // attacked rows above r3 have nowhere to go
        for &q in attacked.iter().filter(|&&q| q > r3) {
            out.drop_block(q);
        }
        return Ok(out);
    }
    if b1 > b2 && 2 * r3 >= r1 {
        return Ok(out.infeasible());
    }
    let mut used = BTreeSet::new();
    for &a in attacked.iter().rev() {
        match host_loop(table, a, &|q| attacked.contains(&q) || used.contains(&q)) {
            Some(hosts) if !hosts.is_empty() => {
                used.extend(hosts.iter().copied());
                out.reroute(a, hosts);
            }
            _ => out.drop_block(a),
        }
    }
    Ok(out)
}

/// Uniform rerouting for equal sizes, single-link rerouting for one attacked
/// block, the general algorithm otherwise.
pub fn reroute<T: Real>(table: &PriorityTable<T>, attack: &Attack) -> Result<RerouteOutcome<T>> {
    let mask = attack.to_mask(table.r1())?;
    let sizes = table.sizes();
    let attacked = attacked_of(&mask);
    if sizes.windows(2).all(|w| w[0] == w[1]) {
        reroute_uniform(table, &mask)
    } else if attacked.len() == 1 {
        reroute_single(table, *attacked.first().unwrap())
    } else {
        reroute_multi(table, &mask)
    }
}

/// Post-attack pattern: the table's blocks minus sacrificed and dropped ones.
pub fn pattern_from<T: Real>(outcome: &RerouteOutcome<T>, partition: &BlockPartition) -> Result<SparsityPattern> {
    if !outcome.feasible {
        return Err(Error::InfeasibleOutcome);
    }
    outcome.n_final.check_partition(partition)?;
    let removed = outcome.removed();
    let mut p = SparsityPattern::empty(partition.row_blocks(), partition.col_blocks());
    for r in outcome.n_final.rows().iter().filter(|r| !removed.contains(&r.q)) {
        p.set(r.i, r.j, true);
    }
    Ok(p)
}

/// Pre-attack pattern with the attacked blocks removed.
pub fn attacked_pattern<T: Real>(
    table: &PriorityTable<T>,
    attack: &Attack,
    partition: &BlockPartition,
) -> Result<SparsityPattern> {
    let mask = attack.to_mask(table.r1())?;
    let mut p = table.pattern(partition)?;
    for r in table.rows().iter().filter(|r| mask[r.q - 1]) {
        p.set(r.i, r.j, false);
    }
    Ok(p)
}
