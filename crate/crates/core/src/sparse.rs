//! Sparsity-promoting H2 synthesis:
//!
//! ```text
//! minimize  J(K) + β Σ_ij G_ij ‖K_ij‖_F,    G_ij = 1 / (‖K_ij‖_F + ε)
//! ```
//!
//! solved for a fixed weight matrix `G` by proximal gradient (default) or
//! ADMM, with the weights refreshed a few times per β and β swept upward
//! with warm starts.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::descent::{self, DescentSettings};
use crate::error::{Error, Result};
use crate::lti::matio::{from_rows, to_rows};
use crate::lti::{
    cost_and_gradient, cost_of, lqr_centralized, BlockPartition, Cost, GainMatrix, LtiPlant,
    SparsityPattern,
};
use crate::scalar::Real;
use crate::structured::{structured_optimal_cost, AugLagConfig};

/// How the β values of a sweep are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum BetaSchedule<T: Real> {
    /// Absolute β values.
    Explicit(Vec<T>),
    /// `points` log-spaced values from `low · J(K_c)` to `high · J(K_c)`.
    RelativeLog { points: usize, low: T, high: T },
}

impl<T: Real> Default for BetaSchedule<T> {
    fn default() -> Self {
        BetaSchedule::RelativeLog {
            points: 30,
            low: T::lit(1e-4),
            high: T::lit(1e2),
        }
    }
}

impl<T: Real> BetaSchedule<T> {
    /// Concrete β values given the centralized cost.
    pub fn resolve(&self, lqr_cost: T) -> Result<Vec<T>> {
        let betas = match self {
            BetaSchedule::Explicit(v) => v.clone(),
            BetaSchedule::RelativeLog { points, low, high } => {
                if *points == 0 || !(*low > T::zero()) || !(*high >= *low) {
                    return Err(Error::InvalidConfig("log schedule needs 0 < low <= high".into()));
                }
                let (lo, hi) = (low.ln(), high.ln());
                (0..*points)
                    .map(|k| {
                        let frac = if *points == 1 {
                            T::zero()
                        } else {
                            T::from_usize(k).unwrap() / T::from_usize(points - 1).unwrap()
                        };
                        (lo + (hi - lo) * frac).exp() * lqr_cost
                    })
                    .collect()
            }
        };
        if betas.is_empty() {
            return Err(Error::InvalidConfig("β schedule is empty".into()));
        }
        if betas.iter().any(|b| !(*b >= T::zero())) || betas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(
                "β schedule must be non-negative and strictly increasing".into(),
            ));
        }
        Ok(betas)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparseMethod {
    /// Proximal gradient with block soft-thresholding; monotone in the objective.
    #[default]
    ProximalGradient,
    /// ADMM on the split `K = F`.
    Admm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct SparsityConfig<T: Real> {
    pub beta_schedule: BetaSchedule<T>,
    pub epsilon_reweight: T,
    /// Blocks with Frobenius norm at or below this count as zero.
    pub zero_threshold: T,
    pub method: SparseMethod,
    /// ADMM penalty.
    pub rho: T,
    /// Iteration cap per fixed-weight solve.
    pub max_outer: usize,
    /// Weight refreshes per β.
    pub max_reweight: usize,
    pub tol_primal: T,
    pub tol_dual: T,
    /// Proximal-gradient stop: `‖K⁺ - K‖_F / t <= tol · (1 + ‖K‖_F)`.
    pub tol_stationarity: T,
    /// Structured polish applied to each footprint.
    pub polish: AugLagConfig<T>,
}

impl<T: Real> Default for SparsityConfig<T> {
    fn default() -> Self {
        Self {
            beta_schedule: BetaSchedule::default(),
            epsilon_reweight: T::lit(1e-3),
            zero_threshold: T::tol(1e-6),
            method: SparseMethod::default(),
            rho: T::lit(100.0),
            max_outer: 5_000,
            max_reweight: 3,
            tol_primal: T::tol(1e-4),
            tol_dual: T::tol(1e-4),
            tol_stationarity: T::tol(1e-6),
            polish: AugLagConfig::default(),
        }
    }
}

impl<T: Real> SparsityConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_reweight > T::zero() && self.epsilon_reweight < T::one()) {
            return Err(Error::InvalidConfig("epsilon_reweight must lie in (0, 1)".into()));
        }
        if !(self.zero_threshold > T::zero()) || !(self.rho > T::zero()) {
            return Err(Error::InvalidConfig("zero_threshold and rho must be positive".into()));
        }
        if let BetaSchedule::Explicit(b) = &self.beta_schedule {
            BetaSchedule::Explicit(b.clone()).resolve(T::one())?;
        }
        self.polish.validate()
    }
}

/// Frobenius norm of every block, as a block-grid matrix.
pub fn block_frobenius<T: Real>(k: &GainMatrix<T>) -> DMatrix<T> {
    let p = k.partition();
    DMatrix::from_fn(p.row_blocks(), p.col_blocks(), |i, j| k.block(i, j).norm())
}

/// `G_ij = 1 / (norms_ij + eps)`.
pub fn reweight<T: Real>(norms: &DMatrix<T>, eps: T) -> DMatrix<T> {
    norms.map(|v| T::one() / (v + eps))
}

/// Proximal map of `τ ‖·‖_F`: `(1 - τ/‖V‖_F)₊ V`.
pub fn block_soft_threshold<T: Real>(v: DMatrixView<'_, T>, tau: T) -> DMatrix<T> {
    let nrm = v.norm();
    if nrm <= tau {
        DMatrix::zeros(v.nrows(), v.ncols())
    } else {
        v.clone_owned() * ((nrm - tau) / nrm)
    }
}

/// Blockwise soft-threshold of `v` with per-block thresholds `scale · G_ij`.
fn prox_blocks<T: Real>(
    v: &DMatrix<T>,
    part: &BlockPartition,
    weights: &DMatrix<T>,
    scale: T,
) -> DMatrix<T> {
    let mut out = v.clone();
    for (i, j) in part.blocks() {
        let (r, c) = (part.row_range(i), part.col_range(j));
        let shrunk = block_soft_threshold(v.view((r.start, c.start), (r.len(), c.len())), scale * weights[(i, j)]);
        out.view_mut((r.start, c.start), (r.len(), c.len())).copy_from(&shrunk);
    }
    out
}

fn penalty<T: Real>(k: &DMatrix<T>, part: &BlockPartition, weights: &DMatrix<T>) -> T {
    part.blocks().fold(T::zero(), |acc, (i, j)| {
        let (r, c) = (part.row_range(i), part.col_range(j));
        acc + weights[(i, j)] * k.view((r.start, c.start), (r.len(), c.len())).norm()
    })
}

/// `J(K) + β Σ G_ij ‖K_ij‖_F`, unbounded off the stabilizing set.
pub fn penalized_objective<T: Real>(
    plant: &LtiPlant<T>,
    k: &GainMatrix<T>,
    beta: T,
    weights: &DMatrix<T>,
) -> Cost<T> {
    match cost_of(plant, k.matrix()) {
        Cost::Finite(j) => Cost::Finite(j + beta * penalty(k.matrix(), k.partition(), weights)),
        Cost::Unbounded => Cost::Unbounded,
    }
}

#[derive(Clone, Debug)]
pub struct SparseGainOutcome<T: Real> {
    pub gain: GainMatrix<T>,
    /// Penalized objective at each iterate, starting from the initial gain.
    pub objective_history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `J(K) + β Σ G_ij ‖K_ij‖_F` for fixed weights from `k_init`.
pub fn sparse_gain<T: Real>(
    plant: &LtiPlant<T>,
    beta: T,
    weights: &DMatrix<T>,
    k_init: &GainMatrix<T>,
    config: &SparsityConfig<T>,
) -> Result<SparseGainOutcome<T>> {
    let part = plant.partition();
    if weights.shape() != (part.row_blocks(), part.col_blocks()) {
        return Err(Error::DimensionMismatch("weight grid does not match partition".into()));
    }
    if !(beta >= T::zero()) {
        return Err(Error::InvalidConfig("β must be non-negative".into()));
    }
    match config.method {
        SparseMethod::ProximalGradient => proximal_gradient(plant, beta, weights, k_init, config),
        SparseMethod::Admm => admm(plant, beta, weights, k_init, config),
    }
}

fn proximal_gradient<T: Real>(
    plant: &LtiPlant<T>,
    beta: T,
    weights: &DMatrix<T>,
    k_init: &GainMatrix<T>,
    config: &SparsityConfig<T>,
) -> Result<SparseGainOutcome<T>> {
    let part = plant.partition();
    let mut k = k_init.matrix().clone();
    let (mut j, mut g) = cost_and_gradient(plant, &k).ok_or(Error::NotStabilizing)?;
    let mut history = vec![j + beta * penalty(&k, part, weights)];
    let mut step = T::one() / g.norm().max(T::one());
    let half = T::lit(0.5);
    let mut flat = 0;

    for iter in 0..config.max_outer {
        let mut accepted = None;
        let mut any_feasible = false;
        let mut t = step;
        for _ in 0..60 {
            let next = prox_blocks(&(&k - &g * t), part, weights, t * beta);
            let d = &next - &k;
            if let Some((jn, gn)) = cost_and_gradient(plant, &next) {
                any_feasible = true;
                let model = j + g.dot(&d) + d.norm_squared() * half / t;
                if jn <= model {
                    accepted = Some((next, jn, gn, d, t));
                    break;
                }
            }
            t *= half;
        }
        let Some((next, jn, gn, d, used)) = accepted else {
            if !any_feasible {
                return Err(Error::LostStabilizability);
            }
            // no representable decrease left
            return Ok(SparseGainOutcome {
                gain: k_init.with_matrix(k)?,
                objective_history: history,
                iterations: iter,
                converged: false,
            });
        };
        let y = &gn - &g;
        let sy = d.dot(&y);
        step = if sy > T::zero() {
            d.norm_squared() / sy
        } else {
            used * T::lit(2.0)
        };
        step = step.max(T::tol(1e-14)).min(T::lit(1e12));

        k = next;
        j = jn;
        g = gn;
        let f = j + beta * penalty(&k, part, weights);
        let prev = *history.last().unwrap();
        flat = if prev - f <= T::default_epsilon() * T::lit(16.0) * prev.abs() {
            flat + 1
        } else {
            0
        };
        history.push(f);
        if flat >= 10 {
            // objective is flat to rounding; no further progress is possible
            return Ok(SparseGainOutcome {
                gain: k_init.with_matrix(k)?,
                objective_history: history,
                iterations: iter + 1,
                converged: false,
            });
        }
        if d.norm() / used <= config.tol_stationarity * (T::one() + k.norm()) {
            return Ok(SparseGainOutcome {
                gain: k_init.with_matrix(k)?,
                objective_history: history,
                iterations: iter + 1,
                converged: true,
            });
        }
    }
    Ok(SparseGainOutcome {
        gain: k_init.with_matrix(k)?,
        objective_history: history,
        iterations: config.max_outer,
        converged: false,
    })
}

fn admm<T: Real>(
    plant: &LtiPlant<T>,
    beta: T,
    weights: &DMatrix<T>,
    k_init: &GainMatrix<T>,
    config: &SparsityConfig<T>,
) -> Result<SparseGainOutcome<T>> {
    let part = plant.partition();
    let rho = config.rho;
    let half = T::lit(0.5);
    let mut k = k_init.matrix().clone();
    if cost_of(plant, &k) == Cost::Unbounded {
        return Err(Error::NotStabilizing);
    }
    let mut f = k.clone();
    let mut u = DMatrix::<T>::zeros(k.nrows(), k.ncols());
    let mut history = vec![cost_of(plant, &k).finite().unwrap() + beta * penalty(&k, part, weights)];
    let inner = DescentSettings {
        max_iter: 2_000,
        grad_tol: config.tol_stationarity,
        ..Default::default()
    };

    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..config.max_outer {
        iterations = iter + 1;
        let target = &f - &u;
        let out = descent::minimize(
            k.clone(),
            None,
            |x| {
                let (j, g) = cost_and_gradient(plant, x)?;
                let diff = x - &target;
                Some((j + diff.norm_squared() * rho * half, g + diff * rho))
            },
            &inner,
        )
        .ok_or(Error::LostStabilizability)?;
        k = out.x;
        let f_prev = std::mem::replace(&mut f, prox_blocks(&(&k + &u), part, weights, beta / rho));
        u += &k - &f;
        if let Cost::Finite(jf) = cost_of(plant, &f) {
            history.push(jf + beta * penalty(&f, part, weights));
        }
        let primal = (&k - &f).norm();
        let dual = (&f - &f_prev).norm() * rho;
        let scale = T::one() + k.norm();
        if primal <= config.tol_primal * scale && dual <= config.tol_dual * scale {
            converged = true;
            break;
        }
    }
    let out = if cost_of(plant, &f).is_finite() { f } else { k };
    Ok(SparseGainOutcome {
        gain: k_init.with_matrix(out)?,
        objective_history: history,
        iterations,
        converged,
    })
}

#[derive(Clone, Debug)]
pub struct SweepEntry<T: Real> {
    pub beta: T,
    /// Sparse gain at this β (before polishing).
    pub gain: GainMatrix<T>,
    pub pattern: SparsityPattern,
    pub nnz_blocks: usize,
    /// Structured-optimal cost on `pattern`.
    pub j_polished: Cost<T>,
    pub polished: Option<GainMatrix<T>>,
}

#[derive(Clone, Debug)]
pub struct SweepResult<T: Real> {
    pub entries: Vec<SweepEntry<T>>,
}

/// Warm-started sweep over the β schedule with reweighting and a structured
/// polish of each footprint.
pub fn sparsity_sweep<T: Real>(
    plant: &LtiPlant<T>,
    config: &SparsityConfig<T>,
) -> Result<SweepResult<T>> {
    config.validate()?;
    let kc = lqr_centralized(plant)?;
    let jc = cost_of(plant, kc.matrix())
        .finite()
        .ok_or(Error::RiccatiFailure("LQR gain is not stabilizing".into()))?;
    let betas = config.beta_schedule.resolve(jc)?;

    let mut k = kc;
    let mut entries = Vec::with_capacity(betas.len());
    for beta in betas {
        for _ in 0..config.max_reweight.max(1) {
            let weights = reweight(&block_frobenius(&k), config.epsilon_reweight);
            k = sparse_gain(plant, beta, &weights, &k, config)?.gain;
        }
        let pattern = SparsityPattern::from_gain(&k, config.zero_threshold);
        let start = k.masked(&pattern);
        let (j_polished, polished) =
            structured_optimal_cost(plant, &pattern, &config.polish, Some(&start))?;
        log::debug!(
            "beta {:.4e}: {} blocks, J* {}",
            beta.as_f64(),
            pattern.free_count(),
            j_polished
        );
        entries.push(SweepEntry {
            beta,
            nnz_blocks: pattern.free_count(),
            gain: k.clone(),
            pattern,
            j_polished,
            polished: polished.map(|s| s.gain),
        });
    }
    Ok(SweepResult { entries })
}

/// Serialized sweep entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SweepEntryDocument<T: Real> {
    pub beta: T,
    #[serde(rename = "K")]
    pub k: Vec<Vec<T>>,
    pub pattern: SparsityPattern,
    pub nnz_blocks: usize,
    /// `null` when the footprint admits no stabilizing gain.
    #[serde(rename = "J_polished")]
    pub j_polished: Option<T>,
    #[serde(rename = "K_polished")]
    pub k_polished: Option<Vec<Vec<T>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct SweepDocument<T: Real> {
    pub row_block_sizes: Vec<usize>,
    pub col_block_sizes: Vec<usize>,
    pub entries: Vec<SweepEntryDocument<T>>,
}

impl<T: Real> SweepResult<T> {
    /// CSV with header `beta,nnz_blocks,J_polished`; costs use 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,nnz_blocks,J_polished\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_sig(e.beta.as_f64()),
                e.nnz_blocks,
                fmt_sig(e.j_polished.as_f64())
            );
        }
        out
    }

    pub fn to_document(&self) -> Result<SweepDocument<T>> {
        let first = self.entries.first().ok_or(Error::EmptySweep)?;
        let part = first.gain.partition();
        Ok(SweepDocument {
            row_block_sizes: part.row_sizes().to_vec(),
            col_block_sizes: part.col_sizes().to_vec(),
            entries: self
                .entries
                .iter()
                .map(|e| SweepEntryDocument {
                    beta: e.beta,
                    k: to_rows(e.gain.matrix()),
                    pattern: e.pattern.clone(),
                    nnz_blocks: e.nnz_blocks,
                    j_polished: e.j_polished.finite(),
                    k_polished: e.polished.as_ref().map(|g| to_rows(g.matrix())),
                })
                .collect(),
        })
    }

    pub fn from_document(doc: &SweepDocument<T>) -> Result<Self> {
        let part = BlockPartition::new(doc.row_block_sizes.clone(), doc.col_block_sizes.clone())?;
        let entries = doc
            .entries
            .iter()
            .map(|e| {
                let gain = GainMatrix::new(from_rows(&e.k, "K", part.n())?, part.clone())?;
                let polished = e
                    .k_polished
                    .as_ref()
                    .map(|k| GainMatrix::new(from_rows(k, "K_polished", part.n())?, part.clone()))
                    .transpose()?;
                Ok(SweepEntry {
                    beta: e.beta,
                    gain,
                    pattern: e.pattern.clone(),
                    nnz_blocks: e.nnz_blocks,
                    j_polished: e.j_polished.map_or(Cost::Unbounded, Cost::Finite),
                    polished,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }
}

/// Scientific notation with 17 significant digits; `inf` for infinities.
pub fn fmt_sig(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{cost_gradient, is_stabilizing};

    #[test]
    fn soft_threshold_matches_scalar_shrinkage() {
        for (v, tau, want) in [(3.0f64, 1.0, 2.0), (-3.0, 1.0, -2.0), (0.5, 1.0, 0.0), (1.0, 1.0, 0.0)] {
            let m = DMatrix::from_element(1, 1, v);
            let out = block_soft_threshold(m.as_view(), tau);
            assert!((out[(0, 0)] - want).abs() < 1e-15);
        }
        // block case scales the whole block
        let m = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let out = block_soft_threshold(m.as_view(), 2.5);
        assert!((out - m * 0.5).norm() < 1e-15);
    }

    #[test]
    fn reweight_values() {
        let norms = DMatrix::from_row_slice(1, 3, &[0.0, 10f64.sqrt(), 5.0]);
        let g = reweight(&norms, 1e-3);
        assert!((g[(0, 0)] - 1000.0).abs() < 1e-9);
        assert!((g[(0, 1)] - 0.31613).abs() < 1e-5);
        assert!(g[(0, 2)] < g[(0, 1)]);
    }

    #[test]
    fn block_norms_of_zero_and_identity() {
        let part = BlockPartition::new(vec![2], vec![2, 1]).unwrap();
        let z = GainMatrix::<f64>::zeros(part.clone());
        assert_eq!(block_frobenius(&z), DMatrix::zeros(1, 2));
        let mut k = z.clone();
        k.set_block_values(0, 0, &[1., 0., 0., 1.]);
        assert!((block_frobenius(&k)[(0, 0)] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        assert!(BetaSchedule::Explicit(vec![1.0, 1.0]).resolve(1.0).is_err());
        assert!(BetaSchedule::Explicit(vec![-1.0, 1.0]).resolve(1.0).is_err());
        let s = BetaSchedule::<f64>::default().resolve(2.0).unwrap();
        assert_eq!(s.len(), 30);
        assert!((s[0] - 2e-4).abs() < 1e-16);
        assert!((s[29] - 200.0).abs() < 1e-10);
    }

    fn coupled_plant() -> LtiPlant<f64> {
        LtiPlant::new(
            DMatrix::from_row_slice(3, 3, &[-1.0, 0.4, 0.2, 0.3, -0.8, 0.5, 0.1, 0.2, -0.5]),
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
            BlockPartition::uniform(3, 1, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_beta_recovers_lqr() {
        let p = coupled_plant();
        let kc = lqr_centralized(&p).unwrap();
        let start = GainMatrix::new(kc.matrix() * 1.3, p.partition().clone()).unwrap();
        let cfg = SparsityConfig::default();
        let out = sparse_gain(&p, 0.0, &DMatrix::from_element(3, 3, 1.0), &start, &cfg).unwrap();
        assert!(out.converged);
        let rel = (out.gain.matrix() - kc.matrix()).norm() / kc.matrix().norm();
        assert!(rel < 1e-5, "rel {rel}");
        let g = cost_gradient(&p, &out.gain).unwrap();
        assert!(g.norm() <= 1e-6 * (1.0 + out.gain.matrix().norm()) * 10.0);
    }

    #[test]
    fn objective_never_increases() {
        let p = coupled_plant();
        let kc = lqr_centralized(&p).unwrap();
        let w = reweight(&block_frobenius(&kc), 1e-3);
        let jc = cost_of(&p, kc.matrix()).finite().unwrap();
        for beta in [1e-3 * jc, 1e-1 * jc, 1.0 * jc] {
            let out = sparse_gain(&p, beta, &w, &kc, &SparsityConfig::default()).unwrap();
            for pair in out.objective_history.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-10);
            }
            assert!(is_stabilizing(&p, &out.gain).unwrap());
        }
    }

    #[test]
    fn huge_beta_on_stable_plant_zeroes_off_diagonal() {
        let p = coupled_plant();
        let kc = lqr_centralized(&p).unwrap();
        let jc = cost_of(&p, kc.matrix()).finite().unwrap();
        let w = reweight(&block_frobenius(&kc), 1e-3);
        let cfg = SparsityConfig::default();
        let out = sparse_gain(&p, 1e6 * jc, &w, &kc, &cfg).unwrap();
        let norms = block_frobenius(&out.gain);
        for (i, j) in p.partition().blocks() {
            if i != j {
                assert!(norms[(i, j)] <= cfg.zero_threshold);
            }
        }
        assert!(is_stabilizing(&p, &out.gain).unwrap());
    }

    #[test]
    fn admm_agrees_on_extremes() {
        let p = coupled_plant();
        let kc = lqr_centralized(&p).unwrap();
        let cfg = SparsityConfig {
            method: SparseMethod::Admm,
            rho: 10.0,
            ..Default::default()
        };
        let ones = DMatrix::from_element(3, 3, 1.0);
        let out = sparse_gain(&p, 0.0, &ones, &kc, &cfg).unwrap();
        assert!((out.gain.matrix() - kc.matrix()).norm() < 1e-4 * kc.matrix().norm());

        let jc = cost_of(&p, kc.matrix()).finite().unwrap();
        let big = sparse_gain(&p, 1e3 * jc, &ones, &kc, &cfg).unwrap();
        assert!(big.gain.matrix().norm() <= cfg.zero_threshold);
        assert!(is_stabilizing(&p, &big.gain).unwrap());
    }

    #[test]
    fn single_zero_beta_sweep_is_lqr() {
        let p = coupled_plant();
        let cfg = SparsityConfig {
            beta_schedule: BetaSchedule::Explicit(vec![0.0]),
            ..Default::default()
        };
        let sw = sparsity_sweep(&p, &cfg).unwrap();
        assert_eq!(sw.entries.len(), 1);
        let kc = lqr_centralized(&p).unwrap();
        assert!((sw.entries[0].gain.matrix() - kc.matrix()).norm() < 1e-5 * kc.matrix().norm());
        assert_eq!(sw.entries[0].nnz_blocks, 9);
        let csv = sw.to_csv();
        assert!(csv.starts_with("beta,nnz_blocks,J_polished\n0.0000000000000000e0,9,"));
        let doc = sw.to_document().unwrap();
        let back = SweepResult::from_document(&doc).unwrap();
        assert_eq!(back.to_document().unwrap(), doc);
    }
}
