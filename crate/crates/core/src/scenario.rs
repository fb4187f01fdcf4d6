//! Random networked plants, scenario files and the end-to-end pipeline:
//! sweep, rank, attack, reroute, resynthesize, report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{
    cost_of, spectral_abscissa, BlockPartition, Cost, GainDocument, GainMatrix, LtiPlant, PlantDocument,
    SparsityPattern,
};
use crate::prioritization::{rank_links, PriorityTable};
use crate::render::{BlockGrid, RenderFormat};
use crate::rerouting::{attacked_pattern, pattern_from, reroute, Attack, RerouteOutcome};
use crate::sparse::{fmt_sig, sparsity_sweep, SparsityConfig, SweepResult};
use crate::structured::{structured_optimal_cost, AugLagConfig};

/// Random coupled network of identical-shape nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub nodes: usize,
    pub states_per_node: usize,
    pub inputs_per_node: usize,
    pub seed: u64,
    /// Distance of the dominant eigenvalue from the imaginary axis.
    pub delta: f64,
    /// Overrides the per-node gain partition (rows are inputs, columns states).
    pub row_block_sizes: Option<Vec<usize>>,
    pub col_block_sizes: Option<Vec<usize>>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            nodes: 10,
            states_per_node: 2,
            inputs_per_node: 1,
            seed: 0,
            delta: 0.1,
            row_block_sizes: None,
            col_block_sizes: None,
        }
    }
}

/// `A = M - (α(M) + δ) I` with `M` uniform on `[0, 1]`, `B_ii = 10 [I; 0]`,
/// `W = 0.5 I`, `Q = I`, `R = 10 I`.
pub fn generate_plant(spec: &GeneratorSpec) -> Result<LtiPlant<f64>> {
    let (nodes, ni, mi) = (spec.nodes, spec.states_per_node, spec.inputs_per_node);
    if nodes < 2 || ni == 0 || mi == 0 || mi > ni {
        return Err(Error::InvalidConfig(
            "generator needs at least 2 nodes and 1 <= inputs_per_node <= states_per_node".into(),
        ));
    }
    if !(spec.delta > 0.0) {
        return Err(Error::InvalidConfig("delta must be positive".into()));
    }
    let (n, m) = (nodes * ni, nodes * mi);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            a[(r, c)] = rng.random::<f64>();
        }
    }
    let shift = spectral_abscissa(&a)? + spec.delta;
    for d in 0..n {
        a[(d, d)] -= shift;
    }
    let mut b = DMatrix::zeros(n, m);
    for node in 0..nodes {
        for u in 0..mi {
            b[(node * ni + u, node * mi + u)] = 10.0;
        }
    }
    let partition = BlockPartition::new(
        spec.row_block_sizes.clone().unwrap_or_else(|| vec![mi; nodes]),
        spec.col_block_sizes.clone().unwrap_or_else(|| vec![ni; nodes]),
    )?;
    LtiPlant::new(
        a,
        b,
        DMatrix::identity(n, n) * 0.5,
        DMatrix::identity(n, n),
        DMatrix::identity(m, m) * 10.0,
        partition,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantSource {
    Generate(GeneratorSpec),
    /// Plant JSON, relative to the scenario file.
    File(PathBuf),
    Inline(PlantDocument<f64>),
}

/// Which priorities the attacker hits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackSpec {
    AttackedPriorities(Vec<usize>),
    AttackedBlock(usize),
    /// The `k` highest priorities.
    TopCount(usize),
    /// The highest `ceil(f · r1)` priorities.
    TopFraction(f64),
}

impl Default for AttackSpec {
    fn default() -> Self {
        AttackSpec::AttackedPriorities(Vec::new())
    }
}

impl AttackSpec {
    pub fn resolve(&self, r1: usize) -> Result<Attack> {
        let top = |k: usize| -> Result<Attack> {
            if k > r1 {
                return Err(Error::IndexOutOfRange { index: k, len: r1 });
            }
            Ok(Attack::AttackedPriorities((r1 - k + 1..=r1).collect()))
        };
        let attack = match self {
            AttackSpec::AttackedPriorities(v) => Attack::AttackedPriorities(v.clone()),
            AttackSpec::AttackedBlock(q) => Attack::AttackedBlock(*q),
            AttackSpec::TopCount(k) => top(*k)?,
            AttackSpec::TopFraction(f) => {
                if !(0.0..=1.0).contains(f) {
                    return Err(Error::InvalidConfig("top_fraction must lie in [0, 1]".into()));
                }
                top((f * r1 as f64).ceil() as usize)?
            }
        };
        attack.to_mask(r1)?;
        Ok(attack)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub plant: PlantSource,
    #[serde(default)]
    pub sparsity: SparsityConfig<f64>,
    #[serde(default)]
    pub synthesis: AugLagConfig<f64>,
    #[serde(default)]
    pub attack: AttackSpec,
    /// Artifact directory, relative to the scenario file.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub render_formats: Vec<String>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_formats() -> Vec<String> {
    vec!["text".into(), "svg".into()]
}

impl Scenario {
    pub fn generated(name: &str, spec: GeneratorSpec, attack: AttackSpec) -> Self {
        Self {
            name: name.into(),
            plant: PlantSource::Generate(spec),
            sparsity: SparsityConfig::default(),
            synthesis: AugLagConfig::default(),
            attack,
            out_dir: None,
            render_formats: default_formats(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Loads a scenario; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut s = Self::from_json(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let PlantSource::File(p) = &mut s.plant {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(d) = &mut s.out_dir {
            if d.is_relative() {
                *d = base.join(&*d);
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.sparsity.validate()?;
        self.synthesis.validate()?;
        for f in &self.render_formats {
            f.parse::<RenderFormat>()?;
        }
        Ok(())
    }

    /// Replaces the generator seed; no effect on file or inline plants.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let PlantSource::Generate(g) = &mut self.plant {
            g.seed = seed;
        }
        self
    }

    pub fn build_plant(&self) -> Result<LtiPlant<f64>> {
        match &self.plant {
            PlantSource::Generate(g) => generate_plant(g),
            PlantSource::File(p) => LtiPlant::from_json(&fs::read_to_string(p)?),
            PlantSource::Inline(doc) => LtiPlant::from_document(doc),
        }
    }
}

/// Costs before the attack, right after it, and after rerouting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub scenario: String,
    pub j_before: f64,
    /// Pre-attack gain with the attacked blocks zeroed; `null` when it is not stabilizing.
    pub j_attack: Option<f64>,
    /// Structured optimum on the rerouted pattern; `null` when infeasible or not stabilizable.
    pub j_reroute: Option<f64>,
    pub n_attacked: usize,
    pub n_sacrificed: usize,
    pub n_rerouted: usize,
    pub n_dropped: usize,
    pub feasible: bool,
    /// The rerouted pattern admits a stabilizing gain (false when infeasible).
    pub stabilizable: bool,
}

pub const REPORT_CSV_HEADER: &str = "scenario,j_before,j_attack,j_reroute,n_attacked,n_sacrificed,n_dropped,feasible";

impl CostReport {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>, missing: &str| v.map_or(missing.to_string(), fmt_sig);
        format!(
            "{},{},{},{},{},{},{},{}",
            self.scenario,
            fmt_sig(self.j_before),
            opt(self.j_attack, "inf"),
            opt(self.j_reroute, ""),
            self.n_attacked,
            self.n_sacrificed,
            self.n_dropped,
            self.feasible
        )
    }
}

/// CSV of several reports with the standard header.
pub fn reports_csv(reports: &[CostReport]) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Everything a pipeline run produces.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub plant: LtiPlant<f64>,
    pub sweep: SweepResult<f64>,
    pub table: PriorityTable<f64>,
    pub attack: Attack,
    pub outcome: RerouteOutcome<f64>,
    pub pre_pattern: SparsityPattern,
    pub attacked_pattern: SparsityPattern,
    pub post_pattern: Option<SparsityPattern>,
    pub pre_gain: GainMatrix<f64>,
    pub post_gain: Option<GainMatrix<f64>>,
    pub report: CostReport,
}

/// Result of the online half of the pipeline.
#[derive(Clone, Debug)]
pub struct RerouteStage {
    pub outcome: RerouteOutcome<f64>,
    pub attacked_pattern: SparsityPattern,
    pub post_pattern: Option<SparsityPattern>,
    pub post_gain: Option<GainMatrix<f64>>,
    pub report: CostReport,
}

/// Runs the pipeline from an already ranked table.
pub fn run_from_table(
    name: &str,
    plant: &LtiPlant<f64>,
    table: &PriorityTable<f64>,
    pre_gain: &GainMatrix<f64>,
    j_before: f64,
    attack: &Attack,
    synthesis: &AugLagConfig<f64>,
) -> Result<RerouteStage> {
    let part = plant.partition();
    let outcome = reroute(table, attack)?;
    let hit = attacked_pattern(table, attack, part)?;
    let j_attack = cost_of(plant, pre_gain.masked(&hit).matrix()).finite();

    let (post_pattern, post_gain, j_reroute) = if outcome.feasible {
        let post = pattern_from(&outcome, part)?;
        let warm = pre_gain.masked(&post);
        let (cost, gain) = structured_optimal_cost(plant, &post, synthesis, Some(&warm))?;
        (Some(post), gain.map(|g| g.gain), cost.finite())
    } else {
        (None, None, None)
    };
    let report = CostReport {
        scenario: name.to_string(),
        j_before,
        j_attack,
        j_reroute,
        n_attacked: outcome.attacked.len(),
        n_sacrificed: outcome.sacrificed.len(),
        n_rerouted: outcome.rerouted.len(),
        n_dropped: outcome.dropped.len(),
        feasible: outcome.feasible,
        stabilizable: j_reroute.is_some(),
    };
    Ok(RerouteStage { outcome, attacked_pattern: hit, post_pattern, post_gain, report })
}

pub fn run_pipeline(scenario: &Scenario) -> Result<PipelineRun> {
    scenario.validate()?;
    let plant = scenario.build_plant()?;
    let sweep = sparsity_sweep(&plant, &scenario.sparsity)?;
    let table = rank_links(&plant, &sweep, &scenario.synthesis)?;
    let first = &sweep.entries[0];
    let (j_before, pre_gain) = match (first.j_polished, &first.polished) {
        (Cost::Finite(j), Some(g)) => (j, g.clone()),
        _ => return Err(Error::PatternNotStabilizable("pre-attack pattern".into())),
    };
    let attack = scenario.attack.resolve(table.r1())?;
    let stage = run_from_table(&scenario.name, &plant, &table, &pre_gain, j_before, &attack, &scenario.synthesis)?;
    Ok(PipelineRun {
        pre_pattern: first.pattern.clone(),
        plant,
        sweep,
        table,
        attack,
        outcome: stage.outcome,
        attacked_pattern: stage.attacked_pattern,
        post_pattern: stage.post_pattern,
        pre_gain,
        post_gain: stage.post_gain,
        report: stage.report,
    })
}

/// Independent scenarios, run concurrently; results keep the input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<PipelineRun>> {
    scenarios.par_iter().map(run_pipeline).collect()
}

impl PipelineRun {
    fn gain_document(&self, gain: &GainMatrix<f64>, pattern: &SparsityPattern) -> GainDocument<f64> {
        GainDocument {
            k: gain.to_rows(),
            pattern: pattern.clone(),
            j: cost_of(&self.plant, gain.matrix()).finite(),
            iterations: 0,
            converged: true,
        }
    }

    /// Writes plant, sweep, table, outcome, gains, report and pattern renders.
    pub fn write_artifacts(&self, dir: &Path, formats: &[String]) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let part = self.plant.partition();
        let mut written = Vec::new();
        let mut put = |name: &str, body: String| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, body)?;
            written.push(p);
            Ok(())
        };
        put("plant.json", self.plant.to_json())?;
        put("sweep.csv", self.sweep.to_csv())?;
        put("sweep.json", serde_json::to_string_pretty(&self.sweep.to_document()?)?)?;
        put("table.json", self.table.to_json()?)?;
        put("attack.json", self.attack.to_json()?)?;
        put("outcome.json", self.outcome.to_json()?)?;
        put("report.csv", reports_csv(std::slice::from_ref(&self.report)))?;
        put("report.json", serde_json::to_string_pretty(&self.report)?)?;
        put(
            "gain_before.json",
            serde_json::to_string_pretty(&self.gain_document(&self.pre_gain, &self.pre_pattern))?,
        )?;
        if let (Some(g), Some(p)) = (&self.post_gain, &self.post_pattern) {
            put("gain_reroute.json", serde_json::to_string_pretty(&self.gain_document(g, p))?)?;
        }
        let grids = [
            ("pattern_before", BlockGrid::from_table(&self.table, part)?),
            ("pattern_attack", BlockGrid::from_attack(&self.table, &self.outcome.attacked, part)?),
            ("pattern_reroute", BlockGrid::from_outcome(&self.outcome, part)?),
        ];
        for f in formats {
            let format: RenderFormat = f.parse()?;
            let ext = match format {
                RenderFormat::Text => "txt",
                RenderFormat::Svg => "svg",
            };
            for (stem, grid) in &grids {
                put(&format!("{stem}.{ext}"), grid.render(format))?;
            }
        }
        Ok(written)
    }
}
