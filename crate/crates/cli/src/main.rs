use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dos_reroute::lti::{closed_loop_cost, GainDocument, LtiPlant, SparsityPattern};
use dos_reroute::prioritization::{rank_links, PriorityTable};
use dos_reroute::render::{parse_text, BlockGrid, RenderFormat};
use dos_reroute::rerouting::{reroute, Attack, RerouteOutcome};
use dos_reroute::scenario::{
    generate_plant, reports_csv, run_batch, CostReport, GeneratorSpec, PipelineRun, Scenario,
};
use dos_reroute::sparse::{sparsity_sweep, SparsityConfig, SweepDocument, SweepResult};
use dos_reroute::structured::{synthesize_structured, AugLagConfig};
use dos_reroute::Error;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NOT_STABILIZABLE: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "dos-reroute", version, about = "Sparse feedback synthesis and DoS rerouting for networked LTI plants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Scenario JSON supplying the plant and solver settings.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Generator seed; repeat with `run` for a concurrent batch.
    #[arg(long, global = true)]
    seed: Vec<u64>,
    /// Output file, or directory for `run`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Svg,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a random plant as JSON.
    Gen {
        #[arg(long, default_value_t = 10)]
        nodes: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Run the β sweep (CSV by default, JSON for `rank`).
    Sweep {
        #[arg(long)]
        plant: Option<PathBuf>,
    },
    /// Rank links from a sweep JSON into a priority table.
    Rank {
        #[arg(long)]
        plant: Option<PathBuf>,
        #[arg(long)]
        sweep: PathBuf,
    },
    /// Apply an attack file to a priority table.
    Reroute {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        attack: PathBuf,
        /// Plant whose partition is used for text/SVG output.
        #[arg(long)]
        plant: Option<PathBuf>,
    },
    /// Structured H2 synthesis on a pattern (JSON mask or text grid).
    Synth {
        #[arg(long)]
        plant: Option<PathBuf>,
        #[arg(long)]
        pattern: PathBuf,
    },
    /// Full pipeline; writes all artifacts when `--out` is given.
    Run,
    /// Render a pattern, a priority table or a reroute outcome.
    Render {
        #[arg(long, conflicts_with_all = ["table", "outcome"])]
        pattern: Option<PathBuf>,
        #[arg(long, conflicts_with = "outcome")]
        table: Option<PathBuf>,
        #[arg(long)]
        outcome: Option<PathBuf>,
        /// Needed for tables and outcomes.
        #[arg(long)]
        plant: Option<PathBuf>,
    },
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::PatternNotStabilizable(_) | Error::NotStabilizing => EXIT_NOT_STABILIZABLE,
            Error::InfeasibleOutcome => EXIT_INFEASIBLE,
            Error::Io(_)
            | Error::Json(_)
            | Error::Parse(_)
            | Error::UnknownFormat(_)
            | Error::InvalidConfig(_)
            | Error::InvalidPlant(_)
            | Error::InvalidAssumption(_)
            | Error::DimensionMismatch(_)
            | Error::IndexOutOfRange { .. }
            | Error::EmptySweep => EXIT_INPUT,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, body: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| input_error(format!("{}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v).map_err(Error::from)? + "\n")
}

impl Global {
    fn load_scenario(&self) -> CliResult<Option<Scenario>> {
        let Some(path) = &self.scenario else {
            return Ok(None);
        };
        let mut s = Scenario::load(path)?;
        if let Some(&seed) = self.seed.first() {
            s = s.with_seed(seed);
        }
        Ok(Some(s))
    }

    /// Plant from `--plant`, else the scenario, else a default generator with `--seed`.
    fn plant(&self, file: Option<&Path>) -> CliResult<LtiPlant<f64>> {
        if let Some(p) = file {
            return Ok(LtiPlant::from_json(&read(p)?)?);
        }
        if let Some(s) = self.load_scenario()? {
            return Ok(s.build_plant()?);
        }
        match self.seed.first() {
            Some(&seed) => Ok(generate_plant(&GeneratorSpec { seed, ..Default::default() })?),
            None => Err(input_error("need --plant, --scenario or --seed")),
        }
    }

    fn configs(&self) -> CliResult<(SparsityConfig<f64>, AugLagConfig<f64>)> {
        Ok(match self.load_scenario()? {
            Some(s) => (s.sparsity, s.synthesis),
            None => Default::default(),
        })
    }

    fn render_format(&self) -> CliResult<RenderFormat> {
        match self.format {
            None | Some(Format::Text) => Ok(RenderFormat::Text),
            Some(Format::Svg) => Ok(RenderFormat::Svg),
            Some(_) => Err(Failure::from(Error::UnknownFormat("render supports text and svg".into()))),
        }
    }
}

fn load_pattern(path: &Path) -> CliResult<SparsityPattern> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        Ok(serde_json::from_str(&text).map_err(Error::from)?)
    } else {
        Ok(parse_text(&text)?)
    }
}

fn run(cli: Cli) -> CliResult {
    let g = &cli.global;
    let out = g.out.as_deref();
    match cli.command {
        Command::Gen { nodes, delta } => {
            let spec = GeneratorSpec {
                nodes,
                delta,
                seed: g.seed.first().copied().unwrap_or(0),
                ..Default::default()
            };
            emit(out, &(generate_plant(&spec)?.to_json() + "\n"))
        }
        Command::Sweep { plant } => {
            let plant = g.plant(plant.as_deref())?;
            let (sparsity, _) = g.configs()?;
            let sweep = sparsity_sweep(&plant, &sparsity)?;
            match g.format {
                None | Some(Format::Csv) => emit(out, &sweep.to_csv()),
                Some(Format::Json) => emit(out, &json(&sweep.to_document()?)?),
                Some(_) => Err(input_error("sweep supports csv and json")),
            }
        }
        Command::Rank { plant, sweep } => {
            let plant = g.plant(plant.as_deref())?;
            let (_, synthesis) = g.configs()?;
            let doc: SweepDocument<f64> = serde_json::from_str(&read(&sweep)?).map_err(Error::from)?;
            let table = rank_links(&plant, &SweepResult::from_document(&doc)?, &synthesis)?;
            emit(out, &(table.to_json()? + "\n"))
        }
        Command::Reroute { table, attack, plant } => {
            let table = PriorityTable::<f64>::from_json(&read(&table)?)?;
            let attack = Attack::from_json(&read(&attack)?)?;
            let outcome = reroute(&table, &attack)?;
            for w in &outcome.warnings {
                log::warn!("{w}");
            }
            match g.format {
                None | Some(Format::Json) => emit(out, &(outcome.to_json()? + "\n"))?,
                Some(_) => {
                    let plant = g.plant(plant.as_deref())?;
                    let grid = BlockGrid::from_outcome(&outcome, plant.partition())?;
                    emit(out, &grid.render(g.render_format()?))?;
                }
            }
            if outcome.feasible {
                Ok(())
            } else {
                Err(Failure { code: EXIT_INFEASIBLE, message: "countermeasure cannot be implemented".into() })
            }
        }
        Command::Synth { plant, pattern } => {
            let plant = g.plant(plant.as_deref())?;
            let (_, synthesis) = g.configs()?;
            let pattern = load_pattern(&pattern)?;
            let s = synthesize_structured(&plant, &pattern, &synthesis)?;
            let doc = GainDocument {
                k: s.gain.to_rows(),
                pattern,
                j: closed_loop_cost(&plant, &s.gain)?.finite(),
                iterations: s.outer_iterations,
                converged: s.converged,
            };
            emit(out, &json(&doc)?)
        }
        Command::Run => run_scenarios(g),
        Command::Render { pattern, table, outcome, plant } => {
            let format = g.render_format()?;
            let grid = if let Some(p) = pattern {
                BlockGrid::from_pattern(&load_pattern(&p)?)
            } else {
                let plant = g.plant(plant.as_deref())?;
                let part = plant.partition();
                if let Some(t) = table {
                    BlockGrid::from_table(&PriorityTable::<f64>::from_json(&read(&t)?)?, part)?
                } else if let Some(o) = outcome {
                    BlockGrid::from_outcome(&RerouteOutcome::<f64>::from_json(&read(&o)?)?, part)?
                } else {
                    return Err(input_error("render needs --pattern, --table or --outcome"));
                }
            };
            emit(out, &grid.render(format))
        }
    }
}

fn run_scenarios(g: &Global) -> CliResult {
    let path = g.scenario.as_ref().ok_or_else(|| input_error("run needs --scenario"))?;
    let base = Scenario::load(path)?;
    let scenarios: Vec<Scenario> = if g.seed.is_empty() {
        vec![base]
    } else {
        g.seed
            .iter()
            .map(|&seed| {
                let mut s = base.clone().with_seed(seed);
                if g.seed.len() > 1 {
                    s.name = format!("{}-seed{seed}", base.name);
                }
                s
            })
            .collect()
    };
    let runs: Vec<PipelineRun> = run_batch(&scenarios).into_iter().collect::<Result<_, _>>()?;
    let dir = g.out.clone().or_else(|| scenarios[0].out_dir.clone());
    if let Some(dir) = &dir {
        for (run, s) in runs.iter().zip(&scenarios) {
            let target = if runs.len() > 1 { dir.join(&s.name) } else { dir.clone() };
            let written = run.write_artifacts(&target, &s.render_formats)?;
            log::info!("{}: wrote {} files to {}", s.name, written.len(), target.display());
        }
    }
    let reports: Vec<CostReport> = runs.iter().map(|r| r.report.clone()).collect();
    let body = match g.format {
        None | Some(Format::Csv) => reports_csv(&reports),
        Some(Format::Json) => json(&reports)?,
        Some(_) => return Err(input_error("run supports csv and json")),
    };
    print!("{body}");
    if reports.iter().any(|r| !r.feasible) {
        Err(Failure { code: EXIT_INFEASIBLE, message: "countermeasure cannot be implemented".into() })
    } else if reports.iter().any(|r| !r.stabilizable) {
        Err(Failure { code: EXIT_NOT_STABILIZABLE, message: "rerouted pattern is not stabilizable".into() })
    } else {
        Ok(())
    }
}


fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
