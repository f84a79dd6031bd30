use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use eo_cluster::conflict::{
    full_cost_matrix, generate_scenario, load_reports, sample_sparse_graph, write_reports,
    ScenarioParams, SparseSamplerParams, SparseSource, TargetLayout, WeightMode,
};
use eo_cluster::engine::{self, EngineConfig, Mode, Ranking};
use eo_cluster::harness::{
    phase_sweep, run_experiment, sweep_csv, verify, ExperimentConfig, PhaseSweepConfig,
    VerifyConfig,
};
use eo_cluster::model::ConflictGraph;

/// Cluster sensor reports with extremal optimization over sparse conflict graphs.
#[derive(Debug, Parser)]
#[command(name = "eo-cluster", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Weights {
    Measured,
    Unit,
}

impl From<Weights> for WeightMode {
    fn from(w: Weights) -> Self {
        match w {
            Weights::Measured => WeightMode::Measured,
            Weights::Unit => WeightMode::Unit,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RankingArg {
    ExactSort,
    HeapApproximate,
}

impl From<RankingArg> for Ranking {
    fn from(r: RankingArg) -> Self {
        match r {
            RankingArg::ExactSort => Ranking::ExactSort,
            RankingArg::HeapApproximate => Ranking::HeapApproximate,
        }
    }
}

#[derive(Debug, clap::Args)]
struct ScenarioArgs {
    /// Number of targets.
    #[arg(long, default_value_t = 3)]
    targets: usize,
    /// Reports per burst.
    #[arg(long = "reports-per-burst", default_value_t = 100)]
    reports_per_burst: usize,
    /// Standard deviation of the report position noise.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Target positions as `x,y;x,y;...`. Random in the unit square if omitted.
    #[arg(long)]
    positions: Option<String>,
}

impl ScenarioArgs {
    fn params(&self, seed: u64) -> Result<ScenarioParams> {
        let targets = match &self.positions {
            None => TargetLayout::RandomUnitBox,
            Some(s) => TargetLayout::Fixed(parse_positions(s)?),
        };
        Ok(ScenarioParams {
            num_targets: self.targets,
            reports_per_burst: self.reports_per_burst,
            targets,
            noise_sigma: self.sigma,
            seed,
        })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic burst of reports as CSV.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a sparse conflict graph (or the full matrix) from reports.
    Sample {
        /// Reports CSV. Required for measured weights.
        #[arg(long)]
        reports: Option<PathBuf>,
        /// Vertex count when sampling unit-weight structure without reports.
        #[arg(long)]
        n: Option<usize>,
        /// Average degree; `floor(gamma * n / 2)` edges are sampled.
        #[arg(long, default_value_t = 3.0)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = Weights::Measured)]
        weights: Weights,
        /// Cluster count written to the graph header.
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full conflict matrix instead of a sample.
        #[arg(long)]
        dense: bool,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run extremal optimization on a graph file.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        /// Cluster count; defaults to the graph header.
        #[arg(long)]
        k: Option<usize>,
        /// Power-law exponent, or `standard` for plain EO.
        #[arg(long, default_value = "1.5")]
        tau: Mode,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = RankingArg::ExactSort)]
        ranking: RankingArg,
        /// Record every this many steps.
        #[arg(long, default_value_t = 1)]
        trace_every: u64,
        /// Trace CSV output; stdout if omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Best clustering, one label per line.
        #[arg(long)]
        assignment: Option<PathBuf>,
    },
    /// Averaged runs over several scenarios and sampled matrices.
    Experiment {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 3.0)]
        gamma: f64,
        /// Power-law exponent, or `standard` for plain EO.
        #[arg(long, default_value = "1.5")]
        tau: Mode,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 10)]
        problems: usize,
        #[arg(long, default_value_t = 10)]
        matrices: usize,
        /// Master seed; every run derives its seeds from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = RankingArg::ExactSort)]
        ranking: RankingArg,
        #[arg(long, default_value_t = 100)]
        trace_every: u64,
        /// Record wall-clock time per run (makes outputs non-reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(long, default_value = "experiment-out")]
        out: PathBuf,
    },
    /// Fraction of random instances solved at zero cost, per average degree.
    PhaseSweep {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "3,4,4.6,5")]
        gammas: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long, default_value_t = 200_000)]
        steps: u64,
        #[arg(long, default_value = "1.5")]
        tau: Mode,
        #[arg(long, value_enum, default_value_t = Weights::Unit)]
        weights: Weights,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare search results with exact optima on small instances.
    Verify {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 4.0)]
        gamma: f64,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value = "1.5")]
        tau: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Required fraction of instances where the optimum is found.
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
        /// Per-instance CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_positions(s: &str) -> Result<Vec<[f64; 2]>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (x, y) = p
                .split_once(',')
                .with_context(|| format!("expected `x,y`, got `{p}`"))?;
            Ok([x.trim().parse()?, y.trim().parse()?])
        })
        .collect()
}

fn write_output(out: Option<&Path>, contents: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
        }
        None => Ok(std::io::stdout().lock().write_all(contents)?),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { scenario, seed, out } => {
            let reports = generate_scenario(&scenario.params(seed)?)?;
            let mut buf = Vec::new();
            write_reports(&reports, &mut buf)?;
            write_output(out.as_deref(), &buf)?;
        }
        Command::Sample {
            reports,
            n,
            gamma,
            weights,
            k,
            seed,
            dense,
            out,
        } => {
            let reports = reports
                .map(|p| load_reports(&p).with_context(|| format!("reading {}", p.display())))
                .transpose()?;
            let graph = match (&reports, dense) {
                (Some(r), true) => full_cost_matrix(r)?,
                (None, true) => bail!("--dense needs --reports"),
                (Some(r), false) => sample_sparse_graph(
                    SparseSource::Reports(r),
                    &SparseSamplerParams { gamma, seed, weight_mode: weights.into() },
                )?,
                (None, false) => {
                    let Some(n) = n else { bail!("give --reports or --n") };
                    if matches!(weights, Weights::Measured) {
                        bail!("measured weights need --reports; use --weights unit with --n");
                    }
                    sample_sparse_graph(
                        SparseSource::Vertices(n),
                        &SparseSamplerParams { gamma, seed, weight_mode: WeightMode::Unit },
                    )?
                }
            };
            let mut buf = Vec::new();
            graph.write_to(k, &mut buf)?;
            write_output(out.as_deref(), &buf)?;
        }
        Command::Solve {
            graph,
            k,
            tau,
            steps,
            seed,
            ranking,
            trace_every,
            trace,
            assignment,
        } => {
            let (g, header_k) = ConflictGraph::load(&graph)
                .with_context(|| format!("reading {}", graph.display()))?;
            let config = EngineConfig {
                mode: tau,
                k: k.unwrap_or(header_k),
                max_steps: steps,
                seed,
                ranking: ranking.into(),
                trace_every,
                table_capacity: None,
            };
            let (best, tr) = engine::run(&g, &config)?;
            write_output(trace.as_deref(), tr.to_csv().as_bytes())?;
            if let Some(path) = assignment {
                best.save(&path).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(last) = tr.last() {
                eprintln!("best cost {} after {} steps", last.best_cost, last.step);
            }
        }
        Command::Experiment {
            scenario,
            gamma,
            tau,
            k,
            steps,
            problems,
            matrices,
            seed,
            ranking,
            trace_every,
            timing,
            out,
        } => {
            let config = ExperimentConfig {
                scenario: scenario.params(0)?,
                gamma,
                mode: tau,
                k,
                steps,
                num_problems: problems,
                num_matrices_per_problem: matrices,
                master_seed: seed,
                ranking: ranking.into(),
                trace_every,
                record_wall_time: timing,
            };
            let result = run_experiment(&config)?;
            result
                .write_to_dir(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            let last = result.average.last().expect("at least the initial row");
            eprintln!(
                "{} runs, mean best cost {} after {} steps, written to {}",
                result.runs.len(),
                last.best_cost,
                last.step,
                out.display()
            );
        }
        Command::PhaseSweep {
            n,
            k,
            gammas,
            runs,
            steps,
            tau,
            weights,
            sigma,
            seed,
            out,
        } => {
            let config = PhaseSweepConfig {
                n,
                k,
                gammas,
                runs,
                steps,
                mode: tau,
                master_seed: seed,
                weight_mode: weights.into(),
                noise_sigma: sigma,
            };
            let rows = phase_sweep(&config)?;
            write_output(out.as_deref(), sweep_csv(&rows, config.weight_mode).as_bytes())?;
        }
        Command::Verify {
            instances,
            n,
            k,
            gamma,
            steps,
            tau,
            seed,
            threshold,
            out,
        } => {
            let report = verify(&VerifyConfig {
                instances,
                n,
                k,
                gamma,
                steps,
                mode: tau,
                master_seed: seed,
                ..Default::default()
            })?;
            if let Some(path) = out {
                std::fs::write(&path, report.to_csv())?;
            }
            let fraction = report.match_fraction();
            println!(
                "optimum found in {:.1}% of {} instances (threshold {:.1}%)",
                100.0 * fraction,
                report.rows.len(),
                100.0 * threshold
            );
            if !report.solvability_consistent() {
                eprintln!("colorability check disagrees with the exact optimum");
                return Ok(ExitCode::FAILURE);
            }
            if fraction < threshold {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
