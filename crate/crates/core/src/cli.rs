//! Command-line front end. Every command is a pure function of its inputs, flags and seed.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bt::BehaviorTree;
use crate::config::{parse_beta_rule, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{self, BenchmarkConfig, DiscriminationConfig, JaccardMode};
use crate::evolve::{extract_with, Observation};
use crate::io;
use crate::metrics::{compute_metrics, BetaEdgeRule};
use crate::report;
use crate::rng;
use crate::sim::{init_state, simulate};

#[derive(Debug, Parser)]
#[command(
    name = "swarmbt",
    version,
    about = "Extract behavior-tree swarm controllers from trajectories"
)]
pub struct Cli {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a tree and write its trajectory CSV.
    Simulate {
        #[arg(long)]
        tree: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        arena: ArenaArgs,
    },
    /// Extract a controller from an observed trajectory CSV.
    Extract {
        #[arg(long)]
        observation: PathBuf,
        #[arg(long)]
        seed: u64,
        /// JSON report path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-generation log here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Leaves per candidate tree.
        #[arg(long)]
        leaves: Option<usize>,
        #[command(flatten)]
        arena: ArenaArgs,
        #[command(flatten)]
        evolution: EvolutionArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Compute the metric streams of a trajectory CSV.
    Metrics {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Print the Jaccard similarity of two trees.
    Evaluate {
        tree_a: String,
        tree_b: String,
        /// Character-level instead of token-level sets.
        #[arg(long)]
        chars: bool,
    },
    /// Recovery benchmark over random original trees.
    Bench {
        /// Number of trials.
        #[arg(long)]
        n: usize,
        /// Leaves per original tree.
        #[arg(long)]
        leaves: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Draw originals without the canceling-pair constraint.
        #[arg(long)]
        unconstrained: bool,
        /// Also emit learning_curve.svg.
        #[arg(long)]
        svg: bool,
        #[command(flatten)]
        arena: ArenaArgs,
        #[command(flatten)]
        evolution: EvolutionArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Metric discrimination study: same-tree versus different-tree pairs.
    Discriminate {
        /// Pairs per setting.
        #[arg(long)]
        pairs: usize,
        /// Leaves per tree.
        #[arg(long)]
        leaves: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        arena: ArenaArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct ArenaArgs {
    /// Square arena side in meters.
    #[arg(long)]
    pub side_length: Option<f64>,
    /// Number of agents.
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long)]
    pub agent_radius: Option<f64>,
    #[arg(long)]
    pub sensing_range: Option<f64>,
    #[arg(long)]
    pub speed: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time steps (frames = steps + 1).
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct EvolutionArgs {
    /// Population size.
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub elitism: Option<usize>,
    #[arg(long)]
    pub tournament: Option<usize>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct MetricArgs {
    /// Local-density radius in meters.
    #[arg(long)]
    pub density_radius: Option<f64>,
    /// Beta-index edge rule: closer or farther than the mean pair distance.
    #[arg(long, value_parser = parse_beta_rule)]
    pub beta_rule: Option<BetaEdgeRule>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ArenaArgs {
    fn apply(&self, c: &mut RunConfig) {
        let a = &mut c.arena;
        set(&mut a.side_length, self.side_length);
        set(&mut a.agent_count, self.agents);
        set(&mut a.agent_radius, self.agent_radius);
        set(&mut a.sensing_range, self.sensing_range);
        set(&mut a.speed, self.speed);
        set(&mut a.dt, self.dt);
        set(&mut a.steps, self.steps);
    }
}

impl EvolutionArgs {
    fn apply(&self, c: &mut RunConfig) {
        let e = &mut c.evolution;
        set(&mut e.population_size, self.population);
        set(&mut e.generations, self.generations);
        set(&mut e.elitism_size, self.elitism);
        set(&mut e.tournament_size, self.tournament);
        set(&mut e.crossover_rate, self.crossover_rate);
        set(&mut e.mutation_rate, self.mutation_rate);
    }
}

impl MetricArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.metrics.density_radius, self.density_radius);
        set(&mut c.metrics.beta_rule, self.beta_rule);
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    f(create(path)?).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn base_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if cli.jobs.is_some() {
        config.jobs = cli.jobs;
    }
    Ok(config)
}

fn install_thread_pool(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        // A second install (e.g. repeated in-process runs) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut config = base_config(&cli)?;
    let stdout_err = |e: std::io::Error| Error::io("<stdout>", e);
    match cli.command {
        Command::Simulate {
            tree,
            seed,
            out: path,
            arena,
        } => {
            let tree = BehaviorTree::parse(&tree)?;
            arena.apply(&mut config);
            config.validate()?;
            let mut rng = rng::seeded(seed);
            let init = init_state(&config.arena, &mut rng)?;
            let traj = simulate(&tree, &init, &config.arena, &mut rng)?;
            io::write_trajectory_file(&traj, &path)?;
            writeln!(
                out,
                "frames={} agents={}",
                traj.frame_count(),
                traj.agent_count()
            )
            .map_err(stdout_err)?;
        }
        Command::Extract {
            observation,
            seed,
            out: path,
            log,
            leaves,
            arena,
            evolution,
            metrics,
        } => {
            arena.apply(&mut config);
            evolution.apply(&mut config);
            metrics.apply(&mut config);
            set(&mut config.evolution.leaf_count, leaves);
            config.evolution.seed = seed;
            config.validate()?;
            install_thread_pool(config.jobs)?;
            let traj = io::read_trajectory_file(&observation, &config.arena)?;
            let observation = Observation::new(traj, config.metrics)?;
            let mut lines = vec![report::GENERATION_LOG_HEADER.to_string()];
            writeln!(out, "{}", report::GENERATION_LOG_HEADER).map_err(stdout_err)?;
            let mut io_result = Ok(());
            let result = extract_with(&observation, &config.evolution, |g| {
                let line = report::generation_log_line(g);
                if io_result.is_ok() {
                    io_result = writeln!(out, "{line}");
                }
                lines.push(line);
            })?;
            io_result.map_err(stdout_err)?;
            let json = report::extraction_json(&result)
                .map_err(|e| Error::invalid(format!("report serialization: {e}")))?;
            write_text(&path, &(json + "\n"))?;
            if let Some(log) = log {
                write_text(&log, &(lines.join("\n") + "\n"))?;
            }
            writeln!(
                out,
                "best_tree={} best_fitness={}",
                result.best_tree, result.best_fitness
            )
            .map_err(stdout_err)?;
        }
        Command::Metrics {
            trajectory,
            out: path,
            metrics,
        } => {
            metrics.apply(&mut config);
            config.validate()?;
            let traj = io::read_trajectory_file(&trajectory, &config.arena)?;
            let series = compute_metrics(&traj, &config.metrics)?;
            io::write_metrics_file(&series, &path)?;
            writeln!(out, "frames={} streams=9", series.len()).map_err(stdout_err)?;
        }
        Command::Evaluate {
            tree_a,
            tree_b,
            chars,
        } => {
            let a = BehaviorTree::parse(&tree_a)?;
            let b = BehaviorTree::parse(&tree_b)?;
            let mode = if chars {
                JaccardMode::Character
            } else {
                JaccardMode::Token
            };
            writeln!(out, "{:?}", eval::jaccard_with(mode, &a, &b)).map_err(stdout_err)?;
        }
        Command::Bench {
            n,
            leaves,
            seed,
            out_dir,
            unconstrained,
            svg,
            arena,
            evolution,
            metrics,
        } => {
            arena.apply(&mut config);
            evolution.apply(&mut config);
            metrics.apply(&mut config);
            config.evolution.leaf_count = leaves;
            config.evolution.seed = seed;
            config.validate()?;
            install_thread_pool(config.jobs)?;
            let bench = BenchmarkConfig {
                n_trials: n,
                arena: config.arena,
                metrics: config.metrics,
                evolution: config.evolution,
                constrain_originals: !unconstrained,
                ..Default::default()
            };
            let report = eval::run_benchmark(&bench)?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            write_with(&out_dir.join("benchmark.csv"), |w| {
                report::write_benchmark_csv(&report, w)
            })?;
            write_with(&out_dir.join("confusion.csv"), |w| {
                report::write_confusion_csv(&report, w)
            })?;
            write_with(&out_dir.join("histories.csv"), |w| {
                report::write_histories_csv(&report, w)
            })?;
            write_with(&out_dir.join("learning_curve.csv"), |w| {
                report::write_learning_curve_csv(&report, w)
            })?;
            let summary = report::benchmark_summary(&report);
            write_text(&out_dir.join("summary.txt"), &summary)?;
            if svg {
                let (best, mean): (Vec<f64>, Vec<f64>) =
                    report.learning_curve().into_iter().unzip();
                let chart = report::svg_line_chart(
                    "fitness per generation (mean over trials)",
                    &[("best", "green", best), ("average", "red", mean)],
                );
                write_text(&out_dir.join("learning_curve.svg"), &chart)?;
            }
            write!(out, "{summary}").map_err(stdout_err)?;
        }
        Command::Discriminate {
            pairs,
            leaves,
            seed,
            out: path,
            arena,
            metrics,
        } => {
            arena.apply(&mut config);
            metrics.apply(&mut config);
            config.validate()?;
            install_thread_pool(config.jobs)?;
            let study = DiscriminationConfig {
                n_pairs: pairs,
                leaf_count: leaves,
                arena: config.arena,
                metrics: config.metrics,
                seed,
            };
            let report = eval::discrimination_study(&study)?;
            write_with(&path, |w| report::write_discrimination_csv(&report, w))?;
            write!(out, "{}", report::discrimination_summary(&report)).map_err(stdout_err)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code. Failures print one line to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
