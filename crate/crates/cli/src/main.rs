use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qaoa_core::ansatz::Variant;
use qaoa_core::bench::{
    aggregate, emit, generate_dataset, read_records, run_experiment, solve_instance, Dataset, ExperimentConfig,
    Format, Instance, RECORDS_FILE,
};
use qaoa_core::meta::{run_baseline, Baseline};
use qaoa_core::objective::{Estimator, ObjectiveKind, ObjectiveSpec};
use qaoa_core::optimize::{GradientMode, Method, OptimizerSpec, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use qaoa_core::problem::{brute_force_max, Graph, BRUTE_FORCE_CAP};

/// QAOA variants laboratory for MaxCut: datasets, solvers, sweeps and reports.
#[derive(Debug, Parser)]
#[command(name = "qaoa-lab", version, propagate_version = true)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the benchmark dataset (graph files plus manifest.json).
    Gen {
        /// Experiment config (JSON); built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the dataset master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one variant on one instance and print the approximation ratio.
    Solve {
        /// Graph file (JSON with `n` and `edges: [[i, j, w], ...]`).
        #[arg(long)]
        instance: PathBuf,
        /// One of qaoa, ma-qaoa, qaoa-plus, modified-qaoa, ws-qaoa, ab-qaoa, falqon, rqaoa.
        #[arg(long)]
        variant: Variant,
        /// Number of layers.
        #[arg(long, default_value_t = 1)]
        p: usize,
        /// Seed for initial parameters and stochastic optimizers.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Experiment config supplying variant settings; its optimizer and
        /// objective are replaced by the flags below.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        opt: OptimizerArgs,
        /// Write the run record (CSV) and parameters (JSON) to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the factorial sweep (instance x variant x depth x repetition).
    Sweep {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for records.csv, params.jsonl and run_meta.json.
        #[arg(long)]
        out: PathBuf,
        /// Dataset directory written by `gen`; regenerated from the config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Skip cells already present in the output directory.
        #[arg(long)]
        resume: bool,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Aggregate a records CSV into summary tables and plot series.
    Report {
        /// records.csv from a sweep, or the sweep directory.
        #[arg(long)]
        records: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of csv, json, plots.
        #[arg(long, value_delimiter = ',', default_value = "csv,json,plots")]
        formats: Vec<Format>,
    },
    /// Run classical MaxCut solvers on one instance.
    Baselines {
        /// Graph file.
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated subset of brute, greedy, local, anneal, spectral, gw.
        #[arg(long, value_delimiter = ',', default_value = "brute,greedy,local,anneal,spectral,gw")]
        solvers: Vec<Baseline>,
        /// Seed for randomised solvers.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerName {
    NelderMead,
    CobylaStyle,
    Spsa,
    GradientDescent,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GradientName {
    ShiftRule,
    Central,
    Adjoint,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveName {
    Expectation,
    Cvar,
    Gibbs,
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    /// Classical optimizer.
    #[arg(long, value_enum, default_value = "cobyla-style")]
    optimizer: OptimizerName,
    /// Convergence tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Gradient estimator for gradient-descent.
    #[arg(long, value_enum, default_value = "adjoint")]
    gradient: GradientName,
    /// Initial step for gradient-descent; finite-difference step for `--gradient central`.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Objective to maximise.
    #[arg(long, value_enum, default_value = "expectation")]
    objective: ObjectiveName,
    /// Tail fraction for the CVaR objective.
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Inverse temperature for the Gibbs objective.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Estimate the objective from this many shots instead of exactly.
    #[arg(long)]
    shots: Option<u64>,
}

impl OptimizerArgs {
    fn optimizer(&self, seed: u64) -> OptimizerSpec {
        let method = match self.optimizer {
            OptimizerName::NelderMead => Method::NelderMead,
            OptimizerName::CobylaStyle => Method::CobylaStyle,
            OptimizerName::Spsa => Method::Spsa,
            OptimizerName::GradientDescent => Method::GradientDescent {
                step: self.step,
                gradient: match self.gradient {
                    GradientName::ShiftRule => GradientMode::ShiftRule,
                    GradientName::Central => GradientMode::CentralDiff { h: 1e-5 },
                    GradientName::Adjoint => GradientMode::Adjoint,
                },
            },
        };
        OptimizerSpec {
            tol: self.tol,
            max_iters: self.max_iters,
            ..OptimizerSpec::new(method)
        }
        .with_seed(seed)
    }

    fn objective(&self, seed: u64) -> ObjectiveSpec {
        ObjectiveSpec {
            kind: match self.objective {
                ObjectiveName::Expectation => ObjectiveKind::Expectation,
                ObjectiveName::Cvar => ObjectiveKind::Cvar { alpha: self.alpha },
                ObjectiveName::Gibbs => ObjectiveKind::Gibbs { eta: self.eta },
            },
            estimator: match self.shots {
                None => Estimator::Exact,
                Some(shots) => Estimator::Sampled { shots, seed },
            },
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn load_graph(path: &Path) -> Result<Graph> {
    let g = Graph::load(path).with_context(|| format!("loading instance {}", path.display()))?;
    if g.n_vertices() > BRUTE_FORCE_CAP {
        bail!("instance has {} vertices; at most {BRUTE_FORCE_CAP} supported", g.n_vertices());
    }
    Ok(g)
}

fn gen(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.dataset.master_seed = s;
    }
    let data = generate_dataset(&cfg.dataset)?;
    data.write(out)?;
    println!(
        "wrote {} instances to {} (master seed {}, {} skipped)",
        data.instances.len(),
        out.display(),
        data.master_seed,
        data.skipped.len()
    );
    for s in &data.skipped {
        println!("  skipped {s}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(
    instance: &Path,
    variant: Variant,
    p: usize,
    seed: u64,
    config: Option<&Path>,
    opt: &OptimizerArgs,
    out: Option<&Path>,
) -> Result<()> {
    let graph = load_graph(instance)?;
    let mut cfg = load_config(config)?;
    cfg.optimizer = opt.optimizer(seed);
    cfg.objective = opt.objective(seed);
    let id = instance.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    let inst = Instance::from_graph(id, graph, seed);
    let (rec, params) = solve_instance(&inst, variant, p, &cfg, seed)?;
    if !rec.is_ok() {
        bail!("{}", rec.status);
    }
    println!("instance      {id} (n = {}, m = {}, {})", inst.meta.n, inst.meta.n_edges, inst.meta.family);
    println!("variant       {variant}, p = {p}, seed = {seed}");
    println!("c_max         {}", rec.c_max);
    println!("best value    {:.6}", rec.best_value);
    println!("alpha         {:.6}", rec.alpha_exp);
    if let Some(a) = rec.alpha_best {
        println!("alpha (best sampled) {a:.6}");
    }
    println!("iterations    {}", rec.iterations);
    println!("circuit calls {}", rec.circuit_calls);
    println!("circuit depth {}", rec.circuit_depth);
    println!("parameters    {:?}", params.final_params);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        qaoa_core::bench::write_records(&dir.join(RECORDS_FILE), [&rec])?;
        let path = dir.join("params.json");
        std::fs::write(&path, serde_json::to_string_pretty(&params)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn sweep(config: &Path, out: &Path, data: Option<&Path>, resume: bool, jobs: usize) -> Result<()> {
    let cfg = load_config(Some(config))?;
    let dataset = match data {
        Some(dir) => Dataset::read(dir).with_context(|| format!("reading dataset {}", dir.display()))?,
        None => generate_dataset(&cfg.dataset)?,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let rows = pool.install(|| run_experiment(&cfg, &dataset, Some(out), resume))?;
    let failed = rows.iter().filter(|r| !r.0.is_ok()).count();
    println!(
        "{} cells over {} instances written to {} ({failed} failed)",
        rows.len(),
        dataset.instances.len(),
        out.display()
    );
    let records: Vec<_> = rows.into_iter().map(|r| r.0).collect();
    if let Ok(rep) = aggregate(&records) {
        for (k, s) in &rep.alpha_by_depth {
            println!("  {k:<24} mean alpha {:.4} (se {:.4}, n = {})", s.mean, s.std_err, s.count);
        }
    }
    Ok(())
}

fn report(records: &Path, out: &Path, formats: &[Format]) -> Result<()> {
    let path = if records.is_dir() { records.join(RECORDS_FILE) } else { records.to_path_buf() };
    let rows = read_records(&path).with_context(|| format!("reading {}", path.display()))?;
    let rep = aggregate(&rows).ok();
    if rep.is_none() {
        println!("no successful records in {}", path.display());
    }
    let written = emit(rep.as_ref(), &rows, out, formats)?;
    if let Some(rep) = &rep {
        for (k, s) in &rep.alpha_by_family_depth {
            println!("{k:<32} {:.4} +- {:.4} (n = {})", s.mean, s.std_err, s.count);
        }
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn baselines(instance: &Path, solvers: &[Baseline], seed: u64) -> Result<()> {
    let g = load_graph(instance)?;
    let c_max = brute_force_max(&g)?.c_max;
    println!("{:<10} {:>12} {:>8}  cut", "solver", "value", "ratio");
    for &s in solvers {
        let cut = run_baseline(&g, s, seed)?;
        let ratio = if c_max > 0.0 { cut.value / c_max } else { 1.0 };
        let bits: String = cut.bits.bits().iter().map(|b| char::from(b'0' + b)).collect();
        println!("{:<10} {:>12.4} {:>8.4}  {bits}", s.as_str(), cut.value, ratio);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { config, out, seed } => gen(config.as_deref(), &out, seed),
        Command::Solve {
            instance,
            variant,
            p,
            seed,
            config,
            opt,
            out,
        } => solve(&instance, variant, p, seed, config.as_deref(), &opt, out.as_deref()),
        Command::Sweep {
            config,
            out,
            data,
            resume,
            jobs,
        } => sweep(&config, &out, data.as_deref(), resume, jobs),
        Command::Report { records, out, formats } => report(&records, &out, &formats),
        Command::Baselines { instance, solvers, seed } => baselines(&instance, &solvers, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
