use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sht_core::bmo::{alpha_threshold, bmo_norm, jn_check, parent_jump_ratio};
use sht_core::dyadic::{build_grid, verify_grid, DyadicGrid, GridFile};
use sht_core::operators::{
    graded_sign_kernel, lerner_domination_check, weighted_norm, KernelFile, KernelOperator, NormOptions,
};
use sht_core::space::{
    build_cantor_space, build_interval_space, build_random_graph_space, build_snowflake_space, FiniteSht, SpaceFile,
};
use sht_core::weights::{characteristics, lognormal_weight, power_weight, Weight, WeightFile};
use sht_harness::setup::default_delta;
use sht_harness::suite::{suite, SuiteLevel, SuiteOptions};
use sht_harness::{to_stable_json, ExperimentConfig, Registry, ReportFormat};

#[derive(Parser)]
#[command(name = "sht", version, about = "Weighted inequalities on finite spaces of homogeneous type")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    #[command(subcommand)]
    Space(SpaceCmd),
    #[command(subcommand)]
    Grid(GridCmd),
    #[command(subcommand)]
    Weights(WeightsCmd),
    #[command(subcommand)]
    Op(OpCmd),
    #[command(subcommand)]
    Bmo(BmoCmd),
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Runs the smoke or full suite.
    Suite {
        level: Level,
        /// Directory of golden reports.
        #[arg(long)]
        goldens: Option<PathBuf>,
        /// Rewrite the golden reports instead of comparing.
        #[arg(long)]
        bless: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Smoke,
    Full,
}

#[derive(Subcommand)]
enum SpaceCmd {
    /// Prints the quasimetric and doubling constants of a space file.
    Certify { file: PathBuf },
    /// Writes a space file from one of the builders.
    Build {
        builder: Builder,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        level: u32,
        /// Snowflake exponent.
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        #[arg(long, default_value_t = 0.2)]
        edge_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builder {
    Interval,
    Cantor,
    Snowflake,
    Graph,
}

#[derive(Subcommand)]
enum GridCmd {
    /// Builds the dyadic grid and prints its summary.
    Build {
        space: PathBuf,
        /// Defaults to 1 / (8 kappa^3).
        #[arg(long)]
        delta: Option<f64>,
        /// Where to write the serialized grid.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-checks the six grid properties of a serialized grid.
    Verify { space: PathBuf, grid: PathBuf },
}

#[derive(Subcommand)]
enum WeightsCmd {
    /// Prints every characteristic of a weight.
    Constants {
        space: PathBuf,
        grid: PathBuf,
        weight: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Writes a weight file from a generator.
    Generate {
        space: PathBuf,
        family: Family,
        /// Exponent for power weights, sigma for log-normal ones.
        #[arg(long)]
        param: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Power,
    Lognormal,
}

#[derive(Args)]
struct KernelArgs {
    space: PathBuf,
    /// Kernel file; the graded sign kernel when absent.
    #[arg(long)]
    kernel: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OpCmd {
    /// Certifies a kernel and prints the certificate.
    CertifyKernel(KernelArgs),
    /// Writes the graded sign kernel of a space as a kernel file.
    Kernel {
        space: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimates the weighted operator norm.
    Norm {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Weight file; the constant weight when absent.
        #[arg(long)]
        weight: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compares the operator with sparse operators built from each test function.
    Dominate {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        weight: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum BmoCmd {
    /// Dyadic BMO norm of a function file.
    Norm { space: PathBuf, grid: PathBuf, b: PathBuf },
    /// Exponential averages of the John–Nirenberg inequality.
    Jn {
        space: PathBuf,
        grid: PathBuf,
        b: PathBuf,
        /// Defaults to (epsilon / 3) ln 2.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Runs one experiment and writes its report.
    Run {
        /// Overrides the kind named in the config.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        config: PathBuf,
        /// `.csv` for CSV, anything else for JSON; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lists the registered experiment kinds.
    List,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<()> {
    emit(&to_stable_json(value), None)
}

fn load_space(path: &Path) -> Result<Arc<FiniteSht>> {
    Ok(Arc::new(SpaceFile::parse(&read(path)?)?))
}

fn load_grid(space: &Arc<FiniteSht>, path: &Path) -> Result<DyadicGrid> {
    Ok(GridFile::parse(&read(path)?, space.clone())?)
}

fn load_weight(space: &Arc<FiniteSht>, path: Option<&Path>) -> Result<Weight> {
    Ok(match path {
        Some(p) => Weight::new(space.clone(), WeightFile::parse(&read(p)?, space.len())?)?,
        None => Weight::constant(space.clone(), 1.0)?,
    })
}

fn load_kernel(args: &KernelArgs) -> Result<KernelOperator> {
    let space = load_space(&args.space)?;
    let matrix = match &args.kernel {
        Some(p) => KernelFile::parse(&read(p)?, space.len())?,
        None => graded_sign_kernel(&space),
    };
    Ok(KernelOperator::certified(space, matrix)?)
}

#[derive(Serialize)]
struct GridSummary {
    n: usize,
    delta: f64,
    epsilon: f64,
    c_sandwich: f64,
    levels: Vec<i32>,
    cube_counts: Vec<usize>,
}

/// `Ok(true)` when everything checked passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Space(SpaceCmd::Certify { file }) => {
            let space = load_space(&file)?;
            #[derive(Serialize)]
            struct Certificate {
                n: usize,
                kappa: f64,
                doubling: f64,
            }
            json(&Certificate {
                n: space.len(),
                kappa: space.kappa(),
                doubling: space.doubling(),
            })?;
        }
        Command::Space(SpaceCmd::Build {
            builder,
            n,
            level,
            s,
            edge_prob,
            seed,
            out,
        }) => {
            let space = match builder {
                Builder::Interval => build_interval_space(n)?,
                Builder::Cantor => build_cantor_space(level)?,
                Builder::Snowflake => build_snowflake_space(&build_interval_space(n)?, s)?,
                Builder::Graph => build_random_graph_space(n, edge_prob, seed)?,
            };
            emit(&(SpaceFile::to_json(&space) + "\n"), out.as_deref())?;
        }
        Command::Grid(GridCmd::Build { space, delta, out }) => {
            let space = load_space(&space)?;
            let delta = delta.unwrap_or_else(|| default_delta(&space));
            let grid = build_grid(space.clone(), delta)?;
            if let Some(p) = &out {
                emit(&(GridFile::to_json(&grid) + "\n"), Some(p))?;
            }
            let levels: Vec<i32> = grid.levels_coarse_to_fine().map(|(k, _)| k).collect();
            json(&GridSummary {
                n: space.len(),
                delta,
                epsilon: grid.epsilon(),
                c_sandwich: grid.c_sandwich(),
                cube_counts: levels.iter().map(|&k| grid.level(k).len()).collect(),
                levels,
            })?;
        }
        Command::Grid(GridCmd::Verify { space, grid }) => {
            let space = load_space(&space)?;
            let report = verify_grid(&load_grid(&space, &grid)?);
            json(&report)?;
            return Ok(report.all_passed());
        }
        Command::Weights(WeightsCmd::Constants { space, grid, weight, p }) => {
            let space = load_space(&space)?;
            let grid = load_grid(&space, &grid)?;
            let w = load_weight(&space, Some(&weight))?;
            json(&characteristics(&w, &grid, p)?)?;
        }
        Command::Weights(WeightsCmd::Generate {
            space,
            family,
            param,
            seed,
            out,
        }) => {
            let space = load_space(&space)?;
            let w = match family {
                Family::Power => power_weight(space, param),
                Family::Lognormal => lognormal_weight(space, param, seed),
            };
            emit(&(WeightFile::to_json(w.values()) + "\n"), out.as_deref())?;
        }
        Command::Op(OpCmd::CertifyKernel(args)) => {
            let op = load_kernel(&args)?;
            json(&op.certificate())?;
        }
        Command::Op(OpCmd::Kernel { space, out }) => {
            let space = load_space(&space)?;
            let file = KernelFile::from_matrix(&graded_sign_kernel(&space));
            emit(&to_stable_json(&file), out.as_deref())?;
        }
        Command::Op(OpCmd::Norm {
            kernel,
            p,
            weight,
            trials,
            seed,
        }) => {
            let op = load_kernel(&kernel)?;
            let space = load_space(&kernel.space)?;
            let w = load_weight(&space, weight.as_deref())?;
            let opts = NormOptions {
                trials,
                seed,
                ..NormOptions::default()
            };
            json(&weighted_norm(&op.matrix(), &space, p, w.values(), &opts)?)?;
        }
        Command::Op(OpCmd::Dominate {
            kernel,
            grid,
            p,
            weight,
            trials,
            seed,
        }) => {
            let op = load_kernel(&kernel)?;
            let space = load_space(&kernel.space)?;
            let grid = load_grid(&space, &grid)?;
            let w = load_weight(&space, weight.as_deref())?;
            json(&lerner_domination_check(&op, &grid, p, w.values(), trials, seed)?)?;
        }
        Command::Bmo(BmoCmd::Norm { space, grid, b }) => {
            let space = load_space(&space)?;
            let grid = load_grid(&space, &grid)?;
            let b = WeightFile::parse(&read(&b)?, space.len())?;
            let norm = bmo_norm(&grid, &b);
            #[derive(Serialize)]
            struct BmoReport {
                bmo_norm: f64,
                epsilon: f64,
                parent_jump_ratio: f64,
                alpha_threshold: f64,
            }
            json(&BmoReport {
                bmo_norm: norm,
                epsilon: grid.epsilon(),
                parent_jump_ratio: parent_jump_ratio(&grid, &b, norm),
                alpha_threshold: alpha_threshold(grid.epsilon()),
            })?;
        }
        Command::Bmo(BmoCmd::Jn { space, grid, b, alpha }) => {
            let space = load_space(&space)?;
            let grid = load_grid(&space, &grid)?;
            let b = WeightFile::parse(&read(&b)?, space.len())?;
            json(&jn_check(&grid, &b, alpha))?;
        }
        Command::Experiment(ExperimentCmd::Run { kind, config, out }) => {
            let mut cfg = ExperimentConfig::parse(&read(&config)?)?;
            if let Some(k) = kind {
                cfg.kind = k;
            }
            let report = Registry::default().run(&cfg)?;
            match out.as_ref().or(cfg.output.as_ref()) {
                Some(p) => report.write(p, ReportFormat::from_path(p))?,
                None => emit(&report.to_json(), None)?,
            }
            return Ok(report.all_passed());
        }
        Command::Experiment(ExperimentCmd::List) => {
            let registry = Registry::default();
            for e in registry.iter() {
                println!("{:<18} {}", e.kind(), e.summary());
            }
        }
        Command::Suite { level, goldens, bless } => {
            let mut opts = SuiteOptions {
                bless,
                ..SuiteOptions::default()
            };
            if let Some(g) = goldens {
                opts.goldens = g;
            }
            let level = match level {
                Level::Smoke => SuiteLevel::Smoke,
                Level::Full => SuiteLevel::Full,
            };
            let report = suite(level, &opts);
            for c in &report.checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

