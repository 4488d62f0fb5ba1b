use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use majority_depth::approx_counting::{ChainConfig, HalvingChain};
use majority_depth::datasets::{generate, generate_general_position, Distribution};
use majority_depth::depth::{
    depth_census, depth_exact_naive, depth_exact_sweep, depth_via_dual_identity, estimate_depth,
    pilot_p_hat, sample_size_for, DepthReport, MajorityMode, DEFAULT_PILOT,
};
use majority_depth::experiments::{self, Experiment, ExperimentConfig};
use majority_depth::io::{parse_query, read_points_file, write_points_file};
use majority_depth::verify::{verify_all, Fault, VerifyOptions};
use majority_depth::{Error, Result};

#[derive(Parser)]
#[command(
    name = "majdepth",
    version,
    about = "Majority depth: exact oracles, sampling estimator and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded point set.
    Gen(GenArgs),
    /// Compute or estimate the majority depth of a query point.
    Depth(DepthArgs),
    /// Run a scaling experiment and write CSV.
    Bench(BenchArgs),
    /// Run the acceptance criteria; exit status 0 iff all selected pass.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value = "uniform-disk")]
    distribution: Distribution,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Redraw until no three points are collinear.
    #[arg(long)]
    general_position: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Naive,
    Sweep,
    DualIdentity,
    Estimate,
}

#[derive(Args)]
struct DepthArgs {
    #[arg(long)]
    points: PathBuf,
    /// Query point as `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    query: String,
    /// One or more methods, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sweep")]
    method: Vec<Method>,
    /// Sample count for the estimator; derived from --epsilon when absent.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Constant c in r = c ln n / (epsilon^2 p).
    #[arg(long, default_value_t = 2.0)]
    confidence: f64,
    /// Chain confidence parameter N; n^2 when absent.
    #[arg(long = "bigN")]
    big_n: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Pilot samples used to estimate p when --samples is absent.
    #[arg(long, default_value_t = DEFAULT_PILOT)]
    pilot: u64,
    /// Decide majority sides by linear scan instead of the halving chain.
    #[arg(long)]
    exact_majority: bool,
    /// Visit every pair once instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    /// Also run the sweep oracle so the observed error can be reported.
    #[arg(long)]
    reference: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    experiment: Experiment,
    /// Comma-separated sizes; experiment defaults when absent.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "uniform-disk")]
    distribution: Distribution,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 2.0)]
    confidence: f64,
    #[arg(long = "bigN")]
    big_n: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Queries or probes per trial.
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    exact_majority: bool,
    /// CSV file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    /// Ignore error budgets in approximate counting.
    Budget,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated criterion ids, e.g. A1,A4.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    #[arg(long, value_enum)]
    inject_fault: Option<FaultArg>,
    /// Directory for CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn gen(args: GenArgs) -> Result<ExitCode> {
    let pts = if args.general_position {
        generate_general_position(args.distribution, args.n, args.seed)?
    } else {
        generate(args.distribution, args.n, args.seed)?
    };
    match &args.out {
        Some(path) => write_points_file(path, &pts)?,
        None => majority_depth::io::write_points(io::stdout().lock(), &pts)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn depth(args: DepthArgs) -> Result<ExitCode> {
    let pts = read_points_file(&args.points)?;
    let q = parse_query(&args.query)?;
    let n = pts.len();
    let mut report = DepthReport::new(&pts, q);
    for m in &args.method {
        report = match m {
            Method::Naive => report.with_method("naive", depth_exact_naive(&pts, q)?),
            Method::Sweep => report.with_method("sweep", depth_exact_sweep(&pts, q)?),
            Method::DualIdentity => {
                report.with_method("dual_identity", depth_via_dual_identity(&pts, q)?)
            }
            Method::Estimate => continue,
        };
    }
    if args.method.contains(&Method::Estimate) {
        if args.reference && !report.methods.contains_key("sweep") {
            report = report.with_method("sweep", depth_exact_sweep(&pts, q)?);
        }
        let chain;
        let mode = if args.exact_majority {
            MajorityMode::Exact
        } else {
            let mut config = ChainConfig::for_size(n);
            if let Some(big_n) = args.big_n {
                config.big_n = big_n;
            }
            chain = HalvingChain::build(&pts, config, args.seed)?;
            MajorityMode::Oracle(&chain)
        };
        let est = if args.exhaustive {
            depth_census(&pts, q, mode)?
        } else if n < 2 {
            return Err(Error::InvalidParameter(
                "sampling needs at least two points".into(),
            ));
        } else {
            let r = match args.samples {
                Some(r) => r,
                None => {
                    let p_hat = pilot_p_hat(&pts, q, args.pilot, args.seed ^ 0xA5A5, mode)?;
                    sample_size_for(args.epsilon, p_hat, args.confidence, n)?
                }
            };
            estimate_depth(&pts, q, r, args.seed, mode)?
        };
        report = report.with_estimate(&est);
    }
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    emit(args.out.as_deref(), &json)?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::new(args.experiment);
    if let Some(sizes) = args.sizes {
        cfg.sizes = sizes;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(queries) = args.queries {
        cfg.queries = queries;
    }
    cfg.seed = args.seed;
    cfg.distribution = args.distribution;
    cfg.epsilon = args.epsilon;
    cfg.confidence = args.confidence;
    cfg.big_n = args.big_n;
    cfg.samples = args.samples;
    cfg.exact_majority = args.exact_majority;
    cfg.out = args.out;
    let mut csv = Vec::new();
    let summary = experiments::run(&cfg, &mut csv)?;
    emit(cfg.out.as_deref(), &csv)?;
    for line in summary {
        eprintln!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let opts = VerifyOptions {
        seed: args.seed,
        fault: args
            .inject_fault
            .map(|FaultArg::Budget| Fault::BudgetDisabled),
        out_dir: args.out,
    };
    let outcomes = verify_all(&opts, args.only.as_deref());
    if outcomes.is_empty() {
        return Err(Error::InvalidParameter("no criteria selected".into()));
    }
    let mut all = true;
    for o in &outcomes {
        println!("{o}");
        all &= o.passed;
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    Ok(if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Depth(a) => depth(a),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("majdepth: {e}");
        ExitCode::from(2)
    })
}
