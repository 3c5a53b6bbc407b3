//! The `stable-tree` command line.
//!
//! Exit codes: 0 success (and, for `verify`, every verdict pass or
//! inconclusive), 1 runtime failure or failing verdict, 2 usage error.

mod bench;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::chain::{normalized_chain, sample_trajectory, AlphaParam};
use crate::distributions::{M1Sampler, DEFAULT_N_TRUNC};
use crate::error::Error;
use crate::linebreaking::{grow_with, Algorithm, GrowthConfig};
use crate::rng::RngStream;
use crate::rtree::WeightedRTree;
use crate::verify::{
    brownian_reduction_from, reports_to_jsonl, run_suite, Suite, SuiteConfig, TestReport, Verdict, DEFAULT_LEVEL,
};

pub use bench::{run_bench, BenchConfig, BenchReport, DoublingPoint};
pub use output::{manifest_path, snapshot_path, write_atomic, RunManifest, Versions};

/// Environment variable overriding the default truncation of the `M_1` product.
pub const ENV_N_TRUNC: &str = "STABLE_TREE_N_TRUNC";
/// Largest tree written as a dense distance matrix.
pub const MAX_DISTMATRIX_LEAVES: usize = 5_000;

/// Environment variable overriding the default significance level.
pub const ENV_LEVEL: &str = "STABLE_TREE_SIGNIFICANCE";

#[derive(Debug, Parser)]
#[command(name = "stable-tree", version, about = "Line-breaking constructions of stable trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow one tree and write it (plus optional snapshots) to a file.
    Sample(SampleArgs),
    /// Write chain trajectories (p, M_p) as CSV.
    Chain(ChainArgs),
    /// Run verification suites and write a JSON-lines report.
    Verify(VerifyArgs),
    /// Grow one large tree and report time, memory and invariants.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Json,
    Newick,
    Distmatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum M1Method {
    Exact,
    Truncated,
}

#[derive(Debug, Clone, Args)]
pub struct M1Args {
    /// How M_1 is drawn.
    #[arg(long, value_enum, default_value = "exact")]
    pub m1: M1Method,
    /// Number of Beta factors for `--m1 truncated`.
    #[arg(long, env = ENV_N_TRUNC, default_value_t = DEFAULT_N_TRUNC)]
    pub n_trunc: usize,
}

impl M1Args {
    fn sampler(&self) -> M1Sampler {
        match self.m1 {
            M1Method::Exact => M1Sampler::Exact,
            M1Method::Truncated => M1Sampler::Truncated { n_trunc: self.n_trunc },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub leaves: usize,
    #[arg(long, default_value = "I", value_parser = parse_algorithm)]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: TreeFormat,
    /// Leaf counts at which to also write the intermediate tree.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Vec<usize>,
    #[command(flatten)]
    pub m1: M1Args,
    /// Intensity constant c of Aldous' Poisson points (c t dt).
    #[arg(long, default_value_t = 1.0)]
    pub aldous_intensity: f64,
    /// Track vertex weights (always on for algorithm II).
    #[arg(long)]
    pub weights: bool,
    /// Re-check the weight and degree ledgers after every round.
    #[arg(long)]
    pub check_ledgers: bool,
    /// Also write the per-round trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of independent trajectories; more than one adds a `replicate` column.
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// The normalized chain (M_1 = 1) instead of (M_p).
    #[arg(long)]
    pub normalized: bool,
    #[command(flatten)]
    pub m1: M1Args,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    pub suite: Suite,
    #[arg(long, value_delimiter = ',', default_value = "1.2,1.5,1.8")]
    pub alpha_list: Vec<f64>,
    /// Replicates per Monte Carlo check.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// JSON-lines report; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Significance level of KS and chi-square tests.
    #[arg(long, env = ENV_LEVEL, default_value_t = DEFAULT_LEVEL)]
    pub level: f64,
    /// Report the first attempt even when it fails.
    #[arg(long)]
    pub no_rerun: bool,
    /// Test the increments of M_p^2/4 in a CSV written by `chain --alpha 2`
    /// instead of running suites.
    #[arg(long)]
    pub chain_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub leaves: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "I", value_parser = parse_algorithm)]
    pub algorithm: Algorithm,
    /// Number of halvings of the leaf count in the doubling-time regression.
    #[arg(long, default_value_t = 4)]
    pub doubling_steps: usize,
    /// Uniform skeleton-point queries timed per tree size.
    #[arg(long, default_value_t = 200_000)]
    pub queries: usize,
    /// Also write the summary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: Error) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult = Result<u8, CliError>;

fn render(tree: &WeightedRTree, format: TreeFormat, alpha: f64, seed: u64) -> Result<String, Error> {
    Ok(match format {
        TreeFormat::Json => tree.to_json(Some(alpha), Some(seed))? + "\n",
        TreeFormat::Newick => tree.to_newick() + "\n",
        TreeFormat::Distmatrix => tree.distance_matrix().to_csv(),
    })
}

fn format_name(f: TreeFormat) -> &'static str {
    match f {
        TreeFormat::Json => "json",
        TreeFormat::Newick => "newick",
        TreeFormat::Distmatrix => "distmatrix",
    }
}

pub fn cmd_sample(args: &SampleArgs) -> CliResult {
    let mut cfg = GrowthConfig::new(args.alpha, args.leaves, args.algorithm, args.seed).map_err(usage)?;
    cfg.m1 = args.m1.sampler();
    cfg.snapshots = args.snapshots.clone();
    cfg.aldous_intensity = args.aldous_intensity;
    cfg.weight_tracking |= args.weights;
    cfg.check_ledgers = args.check_ledgers;
    cfg.trace = args.trace.is_some();
    cfg.validate().map_err(usage)?;
    if args.format == TreeFormat::Distmatrix && args.leaves > MAX_DISTMATRIX_LEAVES {
        return Err(CliError::Usage(format!("--format distmatrix supports at most {MAX_DISTMATRIX_LEAVES} leaves")));
    }
    let mut manifest = RunManifest::new(
        "sample",
        json!({ "growth": cfg, "format": format_name(args.format), "out": args.out }),
        args.seed,
    );
    let outcome = grow_with(&cfg, &mut cfg.rng()).map_err(runtime)?;
    let alpha = cfg.alpha.value();
    write_atomic(&args.out, render(&outcome.tree, args.format, alpha, args.seed).map_err(runtime)?.as_bytes())
        .map_err(runtime)?;
    manifest.outputs.push(args.out.clone());
    for (k, tree) in &outcome.snapshots {
        let path = snapshot_path(&args.out, *k);
        write_atomic(&path, render(tree, args.format, alpha, args.seed).map_err(runtime)?.as_bytes())
            .map_err(runtime)?;
        manifest.outputs.push(path);
    }
    if let (Some(path), Some(trace)) = (&args.trace, &outcome.trace) {
        write_atomic(path, trace.to_csv().as_bytes()).map_err(runtime)?;
        manifest.outputs.push(path.clone());
    }
    manifest.finish(&args.out).map_err(runtime)?;
    eprintln!(
        "wrote {} ({} leaves, total length {})",
        args.out.display(),
        outcome.tree.leaf_count(),
        outcome.tree.total_length()
    );
    Ok(0)
}

/// CSV of chain trajectories: `p,M_p` for one replicate, `replicate,p,M_p`
/// otherwise.
pub fn chain_csv(
    alpha: AlphaParam,
    steps: usize,
    replicates: usize,
    normalized: bool,
    m1: M1Sampler,
    seed: u64,
) -> Result<String, Error> {
    let mut rng = RngStream::new(seed, 0);
    let mut out = String::from(if replicates == 1 { "p,M_p\n" } else { "replicate,p,M_p\n" });
    for r in 1..=replicates {
        let values = if normalized {
            normalized_chain(alpha, steps, &mut rng)?
        } else {
            sample_trajectory(alpha, m1, steps, &mut rng)?
        };
        for (i, m) in values.iter().enumerate() {
            if replicates == 1 {
                out.push_str(&format!("{},{m}\n", i + 1));
            } else {
                out.push_str(&format!("{r},{},{m}\n", i + 1));
            }
        }
    }
    Ok(out)
}

/// Parses either CSV layout written by [`chain_csv`] into trajectories.
pub fn parse_chain_csv(s: &str) -> Result<Vec<Vec<f64>>, Error> {
    let mut lines = s.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty chain CSV".into()))?;
    let with_rep = match header.trim() {
        "p,M_p" => false,
        "replicate,p,M_p" => true,
        h => return Err(Error::Parse(format!("unexpected chain CSV header {h:?}"))),
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Parse(format!("chain CSV line {}: {line:?}", i + 2));
        let (rep, p, m) = match (with_rep, cells.as_slice()) {
            (false, [p, m]) => (1usize, *p, *m),
            (true, [r, p, m]) => (r.parse().map_err(|_| bad())?, *p, *m),
            _ => return Err(bad()),
        };
        let p: usize = p.parse().map_err(|_| bad())?;
        let m: f64 = m.parse().map_err(|_| bad())?;
        if rep == out.len() + 1 {
            out.push(Vec::new());
        }
        if rep != out.len() {
            return Err(bad());
        }
        let traj = out.last_mut().ok_or_else(bad)?;
        if p != traj.len() + 1 {
            return Err(bad());
        }
        traj.push(m);
    }
    Ok(out)
}

pub fn cmd_chain(args: &ChainArgs) -> CliResult {
    let alpha = AlphaParam::new(args.alpha).map_err(usage)?;
    if args.steps == 0 || args.replicates == 0 {
        return Err(CliError::Usage("--steps and --replicates must be >= 1".into()));
    }
    let m1 = args.m1.sampler();
    let manifest = RunManifest::new(
        "chain",
        json!({ "alpha": args.alpha, "steps": args.steps, "replicates": args.replicates, "normalized": args.normalized, "m1": m1, "out": args.out }),
        args.seed,
    );
    let csv = chain_csv(alpha, args.steps, args.replicates, args.normalized, m1, args.seed).map_err(runtime)?;
    write_atomic(&args.out, csv.as_bytes()).map_err(runtime)?;
    let mut manifest = manifest;
    manifest.outputs.push(args.out.clone());
    manifest.finish(&args.out).map_err(runtime)?;
    Ok(0)
}

fn emit_reports(reports: &[TestReport], path: Option<&Path>) -> Result<(), Error> {
    let jsonl = reports_to_jsonl(reports)?;
    match path {
        Some(p) => write_atomic(p, jsonl.as_bytes()),
        None => {
            print!("{jsonl}");
            Ok(())
        }
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Usage(format!("--level must be in (0, 1), got {}", args.level)));
    }
    let cfg = SuiteConfig {
        alphas: args.alpha_list.clone(),
        n: args.n,
        seed: args.seed,
        level: args.level,
        rerun: !args.no_rerun,
    };
    for &a in &cfg.alphas {
        AlphaParam::new(a).map_err(usage)?;
    }
    if args.n == 0 {
        return Err(CliError::Usage("--n must be >= 1".into()));
    }
    let mut manifest = RunManifest::new(
        "verify",
        json!({ "suite": args.suite, "suite_config": cfg, "chain_csv": args.chain_csv }),
        args.seed,
    );
    let reports = match &args.chain_csv {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| runtime(e.into()))?;
            let trajs = parse_chain_csv(&text).map_err(usage)?;
            vec![brownian_reduction_from(&trajs, args.seed).map_err(runtime)?.at_level(args.level)]
        }
        None => run_suite(args.suite, &cfg).map_err(runtime)?,
    };
    for r in &reports {
        eprintln!("{}", r.summary());
    }
    emit_reports(&reports, args.report.as_deref()).map_err(runtime)?;
    if let Some(path) = &args.report {
        manifest.outputs.push(path.clone());
        manifest.finish(path).map_err(runtime)?;
    }
    let failed = reports.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let inconclusive = reports.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
    eprintln!(
        "{} tests: {} passed, {failed} failed, {inconclusive} inconclusive",
        reports.len(),
        reports.len() - failed - inconclusive
    );
    if inconclusive > 0 {
        eprintln!("warning: {inconclusive} inconclusive test(s)");
    }
    Ok(if failed > 0 { 1 } else { 0 })
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult {
    let cfg = BenchConfig {
        alpha: args.alpha,
        leaves: args.leaves,
        seed: args.seed,
        algorithm: args.algorithm,
        doubling_steps: args.doubling_steps,
        queries: args.queries,
    };
    cfg.validate().map_err(usage)?;
    let report = run_bench(&cfg).map_err(runtime)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| runtime(e.into()))?;
    println!("{text}");
    if let Some(path) = &args.out {
        write_atomic(path, (text + "\n").as_bytes()).map_err(runtime)?;
        let mut manifest = RunManifest::new("bench", json!({ "bench": cfg }), args.seed);
        manifest.outputs.push(path.clone());
        manifest.finish(path).map_err(runtime)?;
    }
    Ok(if report.invariants_ok { 0 } else { 1 })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Chain(a) => cmd_chain(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
            }
            e.code()
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
