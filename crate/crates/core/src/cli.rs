//! Command-line front end. Every subcommand writes one JSON document (or a
//! histogram CSV where that makes sense) to `--out` or standard output.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or IO error,
//! 3 a numerical check failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::distributions::{linear_space_from_correspondences, BoxConfig, Correspondences5};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::montecarlo::{estimate_abs_det, pencil_experiment, run_experiment, Dist};
use crate::rng::DEFAULT_SEED;
use crate::solver::{solve_five_point, LinearSpace, SolveOptions};
use crate::verify::{run_verify, Suite};
use crate::zonoid::{zonoid_lower_bound, Lambdas, DEFAULT_GRID};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

pub const THREADS_ENV: &str = "ESSENTIAL_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "essential-lab", version, about = "Real solutions of random five-point problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance given as JSON.
    Solve(SolveArgs),
    /// Count real solutions over many random instances.
    Experiment(ExperimentArgs),
    /// Determinant estimator of the mean count.
    Det(DetArgs),
    /// Lower bound on the mean count from an inscribed polytope.
    Zonoid(ZonoidArgs),
    /// Numerical checks of normal Jacobians, volumes and identities.
    Verify(VerifyArgs),
    /// Real roots of random cubic determinant pencils.
    Pencil(PencilArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum DistArg {
    #[value(name = "unifG")]
    #[serde(rename = "unifG")]
    UnifG,
    #[serde(rename = "psi")]
    Psi,
    #[serde(rename = "box")]
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    All,
    Nj,
    Volumes,
    Identities,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Nj => Suite::Nj,
            SuiteArg::Volumes => Suite::Volumes,
            SuiteArg::Identities => Suite::Identities,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    /// Master seed.
    #[arg(long, default_value_t = DEFAULT_SEED, conflicts_with = "entropy")]
    pub seed: u64,
    /// Draw the seed from OS entropy instead; the seed used is echoed.
    #[arg(long)]
    pub entropy: bool,
}

impl SeedArgs {
    fn resolve(&self) -> u64 {
        if self.entropy {
            rand::random()
        } else {
            self.seed
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn default_workers() -> u64 {
    std::thread::available_parallelism().map(|n| n.get() as u64).unwrap_or(1)
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Instance file: `{"rows": [...]}` or `{"correspondences": [...]}`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = SolveOptions::default().retries)]
    pub retries: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, env = THREADS_ENV, default_value_t = default_workers(), value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Box configuration `{"boxes": [[a, b, c, d] x 10]}`; required for `--dist box`.
    #[arg(long)]
    pub boxes: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DetArgs {
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, env = THREADS_ENV, default_value_t = default_workers(), value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ZonoidArgs {
    /// Subdivisions of the octant grid for membership checks.
    #[arg(long, default_value_t = DEFAULT_GRID as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    pub suite: SuiteArg,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PencilArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, env = THREADS_ENV, default_value_t = default_workers(), value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Instance file accepted by `solve`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InstanceFile {
    Rows { rows: [[f64; 9]; 5] },
    Correspondences { correspondences: [PointPair; 5] },
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct PointPair {
    pub u: [f64; 3],
    pub v: [f64; 3],
}

impl InstanceFile {
    pub fn linear_space(&self) -> Result<LinearSpace> {
        match self {
            InstanceFile::Rows { rows } => LinearSpace::new(*rows),
            InstanceFile::Correspondences { correspondences } => {
                let u = correspondences.map(|p| Vec3::from(p.u));
                let v = correspondences.map(|p| Vec3::from(p.v));
                linear_space_from_correspondences(&Correspondences5::from_vectors(&u, &v)?)
            }
        }
    }
}

enum Failure {
    Usage(String),
    Invalid(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

/// Result of one subcommand: the document to write and whether its checks passed.
struct Outcome {
    body: String,
    checks_passed: bool,
}

fn envelope(command: &str, config: Value, report: Value) -> Result<String> {
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "report": report,
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn json_only(format: Format, command: &str) -> std::result::Result<(), Failure> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Usage(format!("`{command}` only writes JSON"))),
    }
}

fn solve(a: &SolveArgs) -> std::result::Result<Outcome, Failure> {
    let text = read_file(&a.input)?;
    let instance: InstanceFile = serde_json::from_str(&text).map_err(Error::from)?;
    let l = instance.linear_space()?;
    let r = solve_five_point(&l, &SolveOptions { retries: a.retries, seed: a.seed });
    let config = json!({ "input": a.input.display().to_string(), "seed": a.seed, "retries": a.retries });
    let report = serde_json::to_value(&r).map_err(Error::from)?;
    Ok(Outcome { body: envelope("solve", config, report)?, checks_passed: !r.status.is_failed() })
}

fn experiment(a: &ExperimentArgs) -> std::result::Result<Outcome, Failure> {
    let dist = match (a.dist, &a.boxes) {
        (DistArg::Box, Some(path)) => Dist::Box(BoxConfig::from_json(&read_file(path)?)?),
        (DistArg::Box, None) => return Err(Failure::Usage("`--dist box` needs `--boxes`".into())),
        (_, Some(_)) => return Err(Failure::Usage("`--boxes` only applies to `--dist box`".into())),
        (DistArg::UnifG, None) => Dist::UnifG,
        (DistArg::Psi, None) => Dist::Psi,
    };
    let seed = a.seed.resolve();
    let r = run_experiment(&dist, a.n, seed, a.workers as usize)?;
    if a.output.format == Format::Csv {
        return Ok(Outcome { body: r.histogram_csv(), checks_passed: true });
    }
    let config = json!({
        "distribution": a.dist,
        "n": a.n,
        "seed": seed,
        "workers": a.workers,
        "boxes": a.boxes.as_ref().map(|p| p.display().to_string()),
    });
    let report = serde_json::to_value(&r).map_err(Error::from)?;
    Ok(Outcome { body: envelope("experiment", config, report)?, checks_passed: true })
}

fn det(a: &DetArgs) -> std::result::Result<Outcome, Failure> {
    json_only(a.output.format, "det")?;
    let seed = a.seed.resolve();
    let r = estimate_abs_det(a.n, seed, a.workers as usize)?;
    let config = json!({ "n": a.n, "seed": seed, "workers": a.workers });
    let report = serde_json::to_value(&r).map_err(Error::from)?;
    Ok(Outcome { body: envelope("det", config, report)?, checks_passed: true })
}

fn zonoid(a: &ZonoidArgs) -> std::result::Result<Outcome, Failure> {
    json_only(a.output.format, "zonoid")?;
    let r = zonoid_lower_bound(&Lambdas::default(), a.grid as usize)?;
    let config = json!({ "grid": a.grid, "lambdas": r.lambdas });
    let passed = r.all_members && r.final_bound >= 0.93;
    let report = serde_json::to_value(&r).map_err(Error::from)?;
    Ok(Outcome { body: envelope("zonoid", config, report)?, checks_passed: passed })
}

fn verify(a: &VerifyArgs) -> std::result::Result<Outcome, Failure> {
    json_only(a.output.format, "verify")?;
    let seed = a.seed.resolve();
    let r = run_verify(a.suite.into(), seed)?;
    let config = json!({ "suite": r.suite, "seed": seed });
    let report = serde_json::to_value(&r).map_err(Error::from)?;
    Ok(Outcome { body: envelope("verify", config, report)?, checks_passed: r.all_passed })
}

fn pencil(a: &PencilArgs) -> std::result::Result<Outcome, Failure> {
    let seed = a.seed.resolve();
    let r = pencil_experiment(a.n, seed, a.workers as usize)?;
    if a.output.format == Format::Csv {
        let mut s = String::from("real_roots,frequency\n");
        for (k, c) in r.histogram.iter().enumerate() {
            s.push_str(&format!("{k},{c}\n"));
        }
        return Ok(Outcome { body: s, checks_passed: true });
    }
    let config = json!({ "n": a.n, "seed": seed, "workers": a.workers });
    let report = serde_json::to_value(&r).map_err(Error::from)?;
    Ok(Outcome { body: envelope("pencil", config, report)?, checks_passed: true })
}

fn write_output(body: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => stdout.write_all(body.as_bytes()).map_err(Error::from),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let (outcome, out) = match &cli.command {
        Command::Solve(a) => (solve(a), a.out.as_deref()),
        Command::Experiment(a) => (experiment(a), a.output.out.as_deref()),
        Command::Det(a) => (det(a), a.output.out.as_deref()),
        Command::Zonoid(a) => (zonoid(a), a.output.out.as_deref()),
        Command::Verify(a) => (verify(a), a.output.out.as_deref()),
        Command::Pencil(a) => (pencil(a), a.output.out.as_deref()),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
        Err(Failure::Invalid(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_INVALID;
        }
    };
    if let Err(e) = write_output(&outcome.body, out, stdout) {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_INVALID;
    }
    if outcome.checks_passed {
        EXIT_OK
    } else {
        let _ = writeln!(stderr, "error: numerical checks failed; see report");
        EXIT_CHECK_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("essential-lab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_args(&["experiment"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["experiment", "--dist", "gauss"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["experiment", "--dist", "psi", "--n", "0"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["experiment", "--dist", "box", "--n", "3"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["zonoid", "--format", "csv"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["det", "--seed", "1", "--entropy"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn experiment_csv_and_json() {
        let (code, out, _) = run_args(&["experiment", "--dist", "unifG", "--n", "20", "--workers", "2", "--format", "csv"]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "real_count,frequency");
        assert_eq!(lines.len(), 12);
        let (code, out, _) = run_args(&["experiment", "--dist", "psi", "--n", "20", "--seed", "3", "--workers", "1"]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["config"]["seed"], 3);
        assert_eq!(v["report"]["n"], 20);
    }

    #[test]
    fn instance_formats() {
        let rows: InstanceFile = serde_json::from_str(r#"{"rows": [[1,0,0,0,0,0,0,0,0],[0,1,0,0,0,0,0,0,0],[0,0,1,0,0,0,0,0,0],[0,0,0,1,0,0,0,0,0],[0,0,0,0,1,0,0,0,0]]}"#).unwrap();
        assert!(rows.linear_space().is_ok());
        let bad: InstanceFile = serde_json::from_str(r#"{"rows": [[1,0,0,0,0,0,0,0,0],[1,0,0,0,0,0,0,0,0],[0,0,1,0,0,0,0,0,0],[0,0,0,1,0,0,0,0,0],[0,0,0,0,1,0,0,0,0]]}"#).unwrap();
        assert!(matches!(bad.linear_space(), Err(Error::RankDeficient { .. })));
        let c: InstanceFile = serde_json::from_str(
            r#"{"correspondences": [{"u":[1,0,1],"v":[0,1,1]},{"u":[0.2,0.3,1],"v":[-0.4,0.1,1]},{"u":[0.5,-0.2,1],"v":[0.3,0.3,1]},{"u":[-0.1,0.7,1],"v":[0.6,-0.5,1]},{"u":[0.9,0.1,1],"v":[-0.2,-0.8,1]}]}"#,
        )
        .unwrap();
        assert!(c.linear_space().is_ok());
    }
}
