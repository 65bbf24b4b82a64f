//! Command-line entry point: subcommands, run manifests and output writers.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
pub use output::{sha256_file, write_json};

#[derive(Debug, Parser)]
#[command(name = "quadlab", version, about = "Rational points, fractal measures and dimension-bound covers on quadrics")]
pub struct Cli {
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker count; recorded in the manifest, results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Rational points with denominator at most qmax.
    Enumerate(EnumerateArgs),
    /// Best intrinsic approximations of each target.
    Approximate(ApproximateArgs),
    /// Empirical irrationality exponent of each target.
    Omega(OmegaArgs),
    /// Explicit point with prescribed exponent, as a chain of rational witnesses.
    Liouville(LiouvilleArgs),
    /// Ahlfors, decay and doubling estimates for a self-similar measure.
    MeasureFit(MeasureFitArgs),
    /// Slab ratios near obstacles or under a nonsingular map.
    Decay(DecayArgs),
    /// Simplex certificates and kappa calibration over a ball family.
    SimplexCheck(SimplexArgs),
    /// Cover costs and the summability transition for a chart measure.
    DimBound(DimBoundArgs),
    /// Summary table over earlier run manifests.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub quadric: PathBuf,
    #[arg(long)]
    pub qmax: u64,
    /// brute-force or chord.
    #[arg(long, default_value = "brute-force")]
    pub backend: String,
    /// `l1,l2:u1,u2`.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub region: Option<String>,
    #[arg(long)]
    pub include_singular: bool,
    /// Also run the other backend and compare point sets.
    #[arg(long)]
    pub cross_check: bool,
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ApproximateArgs {
    #[arg(long)]
    pub quadric: PathBuf,
    /// CSV with columns x_1..x_d.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub qmax: u64,
    #[arg(long, default_value_t = 5)]
    pub tail: usize,
    /// Records up to this height are compared with the full run.
    #[arg(long, default_value_t = 100)]
    pub q_check: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct OmegaArgs {
    #[arg(long)]
    pub quadric: PathBuf,
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long)]
    pub qmax: u64,
    #[arg(long, default_value_t = 5)]
    pub tail: usize,
    /// Report membership in W_c for this c.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct LiouvilleArgs {
    #[arg(long)]
    pub quadric: PathBuf,
    /// Target exponent, a rational above 1.
    #[arg(long)]
    pub c: String,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 5)]
    pub tail: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MeasureFitArgs {
    /// IFS file, or `preset:<name>`.
    #[arg(long)]
    pub measure: String,
    #[arg(long, default_value_t = 12)]
    pub samples: usize,
    /// Ball radii for the Ahlfors fit; list or `lo:step:hi`.
    #[arg(long)]
    pub scales: Option<String>,
    /// Relative slab widths for the decay fit.
    #[arg(long)]
    pub eps: Option<String>,
    /// Ball radii for the decay fit.
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long, default_value_t = 6)]
    pub directions: usize,
    #[arg(long, default_value_t = 4)]
    pub nearby: usize,
    #[arg(long)]
    pub expect_delta: Option<f64>,
    #[arg(long)]
    pub expect_alpha: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct DecayArgs {
    /// Experiment spec file.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimplexArgs {
    #[arg(long)]
    pub quadric: PathBuf,
    /// Compact set K as `l1,l2:u1,u2`.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub region: String,
    /// CSV with columns x_1..x_d,radius (rational literals).
    #[arg(long)]
    pub balls: PathBuf,
    /// Strictly decreasing rationals, e.g. `2,1,1/2,1/4`.
    #[arg(long)]
    pub kappa_grid: String,
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct DimBoundArgs {
    #[arg(long)]
    pub quadric: PathBuf,
    /// IFS file, or `preset:<name>`.
    #[arg(long)]
    pub measure: String,
    #[arg(long)]
    pub chart: PathBuf,
    /// Exponents c >= 1, comma separated.
    #[arg(long)]
    pub c: String,
    /// Increasing s values; list or `lo:step:hi`.
    #[arg(long, default_value = "0:0.01:1")]
    pub s_grid: String,
    /// Number of cover levels.
    #[arg(long, default_value_t = 8)]
    pub levels: u32,
    #[arg(long, default_value_t = 3)]
    pub first_level: u32,
    #[arg(long, default_value = "2")]
    pub kappa: String,
    /// Decay exponent of the source measure; defaults to its Ahlfors exponent.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Defaults to 0.9·alpha.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.98)]
    pub theta: f64,
    #[arg(long, default_value_t = 4)]
    pub tail: usize,
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Run directories, or parents whose subdirectories hold manifests.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Enumerate(_) => "enumerate",
            Command::Approximate(_) => "approximate",
            Command::Omega(_) => "omega",
            Command::Liouville(_) => "liouville",
            Command::MeasureFit(_) => "measure-fit",
            Command::Decay(_) => "decay",
            Command::SimplexCheck(_) => "simplex-check",
            Command::DimBound(_) => "dim-bound",
            Command::Report(_) => "report",
        }
    }
}

/// One pass/fail comparison carried into the manifest and collected by `report`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub quantity: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

/// What a subcommand hands back to the dispatcher.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
    pub operations: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
    pub config: Value,
    /// Set when outputs were written but the run still fails.
    pub failure: Option<Error>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub seed: u64,
    pub workers: usize,
    pub version: String,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<String>,
    pub output_sha256: serde_json::Map<String, Value>,
    pub wall_clock_ms: f64,
    pub operations: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
    pub status: String,
    pub error: Option<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

fn error_record(e: &Error) -> Value {
    json!({"kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code()})
}

/// Scans raw arguments for `--out`, for manifests of runs that failed to parse.
fn out_dir_hint(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--out=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Replaces `--replay <manifest>` by the manifest's recorded arguments, keeping any `--out` given here.
fn expand_replay(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--replay") else { return Ok(args) };
    let path = args.get(pos + 1).ok_or_else(|| Error::InvalidInput("--replay needs a manifest path".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))?;
    let mut out = vec![args[0].clone()];
    let mut recorded = m.argv.into_iter().skip(1).peekable();
    let new_out = out_dir_hint(&args);
    while let Some(a) = recorded.next() {
        if new_out.is_some() && a == "--out" {
            recorded.next();
            continue;
        }
        if new_out.is_some() && a.starts_with("--out=") {
            continue;
        }
        out.push(a);
    }
    if let Some(o) = new_out {
        out.push("--out".into());
        out.push(o.to_string_lossy().into_owned());
    }
    Ok(out)
}

fn emit_failure(e: &Error, out: Option<&PathBuf>, argv: &[String], extra: Value) -> i32 {
    let mut rec = json!({"error": error_record(e)});
    if let (Value::Object(m), Value::Object(x)) = (&mut rec, extra) {
        if x.contains_key("usage") {
            m["error"]["kind"] = json!("usage");
        }
        m.extend(x);
    }
    eprintln!("{}", serde_json::to_string(&rec).unwrap_or_default());
    if let Some(dir) = out {
        let manifest = RunManifest {
            subcommand: argv.get(1).cloned().unwrap_or_default(),
            argv: argv.to_vec(),
            config: Value::Null,
            seed: 0,
            workers: 1,
            version: env!("CARGO_PKG_VERSION").into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            output_sha256: Default::default(),
            wall_clock_ms: 0.0,
            operations: Default::default(),
            checks: Vec::new(),
            status: "error".into(),
            error: Some(error_record(e)),
        };
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = write_json(&dir.join("manifest.json"), &manifest);
        }
    }
    e.exit_code()
}

/// Parses `args` (program name first), runs the subcommand and returns the exit status.
pub fn run(args: Vec<OsString>) -> i32 {
    let args: Vec<String> = args.into_iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let args = match expand_replay(args.clone()) {
        Ok(a) => a,
        Err(e) => return emit_failure(&e, out_dir_hint(&args).as_ref(), &args, json!({})),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let usage = {
                use clap::CommandFactory;
                Cli::command().render_usage().to_string()
            };
            let err = Error::InvalidInput(e.kind().to_string());
            let detail = e.to_string();
            return emit_failure(&err, out_dir_hint(&args).as_ref(), &args, json!({"usage": usage, "detail": detail}));
        }
    };
    dispatch(&cli, &args)
}

fn dispatch(cli: &Cli, argv: &[String]) -> i32 {
    let start = Instant::now();
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        return emit_failure(&Error::Io(e), None, argv, json!({}));
    }
    let result = commands::execute(cli);
    let wall = start.elapsed().as_secs_f64() * 1000.0;
    let (outcome, err) = match result {
        Ok(mut o) => {
            let f = o.failure.take();
            (o, f)
        }
        Err(e) => (RunOutcome::default(), Some(e)),
    };
    let mut hashes = serde_json::Map::new();
    for name in &outcome.outputs {
        if let Ok(h) = sha256_file(&cli.out.join(name)) {
            hashes.insert(name.clone(), Value::String(h));
        }
    }
    let inputs = outcome
        .inputs
        .iter()
        .map(|p| InputFile { path: p.to_string_lossy().into_owned(), sha256: sha256_file(p).unwrap_or_default() })
        .collect();
    let config = if outcome.config.is_null() {
        serde_json::to_value(&cli.command).unwrap_or(Value::Null)
    } else {
        outcome.config
    };
    let manifest = RunManifest {
        subcommand: cli.command.name().into(),
        argv: argv.to_vec(),
        config,
        seed: cli.seed,
        workers: cli.workers,
        version: env!("CARGO_PKG_VERSION").into(),
        inputs,
        outputs: outcome.outputs,
        output_sha256: hashes,
        wall_clock_ms: wall,
        operations: outcome.operations,
        checks: outcome.checks,
        status: if err.is_some() { "error".into() } else { "ok".into() },
        error: err.as_ref().map(error_record),
    };
    if let Err(e) = write_json(&cli.out.join("manifest.json"), &manifest) {
        return emit_failure(&e, None, argv, json!({}));
    }
    match err {
        Some(e) => {
            eprintln!("{}", serde_json::to_string(&json!({"error": error_record(&e)})).unwrap_or_default());
            e.exit_code()
        }
        None => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_swaps_the_output_directory() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest {
            subcommand: "enumerate".into(),
            argv: ["quadlab", "enumerate", "--qmax", "5", "--out", "a"].map(String::from).to_vec(),
            config: Value::Null,
            seed: 0,
            workers: 1,
            version: String::new(),
            inputs: vec![],
            outputs: vec![],
            output_sha256: Default::default(),
            wall_clock_ms: 0.0,
            operations: Default::default(),
            checks: vec![],
            status: "ok".into(),
            error: None,
        };
        let p = dir.path().join("m.json");
        write_json(&p, &m).unwrap();
        let args = vec!["quadlab".into(), "--replay".into(), p.to_string_lossy().into_owned(), "--out".into(), "b".into()];
        let got = expand_replay(args).unwrap();
        assert_eq!(got, ["quadlab", "enumerate", "--qmax", "5", "--out", "b"].map(String::from).to_vec());
    }

    #[test]
    fn out_hint_forms() {
        let a = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(out_dir_hint(&a(&["x", "--out", "d"])), Some(PathBuf::from("d")));
        assert_eq!(out_dir_hint(&a(&["x", "--out=e"])), Some(PathBuf::from("e")));
        assert_eq!(out_dir_hint(&a(&["x"])), None);
    }
}
