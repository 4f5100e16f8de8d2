//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when `verify --expect` disagrees with the
//! computed signature, 2 on malformed input or any other failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::construct::{realize, ConstructError, ConstructionParams};
use crate::io::export::{export_sdpa, export_socp};
use crate::io::slice::{emit_slice, to_csv, to_svg, SliceError, SliceSpec};
use crate::linalg::parse_rational;
use crate::quadratic::QuadraticSystem;
use crate::signature::{
    decompose_min_cost, lower_bound, DecompositionTree, LowerBoundCertificate, Signature,
    SignatureError,
};
use crate::verify::{probe_signature, verify, VerifyError, DEFAULT_SAMPLES, DEFAULT_SEED};

pub const SEED_ENV: &str = "FACETFORGE_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("--params: {0}")]
    Params(String),
    #[error("{SEED_ENV}={0} is not an unsigned integer")]
    Seed(String),
    #[error("cannot infer slice format from {0}; use a .svg or .csv extension")]
    SliceFormat(PathBuf),
    #[error("signature mismatch: expected {expected}, found {found}")]
    Mismatch {
        expected: Signature,
        found: Signature,
    },
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mismatch { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "facetforge",
    version,
    about = "Convex quadratic systems with prescribed facial dimension signatures"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a system realizing a signature.
    Construct {
        /// Comma-separated dimensions, e.g. 0,2,3.
        #[arg(long)]
        signature: Signature,
        /// Build along a cheapest sumset decomposition.
        #[arg(long)]
        decompose: bool,
        /// Cylinder parameters as `c,r` (rationals).
        #[arg(long, value_parser = parse_params)]
        params: Option<ConstructionParams>,
        /// Output file for the system JSON (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the realization plan JSON here.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Compute the signature of a system.
    Verify {
        file: PathBuf,
        /// Skip the exact path and sample boundary points.
        #[arg(long)]
        probe: bool,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Probe seed; defaults to $FACETFORGE_SEED, then 42.
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with status 1 unless the signature equals this one.
        #[arg(long)]
        expect: Option<Signature>,
        /// Output file for the report JSON (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the interval-covering lower bound on the number of inequalities.
    Lowerbound {
        #[arg(long)]
        signature: Signature,
        /// Print the full certificate as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print a cheapest sumset decomposition as JSON.
    Decompose {
        #[arg(long)]
        signature: Signature,
        /// Largest `max I` the search accepts.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Write a floating-point conic form of a system.
    Export {
        #[arg(long, value_enum)]
        format: ExportFormat,
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace a planar slice of the solution set to SVG or CSV.
    Slice {
        file: PathBuf,
        /// Slice spec JSON: base_point, u, v, resolution, extent.
        #[arg(long)]
        spec: PathBuf,
        /// Output file; the extension (.svg or .csv) picks the format.
        #[arg(long)]
        out: PathBuf,
    },
    /// Exploratory runs.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Subcommand)]
enum Experiment {
    /// Compare costs for the signature {0} plus the first k primes.
    Primes {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportFormat {
    Socp,
    Sdpa,
}

fn parse_params(s: &str) -> Result<ConstructionParams, CliError> {
    let (c, r) = s
        .split_once(',')
        .ok_or_else(|| CliError::Params(format!("expected `c,r`, got `{s}`")))?;
    let parse = |t: &str| parse_rational(t).map_err(|e| CliError::Params(e.to_string()));
    Ok(ConstructionParams::new(parse(c)?, parse(r)?)?)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Seed(v)),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn primes(k: usize) -> Vec<usize> {
    let mut found = Vec::with_capacity(k);
    let mut n = 2;
    while found.len() < k {
        if found
            .iter()
            .take_while(|&&p| p * p <= n)
            .all(|&p| n % p != 0)
        {
            found.push(n);
        }
        n += 1;
    }
    found
}

#[derive(Debug, Serialize)]
struct PrimesReport {
    signature: Signature,
    construction_cost: usize,
    decomposition: Option<DecompositionTree>,
    decomposition_cost: Option<usize>,
    lower_bound: LowerBoundCertificate,
    note: &'static str,
}

const PRIMES_NOTE: &str =
    "the lower bound is not known to be attained here; no optimality is claimed";

fn primes_report(k: usize) -> Result<PrimesReport, CliError> {
    let sig = Signature::new(std::iter::once(0).chain(primes(k)))?;
    let tree = decompose_min_cost(&sig, None).ok();
    Ok(PrimesReport {
        construction_cost: sig.len() - 1,
        decomposition_cost: tree.as_ref().map(DecompositionTree::cost),
        decomposition: tree,
        lower_bound: lower_bound(&sig),
        signature: sig,
        note: PRIMES_NOTE,
    })
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Construct {
            signature,
            decompose,
            params,
            out,
            plan,
        } => {
            let r = realize(&signature, &params.unwrap_or_default(), decompose);
            for w in &r.plan.warnings {
                eprintln!("warning: {w}");
            }
            emit(out.as_deref(), &to_json(&r.system))?;
            if let Some(path) = plan {
                emit(Some(&path), &to_json(&r.plan))?;
            }
            if out.is_some() {
                eprintln!(
                    "{} inequalities in dimension {}",
                    r.system.len(),
                    r.system.dim()
                );
            }
        }
        Command::Verify {
            file,
            probe,
            samples,
            seed,
            expect,
            out,
        } => {
            let system: QuadraticSystem = read_json(&file)?;
            let seed = resolve_seed(seed)?;
            let report = if probe {
                probe_signature(&system, samples, seed)?
            } else {
                verify(&system, samples, seed)?
            };
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(out.as_deref(), &to_json(&report))?;
            if let Some(expected) = expect {
                if expected != report.signature {
                    return Err(CliError::Mismatch {
                        expected,
                        found: report.signature,
                    });
                }
            }
        }
        Command::Lowerbound { signature, json } => {
            let cert = lower_bound(&signature);
            if json {
                print!("{}", to_json(&cert));
            } else {
                println!("{}", cert.k);
            }
        }
        Command::Decompose { signature, cap } => {
            let tree = decompose_min_cost(&signature, cap)?;
            #[derive(Serialize)]
            struct Out<'a> {
                signature: &'a Signature,
                cost: usize,
                tree: &'a DecompositionTree,
            }
            print!(
                "{}",
                to_json(&Out {
                    signature: &signature,
                    cost: tree.cost(),
                    tree: &tree,
                })
            );
        }
        Command::Export { format, file, out } => {
            let system: QuadraticSystem = read_json(&file)?;
            let text = match format {
                ExportFormat::Socp => to_json(&export_socp(&system)),
                ExportFormat::Sdpa => export_sdpa(&system),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Slice { file, spec, out } => {
            let system: QuadraticSystem = read_json(&file)?;
            let spec: SliceSpec = read_json(&spec)?;
            let render = match out.extension().and_then(|e| e.to_str()) {
                Some("svg") => to_svg,
                Some("csv") => to_csv,
                _ => return Err(CliError::SliceFormat(out)),
            };
            let curve = emit_slice(&system, &spec)?;
            if curve.clipped > 0 {
                eprintln!(
                    "warning: {} of {} rays clipped at extent {}",
                    curve.clipped, spec.resolution, spec.extent
                );
            }
            emit(Some(&out), &render(&curve))?;
        }
        Command::Experiment(Experiment::Primes { k, json }) => {
            let report = primes_report(k)?;
            if json {
                print!("{}", to_json(&report));
            } else {
                println!("signature           {}", report.signature);
                println!("construction cost   {}", report.construction_cost);
                match report.decomposition_cost {
                    Some(c) => println!("decomposition cost  {c}"),
                    None => println!("decomposition cost  (beyond search cap)"),
                }
                println!("lower bound         {}", report.lower_bound.k);
                println!("note: {}", report.note);
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
