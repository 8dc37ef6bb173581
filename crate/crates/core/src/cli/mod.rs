//! Command-line runner: loads a problem file, runs one mode and writes
//! `summary.json` plus mode-specific artifacts into the output directory.
//!
//! Exit codes: 0 converged or verified, 1 input error, 2 certificate
//! refused or `λ` not monotone, 3 divergence, iteration budget exhausted,
//! order or orbit violation, or a failed verification.

mod config;
mod modes;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde_json::{json, Map, Value};
use thiserror::Error;

pub use config::{
    EntourageSpec, FredholmSection, LambdaSpec, MultipleSection, ProbeSection, ProblemFile,
    QuadratureTable, RhsSpec, SolveSection, VariantSpec, VerifySection, SCHEMA_VERSION,
};

use crate::engine::EngineError;

/// Seed used when neither the command line nor the problem file sets one.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    SolveMonotone,
    SolveMultiple,
    Fredholm,
    VerifyAxioms,
    FwProbe,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::SolveMonotone => "solve-monotone",
            Mode::SolveMultiple => "solve-multiple",
            Mode::Fredholm => "fredholm",
            Mode::VerifyAxioms => "verify-axioms",
            Mode::FwProbe => "fw-probe",
        }
    }
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "solve" => Mode::Solve,
            "solve-monotone" => Mode::SolveMonotone,
            "solve-multiple" => Mode::SolveMultiple,
            "fredholm" => Mode::Fredholm,
            "verify-axioms" => Mode::VerifyAxioms,
            "fw-probe" => Mode::FwProbe,
            other => return Err(CliError::InvalidMode(other.to_string())),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {found}; expected {}", SCHEMA_VERSION)]
    Schema { found: u32 },
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("invalid mode `{0}`")]
    InvalidMode(String),
    #[error("mode {mode} needs a [{section}] table")]
    MissingSection {
        mode: &'static str,
        section: &'static str,
    },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<crate::fredholm::FredholmError> for CliError {
    fn from(e: crate::fredholm::FredholmError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<crate::instances::InstanceError> for CliError {
    fn from(e: crate::instances::InstanceError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "monofix",
    version,
    about = "Fixed-point solvers over partially ordered monoids"
)]
pub struct Args {
    /// solve, solve-monotone, solve-multiple, fredholm, verify-axioms or fw-probe
    #[arg(long)]
    pub mode: String,
    /// Problem file (TOML, schema_version = 1)
    #[arg(long)]
    pub problem: PathBuf,
    /// Output directory, created if missing
    #[arg(long, default_value = "monofix-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stopping level: residuals below eps(k)
    #[arg(long = "eps-level")]
    pub eps_level: Option<usize>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Run even when the λ certificate is refuted or inconclusive
    #[arg(long = "override-certificate")]
    pub override_certificate: bool,
    /// Terms examined by null and series checks
    #[arg(long)]
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: String,
    pub problem: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub eps_level: Option<usize>,
    pub max_iter: Option<usize>,
    pub override_certificate: bool,
    pub horizon: Option<u64>,
}

impl From<Args> for RunConfig {
    fn from(a: Args) -> Self {
        Self {
            mode: a.mode,
            problem: a.problem,
            out: a.out,
            seed: a.seed,
            eps_level: a.eps_level,
            max_iter: a.max_iter,
            override_certificate: a.override_certificate,
            horizon: a.horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    InputError = 1,
    Refused = 2,
    Failed = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub(crate) fn for_engine(e: &EngineError) -> Self {
        match e {
            EngineError::CertificateRefused { .. } | EngineError::NonMonotone { .. } => {
                Exit::Refused
            }
            EngineError::DivergenceDetected { .. }
            | EngineError::OrbitContractionViolated { .. }
            | EngineError::NotMonotoneStart
            | EngineError::OrderViolated { .. } => Exit::Failed,
            EngineError::IndexOutOfRange { .. }
            | EngineError::ArityMismatch { .. }
            | EngineError::InvalidOperator(_)
            | EngineError::DimensionMismatch { .. }
            | EngineError::VariantMismatch { .. } => Exit::InputError,
        }
    }
}

/// What a mode produced: exit status, summary fields and extra files.
pub(crate) struct ModeOutput {
    pub exit: Exit,
    pub status: String,
    pub summary: Map<String, Value>,
    pub files: Vec<(&'static str, String)>,
}

/// Settings shared by all modes after merging flags over the problem file.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub seed: u64,
    pub eps_level: Option<usize>,
    pub max_iter: Option<usize>,
    pub override_certificate: bool,
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit: Exit,
    pub summary: Value,
}

/// Runs one configuration. A summary is written whenever the output
/// directory can be created, including on input errors.
pub fn run(config: &RunConfig) -> RunOutcome {
    let (exit, status, mut fields, files) = match execute(config) {
        Ok(out) => (out.exit, out.status, out.summary, out.files),
        Err(e) => {
            let mut m = Map::new();
            m.insert("error".into(), json!(e.to_string()));
            (Exit::InputError, "input-error".to_string(), m, Vec::new())
        }
    };
    fields.insert("mode".into(), json!(config.mode));
    fields.insert("status".into(), json!(status));
    fields.insert("exit_code".into(), json!(exit.code()));
    let mut names: Vec<&str> = files.iter().map(|(n, _)| *n).collect();
    names.push("summary.json");
    fields.insert("artifacts".into(), json!(names));
    let summary = Value::Object(fields);

    if let Err(e) = write_outputs(&config.out, &files, &summary) {
        eprintln!(
            "monofix: cannot write outputs to {}: {e}",
            config.out.display()
        );
    }
    RunOutcome { exit, summary }
}

fn write_outputs(out: &Path, files: &[(&str, String)], summary: &Value) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    for (name, body) in files {
        std::fs::write(out.join(name), body)?;
    }
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(out.join("summary.json"), text)
}

fn execute(config: &RunConfig) -> Result<ModeOutput, CliError> {
    let mode = Mode::from_str(&config.mode)?;
    let file = ProblemFile::load(&config.problem)?;
    let settings = Settings {
        seed: config.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        eps_level: config.eps_level.or(file.eps_level),
        max_iter: config.max_iter.or(file.max_iter),
        override_certificate: config.override_certificate,
        horizon: config.horizon,
    };
    let base_dir = config.problem.parent().unwrap_or(Path::new("."));
    let mut out = match mode {
        Mode::Solve | Mode::SolveMonotone => {
            let s = file.solve.as_ref().ok_or(CliError::MissingSection {
                mode: mode.label(),
                section: "solve",
            })?;
            modes::solve(s, mode == Mode::SolveMonotone, &settings)?
        }
        Mode::SolveMultiple => {
            let s = file.multiple.as_ref().ok_or(CliError::MissingSection {
                mode: mode.label(),
                section: "multiple",
            })?;
            modes::multiple(s, &settings)?
        }
        Mode::Fredholm => {
            let s = file.fredholm.as_ref().ok_or(CliError::MissingSection {
                mode: mode.label(),
                section: "fredholm",
            })?;
            modes::fredholm(s, &settings)?
        }
        Mode::VerifyAxioms => {
            let s = file.verify.as_ref().ok_or(CliError::MissingSection {
                mode: mode.label(),
                section: "verify",
            })?;
            modes::verify(s, base_dir, &settings)?
        }
        Mode::FwProbe => {
            let s = file.probe.as_ref().ok_or(CliError::MissingSection {
                mode: mode.label(),
                section: "probe",
            })?;
            modes::probe(s, &settings)?
        }
    };
    out.summary.insert("seed".into(), json!(settings.seed));
    Ok(out)
}

/// Parses process arguments, runs, and returns the exit code. Argument
/// errors are input errors (exit 1); `--help` and `--version` exit 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() {
                Exit::InputError.code()
            } else {
                0
            };
            let _ = e.print();
            return code;
        }
    };
    let config = RunConfig::from(args);
    let outcome = run(&config);
    let status = outcome
        .summary
        .get("status")
        .and_then(Value::as_str)
        .unwrap_or("unknown");
    match outcome.summary.get("error").and_then(Value::as_str) {
        Some(err) => eprintln!("monofix: {status}: {err}"),
        None => eprintln!("monofix: {status}"),
    }
    outcome.exit.code()
}
