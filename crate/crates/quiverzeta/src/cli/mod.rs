//! Command-line front end: parse representation/algebra documents, run
//! computations and verifications, emit coefficient tables and reports.
//!
//! Commands map onto the engine entry points: `coeffs` (truncated zeta of
//! the input, optionally amalgamated), `closed-form abelian|heisenberg`,
//! and the `verify` family. Exit status: 0 on success/PASS, 1 on FAIL,
//! 2 on usage, schema, or resource errors.
//!
//! Text and TSV output is deterministic byte for byte for a fixed config;
//! timing goes to stderr (or into the `elapsed_ms` field of JSON reports).

pub mod schema;

pub use schema::{parse_rep, render, Document, ParsedInput};

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::dirichlet::{abelian_zeta, heisenberg_amalgam_zeta, rational_to_string, DirichletPoly};
use crate::engine::{
    self, selfcheck, verify_amalgam, verify_measure, verify_pairsum, verify_sum_lattice,
    EngineError, EnumStats, Mismatch, VerifyReport,
};
use crate::model::{amalgamate_rep, AdmissibleRep, ModelError};
use crate::padic::{CapSpec, PAdicContext, PadicError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input document at {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Pairsum,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Truncated zeta series of the input, after amalgamation by `m`.
    Coeffs { oracle: Oracle },
    /// Truncated expansion of the free-module closed form of rank `n`.
    ClosedFormAbelian { n: u32 },
    /// Truncated expansion of the amalgamated-Heisenberg closed form.
    ClosedFormHeisenberg,
    /// Amalgam identity: pair sum of the amalgamated representation vs. the
    /// rewritten right-hand side. `negative_control` swaps in a deliberately
    /// corrupted weight and expects FAIL.
    VerifyAmalgam { negative_control: bool },
    /// Oracle equivalence: brute-force enumeration vs. pair-sum expansion.
    VerifyPairsum,
    /// Sum-of-projections identity at `(m, n)`, including the partition check.
    VerifySumLattice { n: u32 },
    /// Good-basis measure vs. residue counting.
    VerifyMeasure { rank: usize, nu_max: u32 },
}

/// One fully-specified job.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub input: Option<PathBuf>,
    pub p: u64,
    pub caps: CapSpec,
    pub m: u32,
    pub command: Command,
    pub format: OutputFormat,
    pub limit: u64,
    pub parallel: bool,
}

/// What a run produced: the process exit code, the deterministic stdout
/// payload, and a timing note for stderr.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub timing: String,
}

#[derive(Serialize)]
struct CoeffRow {
    exponents: Vec<u32>,
    value: String,
}

#[derive(Serialize)]
struct JsonReport {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    p: u64,
    caps: serde_json::Value,
    m: u32,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mismatch: Option<Mismatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<CoeffRow>>,
    counts: EnumStats,
    elapsed_ms: u64,
}

fn caps_json(caps: &CapSpec) -> serde_json::Value {
    match caps {
        CapSpec::Uniform(k) => serde_json::json!(k),
        CapSpec::PerVertex(m) => serde_json::json!(m),
    }
}

fn command_name(cmd: &Command) -> String {
    match cmd {
        Command::Coeffs {
            oracle: Oracle::Pairsum,
        } => "coeffs".into(),
        Command::Coeffs {
            oracle: Oracle::Direct,
        } => "coeffs --oracle direct".into(),
        Command::ClosedFormAbelian { n } => format!("closed-form abelian n={n}"),
        Command::ClosedFormHeisenberg => "closed-form heisenberg".into(),
        Command::VerifyAmalgam {
            negative_control: false,
        } => "verify amalgam".into(),
        Command::VerifyAmalgam {
            negative_control: true,
        } => "verify amalgam --negative-control".into(),
        Command::VerifyPairsum => "verify pairsum".into(),
        Command::VerifySumLattice { n } => format!("verify sum-lattice n={n}"),
        Command::VerifyMeasure { rank, nu_max } => format!("verify measure r={rank} nu<={nu_max}"),
    }
}

fn uniform_cap(caps: &CapSpec) -> Result<u32, CliError> {
    match caps {
        CapSpec::Uniform(k) => Ok(*k),
        CapSpec::PerVertex(_) => Err(CliError::Usage(
            "this command takes a single uniform cap".into(),
        )),
    }
}

fn coeff_rows(poly: &DirichletPoly) -> Vec<CoeffRow> {
    DirichletPoly::cap_box(poly.caps())
        .into_iter()
        .map(|k| CoeffRow {
            value: rational_to_string(&poly.coeff(&k)),
            exponents: k.0,
        })
        .collect()
}

fn coeff_table(poly: &DirichletPoly, var_names: &[String]) -> String {
    let mut out = String::from("# ");
    out.push_str(&var_names.join(" "));
    out.push_str("\tcoefficient\n");
    out.push_str(&poly.render_tsv());
    out
}

fn read_input(config: &JobConfig) -> Result<ParsedInput, CliError> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command requires an input document (--in)".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rep(&text)
}

fn load_amalgamated_rep(config: &JobConfig) -> Result<AdmissibleRep, CliError> {
    let rep = read_input(config)?.to_rep();
    Ok(amalgamate_rep(&rep, config.m)?)
}

/// Execute a job. Schema, usage, and resource errors surface as `Err`;
/// verification failures are a successful run with exit code 1.
pub fn run(config: &JobConfig) -> Result<RunOutcome, CliError> {
    if config.m == 0 {
        return Err(CliError::Usage("m must be at least 1".into()));
    }
    let ctx = PAdicContext::new(config.p, config.caps.clone())?
        .with_limit(config.limit.max(1))
        .with_parallel(config.parallel);
    let started = Instant::now();

    match &config.command {
        Command::Coeffs { oracle } => {
            let rep = load_amalgamated_rep(config)?;
            let (poly, counts) = match oracle {
                Oracle::Pairsum => engine::zeta_pairsum_with_stats(&rep, &ctx)?,
                Oracle::Direct => engine::zeta_direct_with_stats(&rep, &ctx)?,
            };
            let names = rep.quiver().vertex_ids().to_vec();
            Ok(coeff_outcome(config, &ctx, poly, names, counts, started))
        }
        Command::ClosedFormAbelian { n } => {
            let cap = uniform_cap(&ctx.caps().clone())?;
            let poly = abelian_zeta(*n, 0, &ctx, &[cap]);
            Ok(coeff_outcome(
                config,
                &ctx,
                poly,
                vec!["s".into()],
                EnumStats::default(),
                started,
            ))
        }
        Command::ClosedFormHeisenberg => {
            let cap = uniform_cap(&ctx.caps().clone())?;
            let poly = heisenberg_amalgam_zeta(config.m, &ctx, cap);
            Ok(coeff_outcome(
                config,
                &ctx,
                poly,
                vec!["s".into()],
                EnumStats::default(),
                started,
            ))
        }
        Command::VerifyAmalgam { negative_control } => {
            let rep = read_input(config)?.to_rep();
            let report = if *negative_control {
                selfcheck::verify_amalgam_corrupted(&rep, config.m, &ctx)?
            } else {
                verify_amalgam(&rep, config.m, &ctx)?
            };
            Ok(report_outcome(config, report))
        }
        Command::VerifyPairsum => {
            let rep = read_input(config)?.to_rep();
            let report = verify_pairsum(&rep, &ctx)?;
            Ok(report_outcome(config, report))
        }
        Command::VerifySumLattice { n } => {
            let cap = uniform_cap(&ctx.caps().clone())?;
            let report = verify_sum_lattice(config.m, *n, &ctx, cap)?;
            Ok(report_outcome(config, report))
        }
        Command::VerifyMeasure { rank, nu_max } => {
            let report = verify_measure(*rank, *nu_max, &ctx)?;
            Ok(report_outcome(config, report))
        }
    }
}

fn coeff_outcome(
    config: &JobConfig,
    _ctx: &PAdicContext,
    poly: DirichletPoly,
    var_names: Vec<String>,
    counts: EnumStats,
    started: Instant,
) -> RunOutcome {
    let elapsed_ms = started.elapsed().as_millis() as u64;
    let stdout = match config.format {
        OutputFormat::Tsv => coeff_table(&poly, &var_names),
        OutputFormat::Text => {
            let mut s = format!("command: {}\n", command_name(&config.command));
            s.push_str(&coeff_table(&poly, &var_names));
            s.push_str(&format!(
                "counts: visited={} accepted={}\n",
                counts.visited, counts.accepted
            ));
            s
        }
        OutputFormat::Json => {
            let report = JsonReport {
                command: command_name(&config.command),
                input: config.input.as_ref().map(|p| p.display().to_string()),
                p: config.p,
                caps: caps_json(&config.caps),
                m: config.m,
                status: "ok".into(),
                mismatch: None,
                coefficients: Some(coeff_rows(&poly)),
                counts,
                elapsed_ms,
            };
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
    };
    RunOutcome {
        exit_code: 0,
        stdout,
        timing: format!("elapsed_ms: {elapsed_ms}"),
    }
}

fn report_outcome(config: &JobConfig, report: VerifyReport) -> RunOutcome {
    let exit_code = if report.status.is_pass() { 0 } else { 1 };
    let stdout = match config.format {
        OutputFormat::Text | OutputFormat::Tsv => {
            format!(
                "{}\ncounts: visited={} accepted={}\n",
                report.summary(),
                report.counts.visited,
                report.counts.accepted
            )
        }
        OutputFormat::Json => {
            let json = JsonReport {
                command: command_name(&config.command),
                input: config.input.as_ref().map(|p| p.display().to_string()),
                p: config.p,
                caps: caps_json(&config.caps),
                m: config.m,
                status: match report.status {
                    engine::VerifyStatus::Pass => "PASS".into(),
                    engine::VerifyStatus::Fail => "FAIL".into(),
                },
                mismatch: report.mismatch.clone(),
                coefficients: None,
                counts: report.counts,
                elapsed_ms: report.elapsed_ms,
            };
            serde_json::to_string_pretty(&json).expect("report serializes") + "\n"
        }
    };
    RunOutcome {
        exit_code,
        stdout,
        timing: format!("elapsed_ms: {}", report.elapsed_ms),
    }
}

/// Parse a cap argument: a bare non-negative integer (uniform) or a JSON
/// object mapping vertex ids to caps.
pub fn parse_caps_arg(s: &str) -> Result<CapSpec, String> {
    if let Ok(k) = s.parse::<u32>() {
        return Ok(CapSpec::Uniform(k));
    }
    match serde_json::from_str::<std::collections::BTreeMap<String, u32>>(s) {
        Ok(m) if !m.is_empty() => Ok(CapSpec::PerVertex(m)),
        Ok(_) => Err("per-vertex caps object must not be empty".into()),
        Err(e) => Err(format!(
            "expected a non-negative integer or a JSON object of per-vertex caps: {e}"
        )),
    }
}
