//! The `chainkit` command-line entry point.
//!
//! One binary wires the whole toolkit: space ingestion, the profile and
//! chain builders, the lemma / inequality / process suites, and the
//! closed-form constants. Every randomized computation flows through the
//! single `--seed`; two runs with equal configurations produce byte-equal
//! reports regardless of `--threads`. Reports embed the tool version and a
//! digest of the resolved configuration so published numbers are traceable,
//! and `--out` persists a replayable record.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cert::{BoundCertificate, IneqStats};
use crate::chaining::{
    build_chaining_measure, check_normalizer_bound, check_total_mass, run_lemma_suite, ChainError,
};
use crate::majorant::{base_level_k0, profile, radii_table, MajorantError};
use crate::metric::{
    build_fleet, generate_space_full, FleetCase, FleetSpec, MetricError, MetricSpace, ProbMeasure,
    SpaceFamilySpec,
};
use crate::orlicz::{
    check_growth_condition, check_psi_condition, constants_ab, default_growth_grids,
    default_psi_grids, power_constants, power_membership_value, GrowthParams, OrliczError,
    OrliczFn, OrliczSpec, PsiParams,
};
use crate::process::{
    gaussian_from_metric, max_admissible_scale, metric_gram_cov, verify_net_transfer_bound,
    verify_pnorm_sup_bound, verify_psi_sup_bound, verify_sup_range_bound, verify_young_sup_bound,
    ModelSpec, ProcessError,
};
use crate::seeds;
use crate::sobolev::{run_function_suite_ext, FnSuiteConfig, SobolevError, SuiteOverrides};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Orlicz(#[from] OrliczError),
    #[error(transparent)]
    Majorant(#[from] MajorantError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

#[derive(Parser, Debug)]
#[command(
    name = "chainkit",
    version,
    about = "Majorizing-measure functionals, chaining constructions, and certified bounds on finite metric spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Base seed for every randomized computation.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Trial count: functions per space for verify-sobolev (default 1000),
    /// Monte Carlo paths for verify-process (default 10000).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker thread cap (CHAINKIT_THREADS as fallback). Reports do not
    /// depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    /// Persist a replayable run record to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form chaining constants for a ratio and/or power exponent.
    Constants {
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Majorant profile: sigma table, S, S_bar, base level, and radii.
    Profile {
        #[arg(long)]
        space: PathBuf,
        /// Measure weights (JSON array) overriding the space file.
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Function spec: `identity`, `power:P`, or inline JSON.
        #[arg(long, default_value = "power:2")]
        orlicz: String,
        #[arg(long = "R", default_value_t = 4.0)]
        r: f64,
    },
    /// Build the chaining measure and its certificates.
    Chain {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, default_value = "power:2")]
        orlicz: String,
        #[arg(long = "R", default_value_t = 4.0)]
        r: f64,
        /// Also write the measure document to this file.
        #[arg(long)]
        emit_nu: Option<PathBuf>,
    },
    /// Run the exact lemma suite over a seeded fleet.
    Lemmas {
        /// Fleet spec: inline JSON or a file path; defaults to 200 spaces
        /// of at most 40 points.
        #[arg(long)]
        fleet: Option<String>,
    },
    /// Certify the deterministic function inequalities on one space.
    VerifySobolev {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, default_value = "power:2")]
        orlicz: String,
        #[arg(long = "R", default_value_t = 4.0)]
        r: f64,
        /// Companion function for the composed bounds (defaults to phi with
        /// alpha = 0, beta = 1).
        #[arg(long)]
        psi: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Exponent for the power-range bound (defaults to phi's).
        #[arg(long)]
        p: Option<f64>,
    },
    /// Certify the Monte Carlo process bounds on one space.
    VerifyProcess {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Model spec: `brownian`, `metric-gram`, `embed`, or inline JSON.
        #[arg(long, default_value = "metric-gram")]
        model: String,
        #[arg(long, default_value = "power:2")]
        orlicz: String,
        #[arg(long = "R", default_value_t = 4.0)]
        r: f64,
        /// Exponent for the p-norm bound.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        subset_frac: f64,
    },
    /// Re-execute a persisted run record and compare reports.
    Replay {
        #[arg(long)]
        record: PathBuf,
    },
}

/// The resolved, serializable run configuration. Re-executing an equal
/// configuration reproduces the report byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub seed: u64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub format: ReportFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CommandConfig {
    Constants {
        r: Option<f64>,
        p: Option<f64>,
    },
    Profile {
        space: String,
        measure: Option<String>,
        orlicz: String,
        r: f64,
    },
    Chain {
        space: String,
        measure: Option<String>,
        orlicz: String,
        r: f64,
        emit_nu: Option<String>,
    },
    Lemmas {
        fleet: Option<String>,
    },
    VerifySobolev {
        space: String,
        measure: Option<String>,
        orlicz: String,
        r: f64,
        psi: Option<String>,
        alpha: Option<f64>,
        beta: Option<f64>,
        p: Option<f64>,
    },
    VerifyProcess {
        space: String,
        measure: Option<String>,
        model: String,
        orlicz: String,
        r: f64,
        p: Option<f64>,
        subset_frac: f64,
    },
    Replay {
        record: String,
    },
}

impl Cli {
    /// Resolves parsed arguments (plus environment fallbacks) into the
    /// serializable configuration.
    pub fn into_config(self) -> RunConfig {
        let threads = self.threads.or_else(|| {
            std::env::var("CHAINKIT_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        });
        let path_str = |p: PathBuf| p.to_string_lossy().into_owned();
        let (command, default_trials) = match self.command {
            Command::Constants { r, p } => (CommandConfig::Constants { r, p }, 1),
            Command::Profile {
                space,
                measure,
                orlicz,
                r,
            } => (
                CommandConfig::Profile {
                    space: path_str(space),
                    measure: measure.map(path_str),
                    orlicz,
                    r,
                },
                1,
            ),
            Command::Chain {
                space,
                measure,
                orlicz,
                r,
                emit_nu,
            } => (
                CommandConfig::Chain {
                    space: path_str(space),
                    measure: measure.map(path_str),
                    orlicz,
                    r,
                    emit_nu: emit_nu.map(path_str),
                },
                1,
            ),
            Command::Lemmas { fleet } => (CommandConfig::Lemmas { fleet }, 1),
            Command::VerifySobolev {
                space,
                measure,
                orlicz,
                r,
                psi,
                alpha,
                beta,
                p,
            } => (
                CommandConfig::VerifySobolev {
                    space: path_str(space),
                    measure: measure.map(path_str),
                    orlicz,
                    r,
                    psi,
                    alpha,
                    beta,
                    p,
                },
                1000,
            ),
            Command::VerifyProcess {
                space,
                measure,
                model,
                orlicz,
                r,
                p,
                subset_frac,
            } => (
                CommandConfig::VerifyProcess {
                    space: path_str(space),
                    measure: measure.map(path_str),
                    model,
                    orlicz,
                    r,
                    p,
                    subset_frac,
                },
                10_000,
            ),
            Command::Replay { record } => (
                CommandConfig::Replay {
                    record: path_str(record),
                },
                1,
            ),
        };
        RunConfig {
            command,
            seed: self.seed,
            trials: self.trials.unwrap_or(default_trials),
            threads,
            format: self.format,
            out: self.out.map(|p| p.to_string_lossy().into_owned()),
        }
    }
}

/// A complete run: configuration, deterministic report, and metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub config_digest: String,
    pub config: RunConfig,
    pub passed: bool,
    pub report: serde_json::Value,
    /// Tabular rows for the CSV rendering (header first).
    pub csv: Vec<Vec<String>>,
    /// Human-readable summary for the text rendering.
    pub summary: String,
    /// Wall-clock seconds since the epoch, set when persisting. Not part of
    /// the report document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl RunRecord {
    /// The deterministic report document: version, config digest, verdict,
    /// and payload. Byte-identical across replays of the same config.
    pub fn report_document(&self) -> serde_json::Value {
        serde_json::json!({
            "version": self.version,
            "config_digest": self.config_digest,
            "passed": self.passed,
            "report": self.report,
        })
    }

    /// Renders the report in the requested format.
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.report_document())
                    .expect("report serializes");
                s.push('\n');
                s
            }
            ReportFormat::Csv => {
                let mut s = String::new();
                for row in &self.csv {
                    let encoded: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
                    s.push_str(&encoded.join(","));
                    s.push('\n');
                }
                s
            }
            ReportFormat::Text => {
                let mut s = format!(
                    "chainkit {} (config {})\n{}",
                    self.version, self.config_digest, self.summary
                );
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s
            }
        }
    }
}

fn csv_field(f: &str) -> String {
    if f.contains([',', '"', '\n']) {
        format!("\"{}\"", f.replace('"', "\"\""))
    } else {
        f.to_string()
    }
}

fn config_digest(config: &RunConfig) -> String {
    // Only inputs that shape the computation: thread cap, output format,
    // and destination do not affect the report.
    let canonical = serde_json::json!({
        "command": &config.command,
        "seed": config.seed,
        "trials": config.trials,
    });
    seeds::fnv1a_hex(canonical.to_string().as_bytes())
}

type CommandOutput = (serde_json::Value, bool, Vec<Vec<String>>, String);

/// Executes a run configuration. Exit-status rule: `passed` is true iff no
/// certificate in the run was violated.
pub fn dispatch(config: &RunConfig) -> Result<RunRecord, CliError> {
    let run = || -> Result<CommandOutput, CliError> {
        match &config.command {
            CommandConfig::Constants { r, p } => run_constants(*r, *p),
            CommandConfig::Profile {
                space,
                measure,
                orlicz,
                r,
            } => run_profile(space, measure.as_deref(), orlicz, *r),
            CommandConfig::Chain {
                space,
                measure,
                orlicz,
                r,
                emit_nu,
            } => run_chain(space, measure.as_deref(), orlicz, *r, emit_nu.as_deref()),
            CommandConfig::Lemmas { fleet } => run_lemmas(fleet.as_deref(), config.seed),
            CommandConfig::VerifySobolev {
                space,
                measure,
                orlicz,
                r,
                psi,
                alpha,
                beta,
                p,
            } => run_verify_sobolev(
                space,
                measure.as_deref(),
                orlicz,
                *r,
                psi.as_deref(),
                *alpha,
                *beta,
                *p,
                config.trials,
                config.seed,
            ),
            CommandConfig::VerifyProcess {
                space,
                measure,
                model,
                orlicz,
                r,
                p,
                subset_frac,
            } => run_verify_process(
                space,
                measure.as_deref(),
                model,
                orlicz,
                *r,
                *p,
                *subset_frac,
                config.trials,
                config.seed,
            ),
            CommandConfig::Replay { record } => {
                let outcome = persist_and_replay(record)?;
                Ok(outcome)
            }
        }
    };

    let (report, passed, csv, summary) = match config.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            pool.install(run)?
        }
        None => run()?,
    };
    Ok(RunRecord {
        version: VERSION.to_string(),
        config_digest: config_digest(config),
        config: config.clone(),
        passed,
        report,
        csv,
        summary,
        timestamp_unix: None,
    })
}

/// Writes the record (with a timestamp) to the given path.
pub fn write_record(record: &RunRecord, path: &str) -> Result<(), CliError> {
    let mut stamped = record.clone();
    stamped.timestamp_unix = Some(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    );
    let mut body = serde_json::to_string_pretty(&stamped)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

/// Loads a persisted record, re-executes its configuration, and compares
/// the report documents byte for byte.
pub fn persist_and_replay(record_path: &str) -> Result<CommandOutput, CliError> {
    let body = fs::read_to_string(record_path)?;
    let original: RunRecord = serde_json::from_str(&body)?;
    let version_mismatch = original.version != VERSION;

    let mut config = original.config.clone();
    config.out = None;
    if matches!(config.command, CommandConfig::Replay { .. }) {
        return Err(CliError::Usage(
            "cannot replay a replay record; point --record at the original run".into(),
        ));
    }
    let rerun = dispatch(&config)?;
    let original_doc = serde_json::to_string(&original.report_document())?;
    let rerun_doc = serde_json::to_string(&rerun.report_document())?;
    let matched = original_doc == rerun_doc;
    let passed = matched && rerun.passed;
    let first_divergence = if matched {
        None
    } else {
        let pos = original_doc
            .bytes()
            .zip(rerun_doc.bytes())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| original_doc.len().min(rerun_doc.len()));
        let lo = pos.saturating_sub(40);
        let clip = |s: &str| {
            s.get(lo..(pos + 40).min(s.len()))
                .unwrap_or("<non-ascii boundary>")
                .to_string()
        };
        Some(serde_json::json!({
            "byte": pos,
            "original": clip(&original_doc),
            "rerun": clip(&rerun_doc),
        }))
    };

    let report = serde_json::json!({
        "replayed_record": record_path,
        "original_version": original.version,
        "current_version": VERSION,
        "version_mismatch_warning": version_mismatch,
        "original_digest": original.config_digest,
        "rerun_digest": rerun.config_digest,
        "match": matched,
        "first_divergence": first_divergence,
        "rerun_passed": rerun.passed,
    });
    let csv = vec![
        vec!["field".into(), "value".into()],
        vec!["match".into(), matched.to_string()],
        vec!["rerun_passed".into(), rerun.passed.to_string()],
        vec!["version_mismatch".into(), version_mismatch.to_string()],
    ];
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "replay of {record_path}: {}",
        if matched { "MATCH" } else { "MISMATCH" }
    );
    if version_mismatch {
        let _ = writeln!(
            summary,
            "warning: record written by version {}, current {}",
            original.version, VERSION
        );
    }
    Ok((report, passed, csv, summary))
}

// ---------------------------------------------------------------------------
// Input parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct SpaceFile {
    #[serde(default)]
    dist: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    measure: Option<Vec<f64>>,
    #[serde(default)]
    family: Option<SpaceFamilySpec>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

struct LoadedSpace {
    space: MetricSpace,
    measure: ProbMeasure,
    embedding: Option<Vec<Vec<f64>>>,
    source: String,
}

fn load_space(path: &str, measure_path: Option<&str>) -> Result<LoadedSpace, CliError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read space file {path}: {e}")))?;
    let file: SpaceFile = serde_json::from_str(&body)
        .map_err(|e| CliError::Usage(format!("space file {path}: {e}")))?;
    let (space, mut measure, embedding) = match (file.dist, file.family) {
        (Some(dist), None) => {
            let space = MetricSpace::from_matrix(dist, file.labels)?;
            let measure = match file.measure {
                Some(w) => ProbMeasure::new(w)?,
                None => ProbMeasure::uniform(space.n()),
            };
            (space, measure, None)
        }
        (None, Some(family)) => {
            let generated = generate_space_full(&family)?;
            let measure = match file.measure {
                Some(w) => ProbMeasure::new(w)?,
                None => generated.measure,
            };
            (generated.space, measure, generated.embedding)
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(format!(
                "space file {path} must give either \"dist\" or \"family\", not both"
            )))
        }
        (None, None) => {
            return Err(CliError::Usage(format!(
                "space file {path} needs a \"dist\" matrix or a \"family\" spec"
            )))
        }
    };
    if let Some(mp) = measure_path {
        let body = fs::read_to_string(mp)
            .map_err(|e| CliError::Usage(format!("cannot read measure file {mp}: {e}")))?;
        let w: Vec<f64> = serde_json::from_str(&body)
            .map_err(|e| CliError::Usage(format!("measure file {mp}: {e}")))?;
        measure = ProbMeasure::new(w)?;
    }
    if measure.len() != space.n() {
        return Err(CliError::Usage(format!(
            "measure has {} weights for {} points",
            measure.len(),
            space.n()
        )));
    }
    Ok(LoadedSpace {
        space,
        measure,
        embedding,
        source: path.to_string(),
    })
}

fn parse_orlicz(spec: &str) -> Result<OrliczFn, CliError> {
    let spec = spec.trim();
    let parsed: OrliczSpec = if spec.starts_with('{') {
        serde_json::from_str(spec).map_err(|e| CliError::Usage(format!("orlicz spec: {e}")))?
    } else if spec == "identity" {
        OrliczSpec::Identity
    } else if let Some(p) = spec.strip_prefix("power:") {
        let p: f64 = p
            .parse()
            .map_err(|_| CliError::Usage(format!("bad power exponent in {spec:?}")))?;
        OrliczSpec::Power { p }
    } else {
        return Err(CliError::Usage(format!(
            "orlicz spec {spec:?}: expected `identity`, `power:P`, or inline JSON"
        )));
    };
    Ok(OrliczFn::from_spec(&parsed)?)
}

/// Growth parameters for the built-in inference: the identity rides in
/// class (0, 1); any other Young function in class (1, 1).
fn infer_growth(phi: &OrliczFn) -> Result<GrowthParams, CliError> {
    if phi.power_exponent() == Some(1.0) {
        return Ok(GrowthParams::new(0.0, 1.0));
    }
    if phi.is_young() {
        return Ok(GrowthParams::new(1.0, 1.0));
    }
    Err(CliError::Usage(format!(
        "no growth class known for {}; built-in inference covers the identity (a=0, b=1) and Young functions (a=b=1)",
        phi.name()
    )))
}

/// Ratios below two are never admissible; exactly two needs `a = 0`.
fn validate_ratio(r: f64, growth: Option<GrowthParams>) -> Result<(), CliError> {
    if !(r.is_finite() && r >= 2.0) {
        return Err(CliError::Usage(format!("--R must be at least 2, got {r}")));
    }
    if let Some(g) = growth {
        if r == 2.0 && g.a > 0.0 {
            return Err(CliError::Usage(
                "--R 2 is admissible only for the identity function (growth class a = 0)".into(),
            ));
        }
    }
    Ok(())
}

fn parse_model(spec: &str, loaded: &LoadedSpace) -> Result<ModelSpec, CliError> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        return serde_json::from_str(spec).map_err(|e| CliError::Usage(format!("model spec: {e}")));
    }
    match spec {
        "brownian" | "brownian-path" => Ok(ModelSpec::BrownianPath { positions: None }),
        "metric-gram" => Ok(ModelSpec::CustomCov {
            cov: metric_gram_cov(&loaded.space, 0),
        }),
        "embed" | "embed-euclidean" => match &loaded.embedding {
            Some(points) => Ok(ModelSpec::EmbedEuclidean {
                points: points.clone(),
            }),
            None => Err(CliError::Usage(
                "embed model needs a space generated from an embedded family".into(),
            )),
        },
        other => Err(CliError::Usage(format!(
            "model spec {other:?}: expected `brownian`, `metric-gram`, `embed`, or inline JSON"
        ))),
    }
}

fn parse_fleet(spec: Option<&str>) -> Result<FleetSpec, CliError> {
    match spec {
        None => Ok(FleetSpec::default()),
        Some(s) if s.trim().starts_with('{') => {
            serde_json::from_str(s).map_err(|e| CliError::Usage(format!("fleet spec: {e}")))
        }
        Some(path) => {
            let body = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read fleet file {path}: {e}")))?;
            serde_json::from_str(&body).map_err(|e| CliError::Usage(format!("fleet file: {e}")))
        }
    }
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

fn run_constants(r: Option<f64>, p: Option<f64>) -> Result<CommandOutput, CliError> {
    if r.is_none() && p.is_none() {
        return Err(CliError::Usage("constants needs --R and/or --p".into()));
    }
    let mut report = serde_json::Map::new();
    let mut csv = vec![vec!["quantity".to_string(), "value".to_string()]];
    let mut summary = String::new();
    if let Some(r) = r {
        let (big_a, big_b) = constants_ab(r)?;
        let entry = serde_json::json!({
            "R": r,
            "A": if big_a.is_finite() { Some(big_a) } else { None },
            "A_infinite": !big_a.is_finite(),
            "B": big_b,
            "A_plus_B": if big_a.is_finite() { Some(big_a + big_b) } else { None },
        });
        report.insert("ratio_constants".into(), entry);
        csv.push(vec!["A".into(), format!("{big_a}")]);
        csv.push(vec!["B".into(), format!("{big_b}")]);
        let _ = writeln!(
            summary,
            "R = {r}: A = {big_a}, B = {big_b}, A+B = {}",
            big_a + big_b
        );
    }
    if let Some(p) = p {
        let c = power_constants(p)?;
        let membership = power_membership_value(p, c.a, c.b)?;
        report.insert(
            "power_constants".into(),
            serde_json::json!({
                "p": c.p,
                "R_p": c.r,
                "a_p": c.a,
                "b_p": c.b,
                "k_coef": c.k_coef,
                "membership_value": membership,
            }),
        );
        for (k, v) in [
            ("R_p", c.r),
            ("a_p", c.a),
            ("b_p", c.b),
            ("k_coef", c.k_coef),
        ] {
            csv.push(vec![k.into(), format!("{v}")]);
        }
        let _ = writeln!(
            summary,
            "p = {p}: R_p = {}, a_p = {}, b_p = {}, K/S = {}",
            c.r, c.a, c.b, c.k_coef
        );
    }
    Ok((serde_json::Value::Object(report), true, csv, summary))
}

fn run_profile(
    space_path: &str,
    measure_path: Option<&str>,
    orlicz: &str,
    r: f64,
) -> Result<CommandOutput, CliError> {
    validate_ratio(r, None)?;
    let loaded = load_space(space_path, measure_path)?;
    let phi = parse_orlicz(orlicz)?;
    let prof = profile(&loaded.space, &loaded.measure, &phi);
    let k0 = base_level_k0(&phi, r);
    let radii = radii_table(&loaded.space, &loaded.measure, &phi, r)?;
    let mut certs = vec![crate::majorant::check_radii_lipschitz(
        &loaded.space,
        &radii,
    )];
    certs.extend(crate::majorant::radius_sum_check(&prof, &radii, r));
    let passed = certs.iter().all(|c| c.pass);

    let radii_rows: BTreeMap<String, Vec<f64>> = radii
        .rows()
        .iter()
        .map(|(k, row)| (k.to_string(), row.clone()))
        .collect();
    let report = serde_json::json!({
        "source": loaded.source,
        "n": loaded.space.n(),
        "diameter": prof.diameter,
        "phi": phi.name(),
        "R": r,
        "k0": k0,
        "kmax": radii.kmax,
        "sigma": prof.sigma,
        "s_max": prof.s_max,
        "s_bar": prof.s_bar,
        "radii": radii_rows,
        "certificates": certs,
    });
    let mut csv = vec![vec![
        "point".to_string(),
        "sigma".to_string(),
        "radius_sum_slack".to_string(),
    ]];
    for (x, sigma) in prof.sigma.iter().enumerate() {
        csv.push(vec![
            x.to_string(),
            format!("{sigma}"),
            format!("{}", certs[1 + x].slack),
        ]);
    }
    let mut summary = format!(
        "n = {}, diameter = {}, phi = {}, R = {r}\nS = {}, S_bar = {}, k0 = {k0}, kmax = {}\n",
        loaded.space.n(),
        prof.diameter,
        phi.name(),
        prof.s_max,
        prof.s_bar,
        radii.kmax
    );
    let _ = writeln!(
        summary,
        "certificates: {}",
        if passed { "all pass" } else { "VIOLATIONS" }
    );
    Ok((report, passed, csv, summary))
}

fn run_chain(
    space_path: &str,
    measure_path: Option<&str>,
    orlicz: &str,
    r: f64,
    emit_nu: Option<&str>,
) -> Result<CommandOutput, CliError> {
    validate_ratio(r, None)?;
    let loaded = load_space(space_path, measure_path)?;
    let phi = parse_orlicz(orlicz)?;
    let prof = profile(&loaded.space, &loaded.measure, &phi);
    let cm = build_chaining_measure(&loaded.space, &loaded.measure, &phi, r)?;
    let certs = vec![check_total_mass(&cm), check_normalizer_bound(&cm, &prof, r)];
    let passed = certs.iter().all(|c| c.pass);
    let nu_doc = serde_json::to_value(&cm)?;
    if let Some(path) = emit_nu {
        let mut body = serde_json::to_string_pretty(&nu_doc)?;
        body.push('\n');
        fs::write(path, body)?;
    }
    let report = serde_json::json!({
        "source": loaded.source,
        "phi": phi.name(),
        "R": r,
        "nu": nu_doc,
        "certificates": certs,
    });
    let mut csv = vec![vec!["u".to_string(), "v".to_string(), "weight".to_string()]];
    for &(u, v, w) in &cm.pairs {
        csv.push(vec![u.to_string(), v.to_string(), format!("{w}")]);
    }
    let summary = format!(
        "M = {}, levels {}..={}, pairs = {}, total mass = {}\ncertificates: {}\n",
        cm.normalizer,
        cm.k0,
        cm.kmax,
        cm.pairs.len(),
        cm.total_mass(),
        if passed { "all pass" } else { "VIOLATIONS" }
    );
    Ok((report, passed, csv, summary))
}

fn stats_csv(checks: &BTreeMap<String, IneqStats>) -> Vec<Vec<String>> {
    let mut csv = vec![vec![
        "check".to_string(),
        "trials".to_string(),
        "violations".to_string(),
        "min_slack".to_string(),
    ]];
    for (name, stats) in checks {
        csv.push(vec![
            name.clone(),
            stats.instances.to_string(),
            stats.violations.to_string(),
            format!("{}", stats.min_slack),
        ]);
    }
    csv
}

fn stats_summary(title: &str, checks: &BTreeMap<String, IneqStats>, passed: bool) -> String {
    let mut s = format!("{title}: {}\n", if passed { "PASS" } else { "FAIL" });
    for (name, stats) in checks {
        let _ = writeln!(
            s,
            "  {} {name}: instances = {}, violations = {}, min slack = {:.3e}",
            if stats.all_pass() { "PASS" } else { "FAIL" },
            stats.instances,
            stats.violations,
            stats.min_slack
        );
        if !stats.all_pass() {
            if let Some(worst) = &stats.worst_witness {
                let _ = writeln!(
                    s,
                    "    worst: lhs = {}, rhs = {}, witness = {}",
                    worst.lhs,
                    worst.rhs,
                    serde_json::to_string(&worst.witness).unwrap_or_default()
                );
            }
        }
    }
    s
}

fn run_lemmas(fleet_spec: Option<&str>, seed: u64) -> Result<CommandOutput, CliError> {
    let spec = parse_fleet(fleet_spec)?;
    let fleet = build_fleet(&spec, seed);
    let report = run_lemma_suite(&fleet, seed);
    let value = serde_json::to_value(&report)?;
    // One CSV row per (space, check, parameter assignment).
    let mut csv = vec![vec![
        "case".to_string(),
        "check".to_string(),
        "instances".to_string(),
        "violations".to_string(),
        "min_slack".to_string(),
    ]];
    for row in &report.rows {
        csv.push(vec![
            row.case.clone(),
            row.check.clone(),
            row.instances.to_string(),
            row.violations.to_string(),
            format!("{}", row.min_slack),
        ]);
    }
    let summary = stats_summary(
        &format!("lemma suite over {} spaces", report.cases),
        &report.checks,
        report.passed,
    );
    Ok((value, report.passed, csv, summary))
}

#[allow(clippy::too_many_arguments)]
fn run_verify_sobolev(
    space_path: &str,
    measure_path: Option<&str>,
    orlicz: &str,
    r: f64,
    psi: Option<&str>,
    alpha: Option<f64>,
    beta: Option<f64>,
    p: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<CommandOutput, CliError> {
    let loaded = load_space(space_path, measure_path)?;
    if loaded.space.n() < 2 {
        return Err(CliError::Usage(
            "inequality verification needs at least two points".into(),
        ));
    }
    let phi = parse_orlicz(orlicz)?;
    let growth = infer_growth(&phi)?;
    validate_ratio(r, Some(growth))?;
    let (xs, ys) = default_growth_grids(&phi);
    let growth_report = check_growth_condition(&phi, growth, &xs, &ys);
    if !growth_report.pass {
        return Err(CliError::Usage(format!(
            "{} fails the growth condition for (a, b) = ({}, {}): {:?}",
            phi.name(),
            growth.a,
            growth.b,
            growth_report.witness
        )));
    }
    let phi_spec = phi
        .spec()
        .ok_or_else(|| CliError::Usage("orlicz spec must be serializable".into()))?;

    let mut overrides = SuiteOverrides::default();
    let mut psi_report = None;
    if let Some(psi_str) = psi {
        let psi_fn = parse_orlicz(psi_str)?;
        let params = PsiParams {
            psi: psi_fn,
            alpha: alpha.unwrap_or(0.0),
            beta: beta.unwrap_or(1.0),
        };
        let (xs, ys) = default_psi_grids();
        let rep = check_psi_condition(&phi, &params, &xs, &ys);
        if !rep.pass {
            return Err(CliError::Usage(format!(
                "psi condition fails for ({}, alpha = {}, beta = {}) against {}: {:?}",
                params.psi.name(),
                params.alpha,
                params.beta,
                phi.name(),
                rep.witness
            )));
        }
        psi_report = Some(rep);
        overrides.psi = Some(params);
    }
    if let Some(p) = p {
        if !(p.is_finite() && p >= 1.0) {
            return Err(CliError::Usage(format!("--p must be at least 1, got {p}")));
        }
    }
    overrides.power_p = p;

    let dist: Vec<Vec<f64>> = (0..loaded.space.n())
        .map(|i| {
            (0..loaded.space.n())
                .map(|j| loaded.space.dist(i, j))
                .collect()
        })
        .collect();
    let case = FleetCase {
        index: 0,
        tag: format!("cli:{}", loaded.source),
        space: loaded.space,
        measure: loaded.measure,
        embedding: loaded.embedding,
        family: SpaceFamilySpec::Explicit {
            dist,
            measure: None,
        },
        phi_spec,
        growth_a: growth.a,
        growth_b: growth.b,
        ratio: r,
    };
    let config = FnSuiteConfig::new(trials, seed);
    let report = run_function_suite_ext(&[case], &config, &overrides);
    let value = serde_json::json!({
        "source": space_path,
        "phi": phi.name(),
        "R": r,
        "growth_check": growth_report,
        "psi_check": psi_report,
        "suite": serde_json::to_value(&report)?,
    });
    let csv = stats_csv(&report.inequalities);
    let summary = stats_summary(
        &format!("function inequality suite ({trials} functions)"),
        &report.inequalities,
        report.passed,
    );
    Ok((value, report.passed, csv, summary))
}

#[allow(clippy::too_many_arguments)]
fn run_verify_process(
    space_path: &str,
    measure_path: Option<&str>,
    model_spec: &str,
    orlicz: &str,
    r: f64,
    p: Option<f64>,
    subset_frac: f64,
    trials: usize,
    seed: u64,
) -> Result<CommandOutput, CliError> {
    let loaded = load_space(space_path, measure_path)?;
    if loaded.space.n() < 2 {
        return Err(CliError::Usage(
            "process verification needs at least two points".into(),
        ));
    }
    if !(subset_frac > 0.0 && subset_frac <= 1.0) {
        return Err(CliError::Usage(format!(
            "--subset-frac must lie in (0, 1], got {subset_frac}"
        )));
    }
    let phi = parse_orlicz(orlicz)?;
    let growth = infer_growth(&phi)?;
    validate_ratio(r, Some(growth))?;
    let phi_p = phi.power_exponent().ok_or_else(|| {
        CliError::Usage(format!(
            "process verification needs a power-type function for exact scaling, got {}",
            phi.name()
        ))
    })?;
    let spec = parse_model(model_spec, &loaded)?;
    let model = gaussian_from_metric(&loaded.space, &spec)?;
    let space = &loaded.space;
    let measure = &loaded.measure;

    let mut certs: Vec<BoundCertificate> = Vec::new();
    let scale2 = max_admissible_scale(&model, space, 2.0);
    certs.push(verify_young_sup_bound(
        space,
        measure,
        &model.with_scale(scale2),
        2.0,
        trials,
        seeds::mix(seed, &[0]),
    )?);
    let scale_p = max_admissible_scale(&model, space, phi_p);
    let scaled = model.with_scale(scale_p);
    certs.push(verify_sup_range_bound(
        space,
        measure,
        &scaled,
        &phi,
        growth,
        r,
        trials,
        seeds::mix(seed, &[1]),
    )?);
    let psi = PsiParams {
        psi: phi.clone(),
        alpha: 0.0,
        beta: 1.0,
    };
    let (xs, ys) = default_psi_grids();
    let psi_checked = check_psi_condition(&phi, &psi, &xs, &ys).pass;
    certs.push(verify_psi_sup_bound(
        space,
        measure,
        &scaled,
        &phi,
        &psi,
        growth,
        r,
        psi_checked,
        trials,
        seeds::mix(seed, &[2]),
    )?);
    let pnorm_p = p.unwrap_or(if phi_p > 1.0 { phi_p } else { 2.0 });
    if !(pnorm_p.is_finite() && pnorm_p >= 1.0) {
        return Err(CliError::Usage(format!(
            "--p must be at least 1, got {pnorm_p}"
        )));
    }
    let scale_pn = max_admissible_scale(&model, space, pnorm_p);
    certs.push(verify_pnorm_sup_bound(
        space,
        measure,
        &model.with_scale(scale_pn),
        pnorm_p,
        trials,
        seeds::mix(seed, &[3]),
    )?);
    // Net transfer with the identity function on a seeded random subset.
    let subset_len = ((space.n() as f64 * subset_frac).ceil() as usize).clamp(1, space.n());
    let mut rng = seeds::derive_rng(seed, &[4]);
    let mut all: Vec<usize> = (0..space.n()).collect();
    for i in (1..all.len()).rev() {
        let j = rand::Rng::random_range(&mut rng, 0..=i);
        all.swap(i, j);
    }
    let subset = &all[..subset_len];
    let scale1 = max_admissible_scale(&model, space, 1.0);
    certs.push(verify_net_transfer_bound(
        space,
        measure,
        &model.with_scale(scale1),
        &OrliczFn::identity(),
        GrowthParams::new(0.0, 1.0),
        2.0,
        subset,
        trials,
        seeds::mix(seed, &[5]),
    )?);

    let passed = certs.iter().all(|c| c.pass);
    let mut csv = vec![vec![
        "certificate".to_string(),
        "lhs".to_string(),
        "rhs".to_string(),
        "slack".to_string(),
        "pass".to_string(),
    ]];
    for c in &certs {
        csv.push(vec![
            c.name.clone(),
            format!("{}", c.lhs),
            format!("{}", c.rhs),
            format!("{}", c.slack),
            c.pass.to_string(),
        ]);
    }
    let mut summary = format!(
        "process certificates on {} ({} paths each): {}\n",
        space_path,
        trials,
        if passed { "PASS" } else { "FAIL" }
    );
    for c in &certs {
        let _ = writeln!(
            summary,
            "  {} {}: {:.6} <= {:.6}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.lhs,
            c.rhs
        );
        if !c.pass {
            let _ = writeln!(
                summary,
                "    witness = {}",
                serde_json::to_string(&c.witness).unwrap_or_default()
            );
        }
    }
    let report = serde_json::json!({
        "source": space_path,
        "model": spec.tag(),
        "phi": phi.name(),
        "R": r,
        "trials": trials,
        "certificates": certs,
    });
    Ok((report, passed, csv, summary))
}
