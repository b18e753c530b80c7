//! Command-line front end: config loading, subcommand dispatch and output
//! formatting.
//!
//! Exit status: 0 on success, 1 on invalid input (arguments, config values,
//! over-subscribed cells, malformed matrices), 2 on runtime failures such as
//! unwritable outputs.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::allocator::AllocError;
use crate::concavity_audit::{audit_concavity, AuditSpec};
use crate::lapjv::{solve_rectangular, CostMatrix};
use crate::montecarlo::{run_sweep, run_trial, SiMode, SweepError, SweepResult, SweepSpec};
use crate::scenario::ScenarioConfig;

pub const CSV_HEADER: &str =
    "pmax_dbm,si_mode,k1,k2,trials,mean_sum_rate_bps_hz,ci95_halfwidth,outage_fraction";

/// Significant digits of floats in CSV output.
pub const CSV_SIG_DIGITS: usize = 9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config(_) | SweepError::Spec { .. } | SweepError::EmptySample => {
                CliError::Validation(e.to_string())
            }
            SweepError::Alloc {
                source: AllocError::OverSubscribed { .. },
                ..
            } => CliError::Validation(e.to_string()),
            SweepError::Alloc { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fdcoop",
    version,
    about = "Full-duplex cooperative OFDMA uplink allocation"
)]
pub struct CliInvocation {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo sweep, written as CSV.
    Sweep(ConfigArgs),
    /// Allocation for one channel realization, written as JSON.
    Trial {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        trial_index: u64,
    },
    /// Concavity audit of the rate objectives, written as JSON.
    Audit {
        #[arg(long, default_value_t = AuditSpec::default().points)]
        points: usize,
        #[arg(long, default_value_t = AuditSpec::default().seed)]
        seed: u64,
        /// Output file, `-` for standard output.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Solve the linear assignment problem for a matrix file.
    Lap {
        /// First line `rows cols`, then row-major whitespace-separated costs.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config; either a flat scenario object or `{"scenario": .., "sweep": ..}`.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Override a scalar config value, e.g. `seed=7` or `sweep.trials_per_point=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepSection {
    pmax_user_dbm_values: Option<Vec<f64>>,
    si_modes: Option<Vec<SiMode>>,
    trials_per_point: Option<usize>,
    group_sizes: Option<Vec<(usize, usize)>>,
}

/// Parsed config file: scenario plus the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub scenario: ScenarioConfig,
    pub sweep: SweepSpec,
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn is_sectioned(doc: &Map<String, Value>) -> bool {
    doc.contains_key("scenario") || doc.contains_key("sweep")
}

fn parse_override(raw: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| validation(format!("override `{raw}` is not KEY=VALUE")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(validation(format!("override key `{key}` is malformed")));
    }
    let value = value.trim();
    let parsed =
        serde_json::from_str::<Value>(value).unwrap_or_else(|_| Value::String(value.to_string()));
    if parsed.is_array() || parsed.is_object() {
        return Err(validation(format!(
            "override `{key}`: lists and objects can only be set in the config file"
        )));
    }
    Ok((path, parsed))
}

fn apply_override(
    doc: &mut Map<String, Value>,
    mut path: Vec<String>,
    value: Value,
) -> Result<(), CliError> {
    if path.len() == 1 {
        path.insert(0, "scenario".to_string());
    }
    let dotted = path.join(".");
    let leaf = path.pop().expect("non-empty path");
    let mut node = doc;
    for part in &path {
        let entry = node
            .entry(part.clone())
            .or_insert_with(|| Value::Object(Map::new()));
        node = entry
            .as_object_mut()
            .ok_or_else(|| validation(format!("override `{dotted}`: `{part}` is not a section")))?;
    }
    node.insert(leaf, value);
    Ok(())
}

fn deserialize_field<T: serde::de::DeserializeOwned>(
    section: &str,
    value: Value,
) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            section.to_string()
        } else {
            format!("{section}.{path}")
        };
        validation(format!("config field `{field}`: {}", e.inner()))
    })
}

/// Parses a config document (flat or sectioned) and applies overrides.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| validation(format!("malformed config: {e}")))?;
    let Value::Object(doc) = doc else {
        return Err(validation("config must be a JSON object"));
    };
    let mut doc = if is_sectioned(&doc) {
        doc
    } else {
        Map::from_iter([("scenario".to_string(), Value::Object(doc))])
    };
    for raw in overrides {
        let (path, value) = parse_override(raw)?;
        apply_override(&mut doc, path, value)?;
    }
    if let Some(key) = doc.keys().find(|k| *k != "scenario" && *k != "sweep") {
        return Err(validation(format!("unknown config section `{key}`")));
    }
    let scenario: ScenarioConfig = deserialize_field(
        "scenario",
        doc.remove("scenario").unwrap_or(Value::Object(Map::new())),
    )?;
    let section: SweepSection = deserialize_field(
        "sweep",
        doc.remove("sweep").unwrap_or(Value::Object(Map::new())),
    )?;
    scenario.validate().map_err(|e| validation(e.to_string()))?;

    let defaults = SweepSpec::around(scenario.clone());
    let sweep = SweepSpec {
        pmax_user_dbm_values: section
            .pmax_user_dbm_values
            .unwrap_or(defaults.pmax_user_dbm_values),
        si_modes: section.si_modes.unwrap_or(defaults.si_modes),
        trials_per_point: section
            .trials_per_point
            .unwrap_or(defaults.trials_per_point),
        group_sizes: section.group_sizes.unwrap_or(defaults.group_sizes),
        base: scenario.clone(),
    };
    sweep.validate()?;
    Ok(LoadedConfig { scenario, sweep })
}

fn read_config(path: &Path, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

/// Reads the scenario part of a config file and applies overrides.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    read_config(path, overrides).map(|c| c.scenario)
}

/// `%g`-style formatting with `digits` significant digits.
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!(
            "{}e{}{:02}",
            trim_fraction(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{value:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let f = |v: f64| format_sig(v, CSV_SIG_DIGITS);
    for r in &result.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            f(r.pmax_dbm),
            r.si_mode.as_str(),
            r.k1,
            r.k2,
            r.trials,
            f(r.mean_sum_rate),
            f(r.ci95_halfwidth),
            f(r.outage_fraction)
        )
        .expect("writing to a String");
    }
    out
}

/// Parses the matrix file format: `rows cols` followed by row-major costs.
pub fn parse_matrix(text: &str) -> Result<CostMatrix<f64>, CliError> {
    let mut tokens = text.split_whitespace();
    let mut dim = |name: &str| -> Result<usize, CliError> {
        tokens
            .next()
            .ok_or_else(|| validation(format!("matrix file is missing the {name} count")))?
            .parse()
            .map_err(|e| validation(format!("matrix {name} count: {e}")))
    };
    let rows = dim("row")?;
    let cols = dim("column")?;
    let data = tokens
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>()
                .map_err(|e| validation(format!("matrix entry {i}: `{t}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    CostMatrix::new(rows, cols, data).map_err(|e| validation(e.to_string()))
}

pub fn lap_report(matrix: &CostMatrix<f64>) -> Result<String, CliError> {
    let assignment = solve_rectangular(matrix).map_err(|e| validation(e.to_string()))?;
    let mut out = String::new();
    for (row, col) in assignment.pairs() {
        writeln!(out, "{row} {col} {}", matrix.get(row, col)).expect("writing to a String");
    }
    writeln!(out, "total {}", assignment.total_cost).expect("writing to a String");
    Ok(out)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn emit(out: &Path, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    if out.as_os_str() == "-" {
        stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::Runtime(format!("writing output: {e}")))
    } else {
        fs::write(out, text)
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", out.display())))
    }
}

fn dispatch(invocation: CliInvocation, stdout: &mut dyn Write) -> Result<(), CliError> {
    match invocation.command {
        Command::Sweep(args) => {
            let loaded = read_config(&args.config, &args.overrides)?;
            let result = run_sweep(&loaded.sweep)?;
            emit(&args.out, &sweep_csv(&result), stdout)
        }
        Command::Trial {
            config,
            trial_index,
        } => {
            let scenario = load_config(&config.config, &config.overrides)?;
            let report = run_trial::<f64>(&scenario, trial_index)?;
            emit(&config.out, &to_json(&report)?, stdout)
        }
        Command::Audit { points, seed, out } => {
            if points == 0 {
                return Err(validation("`points` must be at least 1"));
            }
            let spec = AuditSpec {
                points,
                seed,
                ..AuditSpec::default()
            };
            let report = audit_concavity(&spec).map_err(|e| CliError::Runtime(e.to_string()))?;
            emit(&out, &to_json(&report)?, stdout)
        }
        Command::Lap { matrix, out } => {
            let text = fs::read_to_string(&matrix)
                .map_err(|e| validation(format!("cannot read matrix {}: {e}", matrix.display())))?;
            emit(&out, &lap_report(&parse_matrix(&text)?)?, stdout)
        }
    }
}

/// Runs a parsed invocation, writing `-` outputs to `stdout` and errors to
/// standard error. Returns the process exit status.
pub fn run_cli(invocation: CliInvocation, stdout: &mut dyn Write) -> i32 {
    match dispatch(invocation, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (program name first) and runs them.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match CliInvocation::try_parse_from(args) {
        Ok(invocation) => run_cli(invocation, &mut io::stdout().lock()),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
