//! Monte Carlo sweeps, aggregation and CSV persistence.
//!
//! Realization `k` of a sweep (value-major, then trial) uses seed
//! `cfg.seed ^ k`. All schemes at one realization share the same channel
//! draw, and rows come back in a fixed order whatever the thread count.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::altopt::{run_scheme, upper_bound_from, SchemeId};
use crate::channel::{generate_channels, ChannelSet};
use crate::config::{dbm_to_watts, SystemConfig};
use crate::error::{invalid, Error, Result};
use crate::rates::BeamformingSolution;
use crate::rng::{realization_seed, stream, StreamPurpose};

pub const RAW_HEADER: &str =
    "scheme,sweep_variable,sweep_value,trial,secrecy_rate_bps_hz,iterations,wall_time_ms,seed,status";
pub const SUMMARY_HEADER: &str = "scheme,sweep_variable,sweep_value,mean_rate_bps_hz,std_err,count";

/// Status string of a successful row.
pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepVariable {
    PapDbm,
    N,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::PapDbm => "P_AP_dBm",
            SweepVariable::N => "N",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepVariable::PapDbm => vec![0.0, 5.0, 10.0, 15.0],
            SweepVariable::N => vec![16.0, 32.0, 48.0, 64.0],
        }
    }

    /// `cfg` with the swept quantity set to `value`.
    pub fn apply(self, cfg: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut out = cfg.clone();
        match self {
            SweepVariable::PapDbm => {
                if !value.is_finite() {
                    return Err(invalid(format!("P_AP_dBm value {value} is not finite")));
                }
                out.p_ap = dbm_to_watts(value);
            }
            SweepVariable::N => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(invalid(format!("N value {value} is not a non-negative integer")));
                }
                out.num_elements = value as usize;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    /// Accepts the CSV names as well as the short CLI forms `pap` and `n`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P_AP_dBm" | "pap" | "PAP" => Ok(SweepVariable::PapDbm),
            "N" | "n" => Ok(SweepVariable::N),
            other => Err(invalid(format!("unknown sweep variable '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<SchemeId>,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, values: Vec<f64>, trials: usize, schemes: Vec<SchemeId>) -> Self {
        Self {
            variable,
            values,
            trials,
            schemes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(invalid("sweep needs at least one value"));
        }
        if self.trials == 0 {
            return Err(invalid("sweep needs trials >= 1"));
        }
        if self.schemes.is_empty() {
            return Err(invalid("sweep needs at least one scheme"));
        }
        Ok(())
    }
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self::new(
            SweepVariable::PapDbm,
            SweepVariable::PapDbm.default_values(),
            100,
            SchemeId::ALL.to_vec(),
        )
    }
}

/// One (value, trial, scheme) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: String,
    pub sweep_variable: String,
    pub sweep_value: f64,
    pub trial_index: usize,
    /// `None` when the scheme failed on this realization.
    pub secrecy_rate: Option<f64>,
    pub iterations: usize,
    pub wall_time_ms: f64,
    pub seed_used: u64,
    pub status: String,
    /// Worst SDP certificate of the run. Not persisted to CSV.
    pub sdp_certificate: Option<f64>,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: String,
    pub sweep_variable: String,
    pub sweep_value: f64,
    /// `None` when no trial succeeded.
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock time per row. Off by default so that repeated runs
    /// give byte-identical CSVs.
    pub record_wall_time: bool,
}

fn scheme_stream(id: SchemeId) -> StreamPurpose {
    match id {
        SchemeId::Proposed | SchemeId::UpperBound => StreamPurpose::Proposed,
        SchemeId::MrtWithIrs => StreamPurpose::MrtWithIrs,
        SchemeId::WithoutIrs => StreamPurpose::WithoutIrs,
    }
}

/// Runs all schemes on one realization. The Proposed solution also serves
/// the UpperBound row, since both read the same stream.
fn run_realization(
    cfg: &Result<SystemConfig>,
    spec: &SweepSpec,
    value: f64,
    trial: usize,
    seed: u64,
    opts: RunOptions,
) -> Vec<ResultRow> {
    type Outcome = std::result::Result<BeamformingSolution, String>;
    let row = |id: SchemeId, outcome: Outcome, ms: f64| {
        let (secrecy_rate, iterations, status, sdp_certificate) = match outcome {
            Ok(sol) => (Some(sol.secrecy_rate), sol.iterations, STATUS_OK.to_string(), sol.sdp_certificate),
            Err(msg) => (None, 0, format!("failed: {msg}"), None),
        };
        ResultRow {
            scheme: id.as_str().to_string(),
            sweep_variable: spec.variable.as_str().to_string(),
            sweep_value: value,
            trial_index: trial,
            secrecy_rate,
            iterations,
            wall_time_ms: if opts.record_wall_time { ms } else { 0.0 },
            seed_used: seed,
            status,
            sdp_certificate,
        }
    };
    let timed = |id: SchemeId, cfg: &SystemConfig, ch: &ChannelSet| -> (Outcome, f64) {
        let start = Instant::now();
        let mut rng = stream(seed, scheme_stream(id));
        let out = run_scheme(id, ch, cfg, &mut rng).map_err(|e| e.to_string());
        (out, start.elapsed().as_secs_f64() * 1e3)
    };

    let channels = cfg.as_ref().map_err(|e| e.to_string()).and_then(|cfg| {
        let mut rng = stream(seed, StreamPurpose::Channels);
        generate_channels(cfg, &mut rng).map(|ch| (cfg, ch)).map_err(|e| e.to_string())
    });
    let (cfg, ch) = match channels {
        Ok(v) => v,
        Err(msg) => return spec.schemes.iter().map(|&id| row(id, Err(msg.clone()), 0.0)).collect(),
    };

    let shared = spec
        .schemes
        .iter()
        .any(|id| matches!(id, SchemeId::Proposed | SchemeId::UpperBound))
        .then(|| timed(SchemeId::Proposed, cfg, &ch));
    spec.schemes
        .iter()
        .map(|&id| match (id, &shared) {
            (SchemeId::Proposed, Some((out, ms))) => row(id, out.clone(), *ms),
            (SchemeId::UpperBound, Some((out, ms))) => row(id, out.clone().map(upper_bound_from), *ms),
            _ => {
                let (out, ms) = timed(id, cfg, &ch);
                row(id, out, ms)
            }
        })
        .collect()
}

pub fn run_sweep(cfg: &SystemConfig, spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    run_sweep_with(cfg, spec, RunOptions::default())
}

/// Runs the sweep on the current rayon pool. Rows are ordered by value,
/// then trial, then scheme in `spec.schemes` order.
pub fn run_sweep_with(cfg: &SystemConfig, spec: &SweepSpec, opts: RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    spec.validate()?;
    let configs: Vec<Result<SystemConfig>> = spec
        .values
        .iter()
        .map(|&v| spec.variable.apply(cfg, v).and_then(|c| c.validate().map(|_| c)))
        .collect();
    let total = spec.values.len() * spec.trials;
    let rows: Vec<Vec<ResultRow>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let value_idx = k / spec.trials;
            let trial = k % spec.trials;
            let seed = realization_seed(cfg.seed, k as u64);
            run_realization(&configs[value_idx], spec, spec.values[value_idx], trial, seed, opts)
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Mean and standard error (`sample std / √n`) per (variable, value,
/// scheme) over successful rows, sorted by that key.
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(invalid("cannot aggregate an empty set of rows"));
    }
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.sweep_variable
            .cmp(&b.sweep_variable)
            .then(a.sweep_value.total_cmp(&b.sweep_value))
            .then(a.scheme.cmp(&b.scheme))
    });
    let mut out = Vec::new();
    for group in sorted.chunk_by(|a, b| {
        a.sweep_variable == b.sweep_variable && a.sweep_value.total_cmp(&b.sweep_value).is_eq() && a.scheme == b.scheme
    }) {
        let samples: Vec<f64> = group
            .iter()
            .filter(|r| r.is_ok())
            .filter_map(|r| r.secrecy_rate)
            .collect();
        let (mean, std_err) = mean_and_std_err(&samples);
        out.push(SummaryRow {
            scheme: group[0].scheme.clone(),
            sweep_variable: group[0].sweep_variable.clone(),
            sweep_value: group[0].sweep_value,
            mean,
            std_err,
            count: samples.len(),
        });
    }
    Ok(out)
}

fn mean_and_std_err(samples: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = samples.len();
    if n == 0 {
        return (None, None);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (Some(mean), Some(0.0));
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some((var / n as f64).sqrt()))
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    scheme: String,
    sweep_variable: String,
    sweep_value: f64,
    trial: usize,
    secrecy_rate_bps_hz: Option<f64>,
    iterations: usize,
    wall_time_ms: f64,
    seed: u64,
    status: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRecord {
    scheme: String,
    sweep_variable: String,
    sweep_value: f64,
    mean_rate_bps_hz: Option<f64>,
    std_err: Option<f64>,
    count: usize,
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &str) -> Result<()> {
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != expected {
        return Err(invalid(format!("unexpected CSV header '{header}', expected '{expected}'")));
    }
    Ok(())
}

pub fn write_raw_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RAW_HEADER.split(','))?;
    for r in rows {
        w.serialize(RawRecord {
            scheme: r.scheme.clone(),
            sweep_variable: r.sweep_variable.clone(),
            sweep_value: r.sweep_value,
            trial: r.trial_index,
            secrecy_rate_bps_hz: r.secrecy_rate,
            iterations: r.iterations,
            wall_time_ms: r.wall_time_ms,
            seed: r.seed_used,
            status: r.status.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(&mut reader, RAW_HEADER)?;
    reader
        .deserialize::<RawRecord>()
        .map(|rec| {
            let r = rec?;
            Ok(ResultRow {
                scheme: r.scheme,
                sweep_variable: r.sweep_variable,
                sweep_value: r.sweep_value,
                trial_index: r.trial,
                secrecy_rate: r.secrecy_rate_bps_hz,
                iterations: r.iterations,
                wall_time_ms: r.wall_time_ms,
                seed_used: r.seed,
                status: r.status,
                sdp_certificate: None,
            })
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SUMMARY_HEADER.split(','))?;
    for r in rows {
        w.serialize(SummaryRecord {
            scheme: r.scheme.clone(),
            sweep_variable: r.sweep_variable.clone(),
            sweep_value: r.sweep_value,
            mean_rate_bps_hz: r.mean,
            std_err: r.std_err,
            count: r.count,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(&mut reader, SUMMARY_HEADER)?;
    reader
        .deserialize::<SummaryRecord>()
        .map(|rec| {
            let r = rec?;
            Ok(SummaryRow {
                scheme: r.scheme,
                sweep_variable: r.sweep_variable,
                sweep_value: r.sweep_value,
                mean: r.mean_rate_bps_hz,
                std_err: r.std_err,
                count: r.count,
            })
        })
        .collect()
}

/// The `sweep` object of an experiment file. Missing fields fall back to
/// the harness defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub variable: Option<String>,
    pub values: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub schemes: Option<Vec<String>>,
}

impl SweepFile {
    /// Builds the sweep. When `variable` overrides the file's variable with
    /// a different one, the file's values are dropped in favour of the
    /// defaults for the new variable.
    pub fn to_spec(&self, variable: Option<SweepVariable>) -> Result<SweepSpec> {
        let file_var = self.variable.as_deref().map(SweepVariable::from_str).transpose()?;
        let var = variable.or(file_var).unwrap_or(SweepVariable::PapDbm);
        let values = match (&self.values, file_var.unwrap_or(SweepVariable::PapDbm) == var) {
            (Some(v), true) => v.clone(),
            _ => var.default_values(),
        };
        let schemes = match &self.schemes {
            Some(names) => names.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?,
            None => SchemeId::ALL.to_vec(),
        };
        let spec = SweepSpec::new(var, values, self.trials.unwrap_or(100), schemes);
        spec.validate()?;
        Ok(spec)
    }
}

/// A parsed experiment file: system keys plus an optional `sweep` object.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub system: SystemConfig,
    pub sweep: SweepFile,
}

impl Experiment {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let serde_json::Value::Object(mut map) = value else {
            return Err(Error::Config("expected a JSON object".into()));
        };
        let sweep = match map.remove("sweep") {
            Some(v) => serde_json::from_value(v).map_err(|e| Error::Config(format!("sweep: {e}")))?,
            None => SweepFile::default(),
        };
        let system = SystemConfig::from_json_value(serde_json::Value::Object(map))?;
        sweep.to_spec(None).map_err(|e| Error::Config(format!("sweep: {e}")))?;
        Ok(Self { system, sweep })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}
