//! Experiment files and CSV results.
//!
//! An experiment file is TOML: the run configuration as flat keys, the
//! channel as a `[channel]` table, and optional sweep keys.
//!
//! ```toml
//! scheme = "windowed"
//! schemes = ["windowed", "selective", "repetition", "blind"]
//! p_feedback = 0.25
//! b = 2
//! delta_max = 16
//! seed = 1
//! axis = "p_success"
//! values = [0.6, 0.7, 0.8, 0.9]
//! replicates = 10
//! output = "fig3a.csv"
//!
//! [channel]
//! kind = "bernoulli"
//! p_success = 0.9
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, sweep_configs, RunConfig, RunMetrics};
use crate::error::{Error, Result};
use crate::schemes::SchemeKind;

pub const CSV_HEADER: [&str; 16] = [
    "scheme",
    "channel",
    "axis_value",
    "replicate",
    "seed",
    "b",
    "delta_max",
    "p_feedback",
    "generated",
    "failures",
    "dfr",
    "packets_sent",
    "symbols_combined_total",
    "xor_ops_total",
    "avg_xors_per_packet",
    "intervals_run",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFile {
    #[serde(flatten)]
    pub base: RunConfig,
    /// Runs every listed scheme instead of `base.scheme`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<SchemeKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default = "one")]
    pub replicates: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn one() -> u64 {
    1
}

/// A fully resolved run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub axis_value: Option<f64>,
    pub replicate: u64,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: Option<f64>,
    pub replicate: u64,
    pub metrics: RunMetrics,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<ExperimentFile> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<ExperimentFile> {
        let text = std::fs::read_to_string(path)?;
        ExperimentFile::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn schemes(&self) -> Vec<SchemeKind> {
        self.schemes.clone().unwrap_or_else(|| vec![self.base.scheme])
    }

    /// Runs of the base configuration: each scheme, each replicate.
    pub fn plan_single(&self) -> Result<Vec<PlannedRun>> {
        self.check_common()?;
        let mut out = Vec::new();
        for scheme in self.schemes() {
            for r in 0..self.replicates {
                let config = RunConfig { scheme, seed: self.base.seed.wrapping_add(r), ..self.base.clone() };
                config.validate()?;
                out.push(PlannedRun { axis_value: None, replicate: r, config });
            }
        }
        Ok(out)
    }

    /// Runs of the sweep: each scheme, each axis value, each replicate.
    pub fn plan_sweep(&self) -> Result<Vec<PlannedRun>> {
        self.check_common()?;
        let axis = self
            .axis
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("sweep needs an `axis` and `values`".into()))?;
        let mut out = Vec::new();
        for scheme in self.schemes() {
            let base = RunConfig { scheme, ..self.base.clone() };
            for (v, r, config) in sweep_configs(&base, axis, &self.values, self.replicates)? {
                out.push(PlannedRun { axis_value: Some(v), replicate: r, config });
            }
        }
        Ok(out)
    }

    /// Checks everything `run` and `sweep` would check, without running.
    pub fn validate(&self) -> Result<()> {
        self.plan_single()?;
        if self.axis.is_some() {
            self.plan_sweep()?;
        }
        Ok(())
    }

    fn check_common(&self) -> Result<()> {
        self.base.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if matches!(&self.schemes, Some(s) if s.is_empty()) {
            return Err(Error::InvalidConfig("`schemes` must not be empty".into()));
        }
        match (&self.axis, self.values.is_empty()) {
            (Some(_), true) => Err(Error::InvalidConfig("`axis` given without `values`".into())),
            (None, false) => Err(Error::InvalidConfig("`values` given without `axis`".into())),
            _ => Ok(()),
        }
    }
}

/// Executes planned runs in parallel; rows keep the plan order.
pub fn execute(plan: &[PlannedRun]) -> Result<Vec<ResultRow>> {
    plan.par_iter()
        .map(|p| Ok(ResultRow { axis_value: p.axis_value, replicate: p.replicate, metrics: run(&p.config)? }))
        .collect()
}

fn record(row: &ResultRow) -> Vec<String> {
    let m = &row.metrics;
    vec![
        m.scheme.to_string(),
        m.channel.clone(),
        row.axis_value.map(|v| v.to_string()).unwrap_or_default(),
        row.replicate.to_string(),
        m.seed.to_string(),
        m.b.to_string(),
        m.delta_max.to_string(),
        m.p_feedback.to_string(),
        m.generated.to_string(),
        m.failures.to_string(),
        m.dfr.to_string(),
        m.packets_sent.to_string(),
        m.symbols_combined_total.to_string(),
        m.xor_ops_total.to_string(),
        m.avg_xors_per_packet.to_string(),
        m.intervals_run.to_string(),
    ]
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no results to write".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_results(rows, std::io::BufWriter::new(file))
}
