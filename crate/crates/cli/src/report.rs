//! Run reports.
//!
//! `report.json` (schema version [`SCHEMA_VERSION`]) holds:
//!
//! * `schema_version`, `tool_version`, `scenario`;
//! * `config`: the configuration as executed, after command-line overrides;
//! * `seed` and `seeds`: the master seed and the child seed of every consumer;
//! * `status` (`ok` or `error`) and `diagnostics` (`class`, `message`) on failure;
//! * `results`: scenario-specific JSON;
//! * `artifacts`: CSV files written, relative to the output directory;
//! * `wall_clock_seconds`.
//!
//! Everything except `wall_clock_seconds` is reproducible from the config and
//! does not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{Scenario, ScenarioConfig};
use crate::output::Table;
use crate::{scenarios, HarnessError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostic {
    pub class: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario: Scenario,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub status: RunStatus,
    pub diagnostics: Option<Diagnostic>,
    pub results: serde_json::Value,
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let report: Self = serde_json::from_str(text)
            .map_err(|e| HarnessError::Validation(format!("report: {e}")))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Validation(format!(
                "unsupported report schema version {}",
                report.schema_version
            )));
        }
        report.config.validate()?;
        Ok(report)
    }
}

/// Output of a scenario before anything is written.
pub(crate) struct Outcome {
    pub results: serde_json::Value,
    pub tables: Vec<Table>,
}

fn write_report(dir: &Path, report: &RunReport) -> Result<(), HarnessError> {
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| HarnessError::Io(format!("serializing report: {e}")))?;
    fs::write(&path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

/// Execute `config` and write its report and artifacts.
///
/// Validation errors are reported before anything is written. Failures
/// after that still produce a `report.json` with diagnostics; the error is
/// returned as well so callers can pick the exit code.
pub fn run(config: &ScenarioConfig) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    config.validate()?;
    let prepared = scenarios::prepare(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;

    let execute = || scenarios::execute(config, &prepared);
    let outcome = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Io(format!("thread pool: {e}")))?
            .install(execute),
        None => execute(),
    };

    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.scenario,
        config: config.clone(),
        seed: config.seed,
        seeds: scenarios::seeds(config),
        status: RunStatus::Ok,
        diagnostics: None,
        results: serde_json::Value::Null,
        artifacts: Vec::new(),
        wall_clock_seconds: 0.0,
    };
    let result = outcome.and_then(|o| {
        for t in &o.tables {
            t.write(dir)?;
        }
        report.artifacts = o.tables.iter().map(|t| t.name.clone()).collect();
        report.results = o.results;
        Ok(())
    });
    if let Err(e) = &result {
        log::error!("{} failed: {e}", config.scenario.name());
        report.status = RunStatus::Error;
        report.diagnostics = Some(Diagnostic {
            class: e.class().to_string(),
            message: e.to_string(),
        });
    }
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    write_report(dir, &report)?;
    result.map(|_| report)
}
