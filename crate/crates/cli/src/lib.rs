//! Scenario runner behind the `symplanar` command.
//!
//! A run takes one [`ScenarioConfig`], executes it with the library, and
//! writes `report.json` plus CSV artifacts to the output directory. See
//! [`config`] for the configuration schema and [`report`] for the report.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod report;
mod scenarios;

pub use config::{BodySpec, Params, Scenario, ScenarioConfig, TransformSpec};
pub use report::{run, Diagnostic, RunReport, RunStatus, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    /// Process exit code: 2 for validation, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) => 1,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            HarnessError::Validation(_) => "validation",
            HarnessError::Numerical(_) => "numerical",
            HarnessError::Io(_) => "io",
        }
    }
}

impl From<symplanar::Error> for HarnessError {
    fn from(e: symplanar::Error) -> Self {
        use symplanar::Error as E;
        match e {
            E::NotConverged { .. }
            | E::NoClosedCharacteristic
            | E::OpenOrbit
            | E::NotElliptic
            | E::DegenerateCurve(_)
            | E::Unsupported(_) => HarnessError::Numerical(e.to_string()),
            _ => HarnessError::Validation(e.to_string()),
        }
    }
}
