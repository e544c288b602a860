//! File formats: delimiter-separated panels, structured run configuration,
//! long-format allocation tables and versioned JSON reports.

mod allocations;
mod config;
mod panel;
mod report;

use thiserror::Error;

use crate::model::ValidationIssue;

pub use allocations::{read_allocations, write_allocations, ALLOCATION_HEADER};
pub use config::{ClusterColumn, ColumnSpec, ConfigFile, ManualOverride};
pub use panel::{load_panel, parse_panel, write_panel, LoadedPanel};
pub use report::{read_report, write_report, ReportDocument, REPORT_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{}parse error: {message}", line_prefix(*.line))]
    Parse { line: Option<u64>, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("line {line}: duplicate participant id '{id}'")]
    DuplicateId { id: String, line: u64 },

    #[error("panel is invalid: {}", join_errors(.issues))]
    Invalid { issues: Vec<ValidationIssue> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("allocation file error: {0}")]
    Allocation(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn line_prefix(line: Option<u64>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

fn join_errors(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .filter(|i| i.is_error())
        .map(|i| i.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<csv::Error> for IoError {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line());
        match err.into_kind() {
            csv::ErrorKind::Io(e) => IoError::Io(e),
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => IoError::Parse {
                line,
                message: format!("expected {expected_len} fields, found {len}"),
            },
            other => IoError::Parse {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}
