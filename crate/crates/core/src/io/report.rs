use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::evaluation::{BaselineSummary, RunReport};
use crate::model::RunConfig;

pub const REPORT_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub report: RunReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSummary>,
}

impl ReportDocument {
    pub fn new(config: &RunConfig, report: RunReport) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION.to_owned(),
            seed: config.rng_seed,
            config: config.clone(),
            report,
            baseline: None,
        }
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

pub fn write_report<W: Write>(doc: &ReportDocument, mut writer: W) -> Result<(), IoError> {
    writer.write_all(doc.to_json()?.as_bytes())?;
    writer.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(reader: R) -> Result<ReportDocument, IoError> {
    let doc: ReportDocument = serde_json::from_reader(reader)?;
    if doc.schema_version != REPORT_SCHEMA_VERSION {
        return Err(IoError::Schema(format!(
            "report schema version '{}' is not supported (expected '{REPORT_SCHEMA_VERSION}')",
            doc.schema_version
        )));
    }
    Ok(doc)
}
