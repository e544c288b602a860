use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::model::RunConfig;

/// Which panel columns play which role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub id: String,
    /// Columns balanced across tables.
    pub demographics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterColumn>,
    /// Column holding 1-based pinned tables; empty cells mean unpinned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterColumn {
    pub column: String,
    /// Participants with this value sit only at cluster tables.
    pub value: String,
}

/// Pins one participant for one round. Round and table are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManualOverride {
    pub id: String,
    pub round: usize,
    pub table: usize,
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub columns: ColumnSpec,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub manual_overrides: Vec<ManualOverride>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))
    }

    /// Reads TOML for `.toml` files and JSON otherwise.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn delimiter_byte(&self) -> Result<u8, IoError> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| IoError::Config(format!("delimiter {:?} is not a single ASCII character", self.delimiter)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_toml_agree() {
        let json = r#"{
            "columns": {"id": "id", "demographics": ["age", "gender"], "cluster": {"column": "media", "value": "no"}},
            "run": {"num_tables": 3, "num_cluster_tables": 1, "num_rounds": 5, "rng_seed": 7}
        }"#;
        let toml = r#"
            [columns]
            id = "id"
            demographics = ["age", "gender"]
            cluster = { column = "media", value = "no" }

            [run]
            num_tables = 3
            num_cluster_tables = 1
            num_rounds = 5
            rng_seed = 7
        "#;
        let a = ConfigFile::from_json(json).unwrap();
        let b = ConfigFile::from_toml(toml).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.delimiter, ',');
        assert_eq!(a.run.swap_rounds, 5);
        assert_eq!(a.run.pareto_mix, 0.5);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = r#"{"columns": {"id": "id", "demographics": []}, "run": {"num_tables": 3, "num_rounds": 1}, "extra": 1}"#;
        assert!(matches!(ConfigFile::from_json(json), Err(IoError::Config(_))));
    }

    #[test]
    fn delimiter_must_be_ascii() {
        let mut c = ConfigFile::from_json(r#"{"columns": {"id": "id", "demographics": []}, "run": {"num_tables": 3, "num_rounds": 1}, "delimiter": ";"}"#).unwrap();
        assert_eq!(c.delimiter_byte().unwrap(), b';');
        c.delimiter = 'é';
        assert!(c.delimiter_byte().is_err());
    }
}
