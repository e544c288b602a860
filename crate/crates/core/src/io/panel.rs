use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use super::{ColumnSpec, ConfigFile, IoError, ManualOverride};
use crate::model::{ClusterSpec, Demographic, Panel, Participant, RawPanel, ValidationIssue};

/// A validated panel plus any warnings raised while loading it.
#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: Panel,
    pub warnings: Vec<ValidationIssue>,
}

/// Reads a panel file using the column roles, delimiter and overrides of
/// `config`.
pub fn load_panel<R: Read>(reader: R, config: &ConfigFile) -> Result<LoadedPanel, IoError> {
    parse_panel(
        reader,
        &config.columns,
        config.delimiter_byte()?,
        &config.manual_overrides,
        Some(config.run.num_tables),
    )
}

fn column_index(headers: &[String], name: &str, missing: &mut Vec<String>) -> usize {
    headers.iter().position(|h| h == name).unwrap_or_else(|| {
        missing.push(name.to_owned());
        usize::MAX
    })
}

/// Reads a panel from delimiter-separated text.
///
/// Demographic value sets are ordered by first appearance in the file.
pub fn parse_panel<R: Read>(
    reader: R,
    columns: &ColumnSpec,
    delimiter: u8,
    overrides: &[ManualOverride],
    num_tables: Option<usize>,
) -> Result<LoadedPanel, IoError> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();

    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(IoError::Schema(format!("header '{h}' appears more than once")));
        }
    }

    let mut missing = Vec::new();
    let id_col = column_index(&headers, &columns.id, &mut missing);
    let demo_cols: Vec<usize> = columns
        .demographics
        .iter()
        .map(|d| column_index(&headers, d, &mut missing))
        .collect();
    let cluster_col = columns
        .cluster
        .as_ref()
        .map(|c| column_index(&headers, &c.column, &mut missing));
    let manual_col = columns.manual.as_ref().map(|m| column_index(&headers, m, &mut missing));
    if !missing.is_empty() {
        return Err(IoError::Schema(format!("missing column(s): {}", missing.join(", "))));
    }

    let mut values: Vec<Vec<String>> = vec![Vec::new(); columns.demographics.len()];
    let mut participants = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();

    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[id_col].to_owned();
        if ids.insert(id.clone(), participants.len()).is_some() {
            return Err(IoError::DuplicateId { id, line });
        }
        let mut p = Participant::new(id);
        for (d, &col) in demo_cols.iter().enumerate() {
            let cell = &record[col];
            if cell.is_empty() {
                continue;
            }
            if !values[d].iter().any(|v| v == cell) {
                values[d].push(cell.to_owned());
            }
            p.set_attribute(&columns.demographics[d], cell);
        }
        if let (Some(col), Some(cluster)) = (cluster_col, &columns.cluster) {
            p.set_attribute(&cluster.column, &record[col]);
        }
        if let Some(col) = manual_col {
            let cell = &record[col];
            if !cell.is_empty() {
                let table = cell.parse::<usize>().ok().filter(|&t| t >= 1).ok_or_else(|| IoError::Parse {
                    line: Some(line),
                    message: format!("manual table '{cell}' is not a table number (1-based)"),
                })?;
                p.set_manual_table(Some(table - 1));
            }
        }
        participants.push(p);
    }

    for o in overrides {
        let &idx = ids
            .get(&o.id)
            .ok_or_else(|| IoError::Config(format!("manual override for unknown participant '{}'", o.id)))?;
        if o.round == 0 || o.table == 0 {
            return Err(IoError::Config(format!(
                "manual override for '{}' must use 1-based round and table",
                o.id
            )));
        }
        participants[idx].set_manual_override(o.round - 1, o.table - 1);
    }

    let raw = RawPanel {
        participants,
        demographics: columns
            .demographics
            .iter()
            .zip(values)
            .map(|(name, values)| Demographic {
                name: name.clone(),
                values,
            })
            .collect(),
        cluster: columns.cluster.as_ref().map(|c| ClusterSpec {
            demographic: c.column.clone(),
            value: c.value.clone(),
        }),
    };

    let issues = raw.validate(num_tables);
    if issues.iter().any(ValidationIssue::is_error) {
        return Err(IoError::Invalid { issues });
    }
    let panel = Panel::new(raw).map_err(|e| IoError::Invalid { issues: e.issues })?;
    Ok(LoadedPanel { panel, warnings: issues })
}

/// Writes `panel` back out in the layout described by `columns`. Per-round
/// overrides live in the configuration and are not written.
pub fn write_panel<W: Write>(panel: &Panel, columns: &ColumnSpec, delimiter: u8, writer: W) -> Result<(), IoError> {
    let mut csv = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);

    let mut header: Vec<&str> = vec![&columns.id];
    header.extend(columns.demographics.iter().map(String::as_str));
    let cluster_extra = columns
        .cluster
        .as_ref()
        .filter(|c| !columns.demographics.contains(&c.column))
        .map(|c| c.column.as_str());
    header.extend(cluster_extra);
    header.extend(columns.manual.as_deref());
    csv.write_record(&header)?;

    for p in panel.participants() {
        let mut row: Vec<String> = vec![p.id().to_owned()];
        row.extend(
            columns
                .demographics
                .iter()
                .map(|d| p.attribute(d).unwrap_or_default().to_owned()),
        );
        if let Some(col) = cluster_extra {
            row.push(p.attribute(col).unwrap_or_default().to_owned());
        }
        if columns.manual.is_some() {
            row.push(p.manual_table().map(|t| (t + 1).to_string()).unwrap_or_default());
        }
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}
