use std::collections::HashMap;
use std::io::{Read, Write};

use super::IoError;
use crate::model::{AllocationPlan, Panel, RoundAllocation, TableLayout};

pub const ALLOCATION_HEADER: [&str; 4] = ["round", "participant_id", "table", "is_cluster_table"];

/// Long-format allocation table: one row per round and participant, ordered
/// by round, then table, then participant id. Rounds and tables are 1-based.
pub fn write_allocations<W: Write>(
    plan: &AllocationPlan,
    panel: &Panel,
    layout: &TableLayout,
    writer: W,
) -> Result<(), IoError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(ALLOCATION_HEADER)?;
    for (k, round) in plan.rounds.iter().enumerate() {
        let mut rows: Vec<(usize, &str)> = (0..panel.len())
            .map(|i| (round.table_of(i), panel.participant(i).id()))
            .collect();
        rows.sort_unstable();
        for (table, id) in rows {
            csv.write_record([
                (k + 1).to_string().as_str(),
                id,
                (table + 1).to_string().as_str(),
                if layout.is_cluster_table(table) { "true" } else { "false" },
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

fn positive(cell: &str, what: &str, line: u64) -> Result<usize, IoError> {
    cell.parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(|| IoError::Parse {
        line: Some(line),
        message: format!("{what} '{cell}' is not a positive integer"),
    })
}

/// Reads a long-format allocation table for `panel`. The cluster flag column
/// is optional and ignored; clustering is checked against the layout later.
pub fn read_allocations<R: Read>(reader: R, panel: &Panel) -> Result<AllocationPlan, IoError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::Schema(format!("allocation file lacks a '{name}' column")))
    };
    let (round_col, id_col, table_col) = (col("round")?, col("participant_id")?, col("table")?);

    let ids: HashMap<&str, usize> = panel
        .participants()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id(), i))
        .collect();
    let mut rounds: Vec<Vec<Option<usize>>> = Vec::new();

    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let round = positive(&record[round_col], "round", line)? - 1;
        let table = positive(&record[table_col], "table", line)? - 1;
        let id = &record[id_col];
        let &i = ids
            .get(id)
            .ok_or_else(|| IoError::Allocation(format!("line {line}: unknown participant '{id}'")))?;
        if rounds.len() <= round {
            rounds.resize_with(round + 1, || vec![None; panel.len()]);
        }
        if rounds[round][i].replace(table).is_some() {
            return Err(IoError::Allocation(format!(
                "line {line}: participant '{id}' appears twice in round {}",
                round + 1
            )));
        }
    }

    let rounds = rounds
        .into_iter()
        .enumerate()
        .map(|(k, seats)| {
            seats
                .into_iter()
                .enumerate()
                .map(|(i, t)| {
                    t.ok_or_else(|| {
                        IoError::Allocation(format!(
                            "round {}: participant '{}' has no table",
                            k + 1,
                            panel.participant(i).id()
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(RoundAllocation)
        })
        .collect::<Result<_, _>>()?;
    Ok(AllocationPlan { rounds })
}
