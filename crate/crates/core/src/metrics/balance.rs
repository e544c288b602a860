//! Demographic balance: per-table proportions, L1 distances from the panel
//! distribution, and the sign-valued Pareto changes of a proposed swap.

use crate::model::{AllocationPlan, Panel, RoundAllocation};

/// Value counts for demographic `d` among the occupants of `table`, and the
/// number of occupants.
pub fn table_counts(round: &RoundAllocation, panel: &Panel, table: usize, d: usize) -> (Vec<usize>, usize) {
    let mut counts = vec![0; panel.demographics()[d].values.len()];
    let mut size = 0;
    for (i, &j) in round.as_slice().iter().enumerate() {
        if j == table {
            counts[panel.code(i, d)] += 1;
            size += 1;
        }
    }
    (counts, size)
}

/// Fraction of `table`'s occupants holding `value` of demographic `d`.
pub fn table_proportion(round: &RoundAllocation, panel: &Panel, table: usize, d: usize, value: usize) -> f64 {
    let (counts, size) = table_counts(round, panel, table, d);
    if size == 0 {
        return 0.0;
    }
    counts[value] as f64 / size as f64
}

/// L1 distance between the table's value distribution for `d` and the panel's.
pub fn table_distance(round: &RoundAllocation, panel: &Panel, table: usize, d: usize) -> f64 {
    let (counts, size) = table_counts(round, panel, table, d);
    if size == 0 {
        return 0.0;
    }
    counts
        .iter()
        .enumerate()
        .map(|(v, &c)| (c as f64 / size as f64 - panel.panel_proportion(d, v)).abs())
        .sum()
}

/// Mean of `table_distance` over every occupied table, every demographic and
/// every round.
pub fn mean_distance(plan: &AllocationPlan, panel: &Panel) -> f64 {
    let mut total = 0.0;
    let mut terms = 0usize;
    for round in &plan.rounds {
        for (table, members) in round.members(round.occupied_tables()).iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            for d in 0..panel.demographics().len() {
                total += table_distance(round, panel, table, d);
                terms += 1;
            }
        }
    }
    if terms == 0 {
        0.0
    } else {
        total / terms as f64
    }
}

/// Table distance scaled by `table_size * panel_size`, so that comparisons
/// between tables of the same size are exact.
pub fn scaled_distance(counts: &[usize], table_size: usize, totals: &[usize], panel_size: usize) -> u64 {
    counts
        .iter()
        .zip(totals)
        .map(|(&c, &t)| scaled_term(c, table_size, t, panel_size))
        .sum()
}

fn scaled_term(count: usize, table_size: usize, total: usize, panel_size: usize) -> u64 {
    (count * panel_size).abs_diff(table_size * total) as u64
}

/// Sign of the distance improvement on a table when one occupant holding
/// `out_code` leaves and a newcomer holding `in_code` takes the seat.
pub(crate) fn change_on_table(
    counts: &[usize],
    table_size: usize,
    totals: &[usize],
    panel_size: usize,
    out_code: usize,
    in_code: usize,
) -> i32 {
    if out_code == in_code {
        return 0;
    }
    let term = |v: usize, c: usize| scaled_term(c, table_size, totals[v], panel_size) as i64;
    let before = term(out_code, counts[out_code]) + term(in_code, counts[in_code]);
    let after = term(out_code, counts[out_code] - 1) + term(in_code, counts[in_code] + 1);
    (before - after).signum() as i32
}

/// Which of the two swapped participants leaves `table`, and which arrives.
fn leaving_and_arriving(round: &RoundAllocation, i: usize, i_prime: usize, table: usize) -> Option<(usize, usize)> {
    if round.table_of(i) == table {
        Some((i, i_prime))
    } else if round.table_of(i_prime) == table {
        Some((i_prime, i))
    } else {
        None
    }
}

/// Sign of the change in `table`'s distance for demographic `d` if `i` and
/// `i_prime` traded seats: +1 improves, 0 unchanged, -1 worsens.
///
/// `table` must seat one of the two participants; otherwise the swap leaves
/// it untouched and the change is 0.
pub fn pareto_change(
    round: &RoundAllocation,
    panel: &Panel,
    i: usize,
    i_prime: usize,
    table: usize,
    d: usize,
) -> i32 {
    let Some((leaving, arriving)) = leaving_and_arriving(round, i, i_prime, table) else {
        return 0;
    };
    let (counts, size) = table_counts(round, panel, table, d);
    change_on_table(
        &counts,
        size,
        panel.value_totals(d),
        panel.len(),
        panel.code(leaving, d),
        panel.code(arriving, d),
    )
}

/// Aggregate Pareto score on one table: -1 if any demographic worsens,
/// otherwise the sum of per-demographic changes.
pub fn pareto_score(round: &RoundAllocation, panel: &Panel, i: usize, i_prime: usize, table: usize) -> i32 {
    let changes: Vec<i32> = (0..panel.demographics().len())
        .map(|d| pareto_change(round, panel, i, i_prime, table, d))
        .collect();
    if changes.contains(&-1) {
        -1
    } else {
        changes.iter().sum()
    }
}
