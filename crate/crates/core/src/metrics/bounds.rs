//! Theoretical meeting bounds for a table layout.

use serde::{Deserialize, Serialize};

use crate::model::TableLayout;

fn pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Pairs co-seated in any single round under `layout`.
pub fn meetings_per_round(layout: &TableLayout) -> u64 {
    layout.sizes.iter().map(|&s| pairs(s)).sum()
}

/// Repeat meetings forced when each table's members are spread as evenly as
/// possible over the next round's tables, ignoring destination capacities.
///
/// This is a lower bound on `min_repeats_between_rounds`, and equal to it for
/// equal-sized tables.
pub fn pigeonhole_repeats(layout: &TableLayout) -> u64 {
    let tables = layout.num_tables();
    layout
        .sizes
        .iter()
        .map(|&n| {
            let (q, r) = (n / tables, n % tables);
            r as u64 * pairs(q + 1) + (tables - r) as u64 * pairs(q)
        })
        .sum()
}

/// Minimum number of pairs that must meet again between two consecutive
/// rounds seated with `layout`.
///
/// Any re-seating is summarised by the matrix `x[s][t]` of participants moving
/// from table `s` to table `t`, whose row and column sums are the table sizes,
/// and it repeats `sum C(x[s][t], 2)` pairs. The cost is separable and convex,
/// so unit-by-unit successive shortest paths on the transport network yield
/// the exact minimum, including layouts whose destination capacities bind.
pub fn min_repeats_between_rounds(layout: &TableLayout) -> u64 {
    let tables = layout.num_tables();
    let sizes = &layout.sizes;
    let total: usize = sizes.iter().sum();
    if tables == 0 || total == 0 {
        return 0;
    }

    // Nodes: source, tables as senders, tables as receivers, sink.
    let source = 0;
    let sender = |s: usize| 1 + s;
    let receiver = |t: usize| 1 + tables + t;
    let sink = 1 + 2 * tables;
    let nodes = sink + 1;

    let mut flow = vec![vec![0usize; tables]; tables];
    let mut sent = vec![0usize; tables];
    let mut received = vec![0usize; tables];
    let mut cost = 0u64;

    for _ in 0..total {
        // Residual arcs as (from, to, cost). The next unit on (s, t) costs
        // x[s][t] new repeats; withdrawing one refunds x[s][t] - 1.
        let mut arcs: Vec<(usize, usize, i64)> = Vec::with_capacity(2 * tables * tables + 4 * tables);
        for s in 0..tables {
            if sent[s] < sizes[s] {
                arcs.push((source, sender(s), 0));
            }
            if sent[s] > 0 {
                arcs.push((sender(s), source, 0));
            }
            if received[s] < sizes[s] {
                arcs.push((receiver(s), sink, 0));
            }
            if received[s] > 0 {
                arcs.push((sink, receiver(s), 0));
            }
            for t in 0..tables {
                let x = flow[s][t];
                arcs.push((sender(s), receiver(t), x as i64));
                if x > 0 {
                    arcs.push((receiver(t), sender(s), -(x as i64 - 1)));
                }
            }
        }

        let mut dist = vec![i64::MAX; nodes];
        let mut via: Vec<Option<(usize, usize)>> = vec![None; nodes];
        dist[source] = 0;
        for _ in 0..nodes {
            let mut changed = false;
            for &(u, v, c) in &arcs {
                if dist[u] != i64::MAX && dist[u] + c < dist[v] {
                    dist[v] = dist[u] + c;
                    via[v] = Some((u, v));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        debug_assert!(dist[sink] != i64::MAX, "transport network must stay feasible");

        let mut node = sink;
        while node != source {
            let (u, v) = via[node].expect("path to sink");
            match (u, v) {
                (u, v) if u == source => sent[v - 1] += 1,
                (u, v) if v == source => sent[u - 1] -= 1,
                (u, v) if v == sink => received[u - 1 - tables] += 1,
                (u, v) if u == sink => received[v - 1 - tables] -= 1,
                (u, v) if u <= tables => flow[u - 1][v - 1 - tables] += 1,
                (u, v) => flow[v - 1][u - 1 - tables] -= 1,
            }
            node = u;
        }
        cost = cost.wrapping_add_signed(dist[sink]);
    }

    debug_assert_eq!(cost, flow.iter().flatten().map(|&x| pairs(x)).sum::<u64>());
    cost
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub pairs_total: u64,
    pub meetings_per_round: u64,
    pub min_repeats: u64,
    pub min_unmet_pairs: u64,
    pub max_first_meetings: u64,
}

/// Best achievable unmet-pair count after `num_rounds` rounds, assuming every
/// round after the first repeats exactly `min_repeats` pairs.
pub fn bounds(layout: &TableLayout, num_rounds: usize) -> BoundsReport {
    let pairs_total = pairs(layout.total_seats());
    let per_round = meetings_per_round(layout);
    let min_repeats = min_repeats_between_rounds(layout);
    let reachable = if num_rounds == 0 {
        0
    } else {
        per_round + (num_rounds as u64 - 1) * (per_round - min_repeats)
    };
    let min_unmet_pairs = pairs_total.saturating_sub(reachable);
    BoundsReport {
        pairs_total,
        meetings_per_round: per_round,
        min_repeats,
        min_unmet_pairs,
        max_first_meetings: pairs_total - min_unmet_pairs,
    }
}

/// Share of all pairs left unmet beyond the theoretical minimum.
pub fn excess(unmet_pairs: u64, bounds: &BoundsReport) -> f64 {
    if bounds.pairs_total == 0 {
        return 0.0;
    }
    (unmet_pairs as f64 - bounds.min_unmet_pairs as f64) / bounds.pairs_total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(sizes: &[usize]) -> TableLayout {
        TableLayout {
            sizes: sizes.to_vec(),
            cluster_tables: Default::default(),
        }
    }

    #[test]
    fn meetings_per_round_examples() {
        assert_eq!(meetings_per_round(&layout(&[10, 10, 10])), 135);
        assert_eq!(meetings_per_round(&layout(&[2])), 1);
        assert_eq!(meetings_per_round(&layout(&[11, 10, 10])), 145);
    }

    #[test]
    fn meetings_per_round_matches_z_formula() {
        for people in 2..60 {
            for tables in 1..=people.min(9) {
                let l = TableLayout::balanced(people, tables, 0);
                let (nl, nu) = (l.n_lower() as u64, l.n_upper() as u64);
                let z = (l.z_lower() as u64 * nl * (nl - 1) + l.z_upper() as u64 * nu * nu.saturating_sub(1)) / 2;
                assert_eq!(meetings_per_round(&l), z);
                assert_eq!(l.z_lower() * l.n_lower() + l.z_upper() * l.n_upper(), people);
            }
        }
    }

    #[test]
    fn min_repeats_small_examples() {
        assert_eq!(min_repeats_between_rounds(&layout(&[2, 2])), 0);
        assert_eq!(min_repeats_between_rounds(&layout(&[3, 3])), 2);
        assert_eq!(min_repeats_between_rounds(&layout(&[3, 3, 3])), 0);
        assert_eq!(min_repeats_between_rounds(&layout(&[5])), 10);
    }

    #[test]
    fn equal_tables_match_pigeonhole() {
        for size in 1..16 {
            for tables in 1..8 {
                let l = layout(&vec![size; tables]);
                assert_eq!(min_repeats_between_rounds(&l), pigeonhole_repeats(&l), "{size}x{tables}");
            }
        }
    }

    #[test]
    fn pigeonhole_never_exceeds_exact() {
        for people in 2..40 {
            for tables in 1..=people.min(7) {
                let l = TableLayout::balanced(people, tables, 0);
                assert!(pigeonhole_repeats(&l) <= min_repeats_between_rounds(&l));
            }
        }
    }

    #[test]
    fn bounds_examples() {
        // Four participants, two tables, three rounds: all six pairs reachable.
        let b = bounds(&layout(&[2, 2]), 3);
        assert_eq!(b.pairs_total, 6);
        assert_eq!(b.meetings_per_round, 2);
        assert_eq!(b.min_repeats, 0);
        assert_eq!(b.min_unmet_pairs, 0);
        assert_eq!(b.max_first_meetings, 6);

        let l = layout(&[10, 10, 10]);
        let one = bounds(&l, 1);
        assert_eq!(one.min_unmet_pairs, one.pairs_total - one.meetings_per_round);

        assert_eq!(excess(b.min_unmet_pairs, &b), 0.0);
    }
}
