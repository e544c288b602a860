//! Round construction and Pareto swap sweeps.
//!
//! Every round is seated from scratch: pinned participants first, clustered
//! participants on a random subset of cluster-table seats, then everyone else
//! in the remaining seats. The seating is then refined by `swap_rounds` full
//! sweeps over the panel. For each unpinned participant a sweep collects the
//! swaps that worsen no demographic on either affected table and keep
//! clustering intact, drops the dominated ones, and samples at most one.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AllocationError;
use crate::metrics::{change_on_table, MeetingLedger};
use crate::model::{validate_config, AllocationPlan, MeetingWeighting, Panel, RoundAllocation, RunConfig, TableLayout};

/// Fixed-point scale for geometric meeting weights.
const GEOMETRIC_SCALE: f64 = (1u64 << 20) as f64;

/// Deterministic random stream for a run.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// An independent stream for the `index`-th sub-run under `seed`.
    pub fn derived(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index.wrapping_add(1));
        Self(rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// A feasible exchange of the sweep's current participant with `partner`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapCandidate {
    /// Participant index of the exchange partner.
    pub partner: usize,
    /// Pareto score on the current participant's table.
    pub pareto_own_table: i32,
    /// Pareto score on the partner's table.
    pub pareto_partner_table: i32,
    pub combined_pareto: i32,
    /// Reduction in prior-meeting load over both tables. Raw weighting uses
    /// meeting counts; geometric weighting uses fixed-point `2^20` units.
    pub meeting_delta: i64,
}

/// Removes every candidate that another candidate beats on one of
/// (`combined_pareto`, `meeting_delta`) without losing on the other. Exact
/// ties survive. Survivors keep their input order.
pub fn filter_dominated(candidates: Vec<SwapCandidate>) -> Vec<SwapCandidate> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&x| std::cmp::Reverse((candidates[x].combined_pareto, candidates[x].meeting_delta)));

    let mut keep = vec![false; candidates.len()];
    let mut best_above = i64::MIN;
    let mut start = 0;
    while start < order.len() {
        let pareto = candidates[order[start]].combined_pareto;
        let end = start
            + order[start..]
                .iter()
                .take_while(|&&x| candidates[x].combined_pareto == pareto)
                .count();
        // Sorted descending, so the group's maximum comes first.
        let group_best = candidates[order[start]].meeting_delta;
        for &x in &order[start..end] {
            let delta = candidates[x].meeting_delta;
            keep[x] = delta == group_best && delta > best_above;
        }
        best_above = best_above.max(group_best);
        start = end;
    }

    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[u64], rng: &mut R) -> Option<usize> {
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return None;
    }
    let mut draw = rng.gen_range(0..total);
    for (idx, &w) in weights.iter().enumerate() {
        if draw < w {
            return Some(idx);
        }
        draw -= w;
    }
    unreachable!("draw below total weight")
}

/// Picks at most one candidate. With probability `pareto_mix` sampling is
/// proportional to `combined_pareto`, otherwise to the non-negative part of
/// `meeting_delta`. A branch whose weights are all zero falls back to the
/// other; if both are all zero nothing is chosen.
pub fn select_swap<R: Rng + ?Sized>(candidates: &[SwapCandidate], pareto_mix: f64, rng: &mut R) -> Option<usize> {
    if candidates.is_empty() {
        return None;
    }
    let pareto: Vec<u64> = candidates.iter().map(|c| c.combined_pareto.max(0) as u64).collect();
    let meeting: Vec<u64> = candidates.iter().map(|c| c.meeting_delta.max(0) as u64).collect();
    let pareto_first = rng.gen::<f64>() < pareto_mix;
    let (first, second) = if pareto_first {
        (&pareto, &meeting)
    } else {
        (&meeting, &pareto)
    };
    pick_weighted(first, rng).or_else(|| pick_weighted(second, rng))
}

/// Per-pair weights indexed by prior meeting count.
fn meeting_weights(weighting: MeetingWeighting, saturation_base: f64, max_count: usize) -> Vec<i64> {
    (0..=max_count)
        .map(|c| match weighting {
            MeetingWeighting::Raw => c as i64,
            // Loss of the next meeting's value relative to a first meeting.
            MeetingWeighting::Geometric => {
                let a = saturation_base;
                (GEOMETRIC_SCALE * (a - a.powi(c as i32 + 1))).round() as i64
            }
        })
        .collect()
}

/// Notified after every applied swap and at the end of every sweep.
pub trait SwapObserver {
    fn swap_applied(&mut self, event: &SwapEvent<'_>);

    fn sweep_finished(&mut self, _round: usize, _sweep: usize, _tables: &[usize]) {}
}

#[derive(Debug)]
pub struct SwapEvent<'a> {
    pub round: usize,
    pub sweep: usize,
    pub subject: usize,
    pub candidate: SwapCandidate,
    /// Tables of the subject and the partner before the swap.
    pub subject_from: usize,
    pub partner_from: usize,
    /// Seating after the swap.
    pub tables: &'a [usize],
}

struct NoObserver;

impl SwapObserver for NoObserver {
    fn swap_applied(&mut self, _event: &SwapEvent<'_>) {}
}

/// Mutable seating with incrementally maintained value counts and meeting
/// loads.
struct RoundState<'a> {
    panel: &'a Panel,
    layout: &'a TableLayout,
    round: usize,
    tables: Vec<usize>,
    /// `counts[j][d][v]`: occupants of table `j` holding value `v` of `d`.
    counts: Vec<Vec<Vec<usize>>>,
    /// `load[x][j]`: summed pair weights between `x` and the other occupants of `j`.
    load: Vec<Vec<i64>>,
    pinned: Vec<bool>,
    weights: Vec<i64>,
    ledger: &'a MeetingLedger,
}

impl<'a> RoundState<'a> {
    fn new(
        panel: &'a Panel,
        layout: &'a TableLayout,
        round: usize,
        tables: Vec<usize>,
        ledger: &'a MeetingLedger,
        config: &RunConfig,
    ) -> Self {
        let n = panel.len();
        let num_tables = layout.num_tables();
        let mut counts: Vec<Vec<Vec<usize>>> = (0..num_tables)
            .map(|_| panel.demographics().iter().map(|d| vec![0; d.values.len()]).collect())
            .collect();
        for (i, &j) in tables.iter().enumerate() {
            for (d, row) in counts[j].iter_mut().enumerate() {
                row[panel.code(i, d)] += 1;
            }
        }

        let max_count = ledger.counts().iter().copied().max().unwrap_or(0) as usize;
        let weights = meeting_weights(config.meeting_weighting, config.saturation_base, max_count);
        let mut load = vec![vec![0i64; num_tables]; n];
        for (x, row) in load.iter_mut().enumerate() {
            for (y, &t) in tables.iter().enumerate() {
                if x != y {
                    row[t] += weights[ledger.get(x, y) as usize];
                }
            }
        }

        let pinned = (0..n).map(|i| panel.participant(i).is_manual_in(round)).collect();
        Self {
            panel,
            layout,
            round,
            tables,
            counts,
            load,
            pinned,
            weights,
            ledger,
        }
    }

    fn weight(&self, a: usize, b: usize) -> i64 {
        self.weights[self.ledger.get(a, b) as usize]
    }

    /// Pareto score on `table` when `leaving` gives its seat to `arriving`.
    fn table_score(&self, table: usize, leaving: usize, arriving: usize) -> i32 {
        let panel = self.panel;
        let mut sum = 0;
        for d in 0..panel.demographics().len() {
            let change = change_on_table(
                &self.counts[table][d],
                self.layout.sizes[table],
                panel.value_totals(d),
                panel.len(),
                panel.code(leaving, d),
                panel.code(arriving, d),
            );
            if change < 0 {
                return -1;
            }
            sum += change;
        }
        sum
    }

    fn meeting_delta(&self, i: usize, partner: usize) -> i64 {
        let (j, jp) = (self.tables[i], self.tables[partner]);
        self.load[i][j] - self.load[partner][j] + self.load[partner][jp] - self.load[i][jp]
            + 2 * self.weight(i, partner)
    }

    fn candidates(&self, i: usize) -> Vec<SwapCandidate> {
        let j = self.tables[i];
        let mut out = Vec::new();
        if self.pinned[i] {
            return out;
        }
        let i_cluster = self.panel.is_cluster(i);
        for partner in 0..self.tables.len() {
            let jp = self.tables[partner];
            if jp == j || self.pinned[partner] {
                continue;
            }
            if i_cluster && !self.layout.is_cluster_table(jp) {
                continue;
            }
            if self.panel.is_cluster(partner) && !self.layout.is_cluster_table(j) {
                continue;
            }
            let own = self.table_score(j, i, partner);
            if own < 0 {
                continue;
            }
            let theirs = self.table_score(jp, partner, i);
            if theirs < 0 {
                continue;
            }
            out.push(SwapCandidate {
                partner,
                pareto_own_table: own,
                pareto_partner_table: theirs,
                combined_pareto: own + theirs,
                meeting_delta: self.meeting_delta(i, partner),
            });
        }
        out
    }

    fn apply_swap(&mut self, i: usize, partner: usize) {
        let (j, jp) = (self.tables[i], self.tables[partner]);
        for d in 0..self.panel.demographics().len() {
            let (ci, cp) = (self.panel.code(i, d), self.panel.code(partner, d));
            self.counts[j][d][ci] -= 1;
            self.counts[j][d][cp] += 1;
            self.counts[jp][d][cp] -= 1;
            self.counts[jp][d][ci] += 1;
        }
        for x in 0..self.tables.len() {
            let (wi, wp) = (self.weight(x, i), self.weight(x, partner));
            self.load[x][j] += wp - wi;
            self.load[x][jp] += wi - wp;
        }
        self.tables[i] = jp;
        self.tables[partner] = j;
    }

    fn sweep<R: Rng + ?Sized>(&mut self, pareto_mix: f64, sweep: usize, rng: &mut R, observer: &mut dyn SwapObserver) {
        for i in 0..self.tables.len() {
            if self.pinned[i] {
                continue;
            }
            let candidates = filter_dominated(self.candidates(i));
            let Some(pick) = select_swap(&candidates, pareto_mix, rng) else {
                continue;
            };
            let candidate = candidates[pick];
            let (subject_from, partner_from) = (self.tables[i], self.tables[candidate.partner]);
            self.apply_swap(i, candidate.partner);
            observer.swap_applied(&SwapEvent {
                round: self.round,
                sweep,
                subject: i,
                candidate,
                subject_from,
                partner_from,
                tables: &self.tables,
            });
        }
        observer.sweep_finished(self.round, sweep, &self.tables);
    }
}

/// Swap candidates for participant `i` in the given seating.
pub fn candidates_for(
    i: usize,
    round: &RoundAllocation,
    round_index: usize,
    panel: &Panel,
    layout: &TableLayout,
    ledger: &MeetingLedger,
    config: &RunConfig,
) -> Vec<SwapCandidate> {
    RoundState::new(panel, layout, round_index, round.0.clone(), ledger, config).candidates(i)
}

/// Result of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub plan: AllocationPlan,
    pub ledger: MeetingLedger,
    pub layout: TableLayout,
}

pub struct Allocator<'a> {
    panel: &'a Panel,
    layout: TableLayout,
    config: &'a RunConfig,
}

impl<'a> Allocator<'a> {
    /// Validates `config` against `panel` and derives the layout.
    pub fn new(panel: &'a Panel, config: &'a RunConfig) -> Result<Self, AllocationError> {
        let layout = validate_config(panel, config)?;
        Ok(Self { panel, layout, config })
    }

    /// Uses a caller-supplied layout. The caller is responsible for its
    /// consistency with `panel`.
    pub fn with_layout(panel: &'a Panel, layout: TableLayout, config: &'a RunConfig) -> Self {
        Self { panel, layout, config }
    }

    pub fn layout(&self) -> &TableLayout {
        &self.layout
    }

    /// Constraint-respecting random seating for `round`, before any swaps.
    pub fn initial_round<R: Rng + ?Sized>(&self, round: usize, rng: &mut R) -> Result<RoundAllocation, AllocationError> {
        const FREE: usize = usize::MAX;
        let panel = self.panel;
        let layout = &self.layout;
        let mut seats = layout.sizes.clone();
        let mut tables = vec![FREE; panel.len()];

        for (i, p) in panel.participants().iter().enumerate() {
            if let Some(t) = p.manual_table_for(round) {
                if t >= seats.len() || seats[t] == 0 {
                    return Err(AllocationError::PinnedOverflow {
                        round,
                        table: t,
                        participant: p.id().to_owned(),
                    });
                }
                seats[t] -= 1;
                tables[i] = t;
            }
        }

        let mut clustered: Vec<usize> = (0..panel.len())
            .filter(|&i| tables[i] == FREE && panel.is_cluster(i))
            .collect();
        clustered.shuffle(rng);
        let cluster_slots: Vec<usize> = layout
            .cluster_tables
            .iter()
            .flat_map(|&t| std::iter::repeat_n(t, seats[t]))
            .collect();
        if cluster_slots.len() < clustered.len() {
            return Err(AllocationError::ClusterSeats {
                round,
                needed: clustered.len(),
                available: cluster_slots.len(),
            });
        }
        for (&i, &t) in clustered.iter().zip(&cluster_slots) {
            tables[i] = t;
            seats[t] -= 1;
        }

        let mut rest: Vec<usize> = (0..panel.len()).filter(|&i| tables[i] == FREE).collect();
        rest.shuffle(rng);
        let slots: Vec<usize> = (0..seats.len())
            .flat_map(|t| std::iter::repeat_n(t, seats[t]))
            .collect();
        if slots.len() != rest.len() {
            return Err(AllocationError::Seats {
                round,
                needed: rest.len(),
                available: slots.len(),
            });
        }
        for (&i, &t) in rest.iter().zip(&slots) {
            tables[i] = t;
        }
        Ok(RoundAllocation(tables))
    }

    /// Applies `config.swap_rounds` sweeps to `allocation` in place.
    pub fn sweep_round<R: Rng + ?Sized>(
        &self,
        round: usize,
        allocation: &mut RoundAllocation,
        ledger: &MeetingLedger,
        rng: &mut R,
        observer: &mut dyn SwapObserver,
    ) {
        let tables = std::mem::take(&mut allocation.0);
        let mut state = RoundState::new(self.panel, &self.layout, round, tables, ledger, self.config);
        for sweep in 0..self.config.swap_rounds {
            state.sweep(self.config.pareto_mix, sweep, rng, observer);
        }
        allocation.0 = state.tables;
    }

    /// Applies exactly one sweep to `allocation` in place.
    pub fn sweep<R: Rng + ?Sized>(
        &self,
        round: usize,
        allocation: &mut RoundAllocation,
        ledger: &MeetingLedger,
        rng: &mut R,
    ) {
        let tables = std::mem::take(&mut allocation.0);
        let mut state = RoundState::new(self.panel, &self.layout, round, tables, ledger, self.config);
        state.sweep(self.config.pareto_mix, 0, rng, &mut NoObserver);
        allocation.0 = state.tables;
    }

    pub fn allocate_round<R: Rng + ?Sized>(
        &self,
        round: usize,
        ledger: &MeetingLedger,
        rng: &mut R,
        observer: &mut dyn SwapObserver,
    ) -> Result<RoundAllocation, AllocationError> {
        let mut allocation = self.initial_round(round, rng)?;
        self.sweep_round(round, &mut allocation, ledger, rng, observer);
        Ok(allocation)
    }

    pub fn run(&self) -> Result<RunOutcome, AllocationError> {
        self.run_observed(&mut NoObserver)
    }

    pub fn run_observed(&self, observer: &mut dyn SwapObserver) -> Result<RunOutcome, AllocationError> {
        let mut rng = RngStream::from_seed(self.config.rng_seed);
        let mut ledger = MeetingLedger::new(self.panel.len());
        let mut plan = AllocationPlan::default();
        for round in 0..self.config.num_rounds {
            let allocation = self.allocate_round(round, &ledger, &mut rng, observer)?;
            ledger.record_round(&allocation);
            plan.rounds.push(allocation);
        }
        Ok(RunOutcome {
            plan,
            ledger,
            layout: self.layout.clone(),
        })
    }

    /// Random seating for every round without any swaps.
    pub fn random_plan<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AllocationPlan, AllocationError> {
        let rounds = (0..self.config.num_rounds)
            .map(|k| self.initial_round(k, rng))
            .collect::<Result<_, _>>()?;
        Ok(AllocationPlan { rounds })
    }
}

/// Validates the configuration and runs every round.
pub fn run(panel: &Panel, config: &RunConfig) -> Result<RunOutcome, AllocationError> {
    Allocator::new(panel, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{pareto_score, swap_meeting_delta};
    use crate::model::{ClusterSpec, Demographic, Participant, RawPanel};

    fn cand(combined_pareto: i32, meeting_delta: i64) -> SwapCandidate {
        SwapCandidate {
            partner: 0,
            pareto_own_table: combined_pareto,
            pareto_partner_table: 0,
            combined_pareto,
            meeting_delta,
        }
    }

    fn brute_force_filter(candidates: &[SwapCandidate]) -> Vec<SwapCandidate> {
        candidates
            .iter()
            .filter(|c| {
                !candidates.iter().any(|o| {
                    o.combined_pareto >= c.combined_pareto
                        && o.meeting_delta >= c.meeting_delta
                        && (o.combined_pareto > c.combined_pareto || o.meeting_delta > c.meeting_delta)
                })
            })
            .copied()
            .collect()
    }

    fn panel(n: usize, clustered: usize) -> Panel {
        let participants = (0..n)
            .map(|i| {
                Participant::new(format!("p{i:02}"))
                    .with("age", ["young", "mid", "old"][i % 3])
                    .with("gender", if (i / 2) % 2 == 0 { "f" } else { "m" })
                    .with("media", if i < clustered { "no" } else { "yes" })
            })
            .collect();
        Panel::new(RawPanel {
            participants,
            demographics: vec![
                Demographic::new("age", ["young", "mid", "old"]),
                Demographic::new("gender", ["f", "m"]),
            ],
            cluster: Some(ClusterSpec {
                demographic: "media".into(),
                value: "no".into(),
            }),
        })
        .unwrap()
    }

    #[test]
    fn dominated_candidates_are_removed() {
        let kept = filter_dominated(vec![cand(2, 5), cand(1, 3)]);
        assert_eq!(kept, vec![cand(2, 5)]);
        let kept = filter_dominated(vec![cand(2, 1), cand(1, 5)]);
        assert_eq!(kept.len(), 2);
        let kept = filter_dominated(vec![cand(2, 3), cand(2, 3)]);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn filter_matches_pairwise_definition() {
        let mut rng = RngStream::from_seed(11);
        for _ in 0..500 {
            let len = rng.gen_range(0..12);
            let cs: Vec<SwapCandidate> = (0..len)
                .map(|x| SwapCandidate {
                    partner: x,
                    ..cand(rng.gen_range(0..4), rng.gen_range(-3..4))
                })
                .collect();
            assert_eq!(filter_dominated(cs.clone()), brute_force_filter(&cs));
        }
    }

    #[test]
    fn pareto_branch_samples_proportionally() {
        let cs = [cand(2, 0), cand(1, 0)];
        let mut rng = RngStream::from_seed(3);
        let trials = 30_000;
        let firsts = (0..trials)
            .filter(|_| select_swap(&cs, 1.0, &mut rng) == Some(0))
            .count();
        let share = firsts as f64 / trials as f64;
        assert!((share - 2.0 / 3.0).abs() < 0.015, "share {share}");
    }

    #[test]
    fn full_pareto_mix_never_uses_meeting_branch_first() {
        // The meeting branch would always pick index 1.
        let cs = [cand(1, 0), cand(0, 9)];
        let mut rng = RngStream::from_seed(5);
        assert!((0..1000).all(|_| select_swap(&cs, 1.0, &mut rng) == Some(0)));
    }

    #[test]
    fn zero_weight_branch_falls_back() {
        let cs = [cand(0, 0), cand(0, 4), cand(0, -2)];
        let mut rng = RngStream::from_seed(9);
        for mix in [0.0, 0.5, 1.0] {
            assert!((0..200).all(|_| select_swap(&cs, mix, &mut rng) == Some(1)));
        }
        let none = [cand(0, 0), cand(0, -1)];
        assert_eq!(select_swap(&none, 0.5, &mut rng), None);
        assert_eq!(select_swap(&[], 0.5, &mut rng), None);
    }

    #[test]
    fn lone_positive_pareto_weight_is_certain() {
        let cs = [cand(3, 0)];
        let mut rng = RngStream::from_seed(1);
        assert!((0..100).all(|_| select_swap(&cs, 1.0, &mut rng) == Some(0)));
    }

    #[test]
    fn initial_round_respects_constraints() {
        let panel = panel(24, 5);
        let mut raw = panel.to_raw();
        raw.participants[10].set_manual_table(Some(3));
        let panel = Panel::new(raw).unwrap();
        let config = RunConfig::new(4, 3).with_cluster_tables(1);
        let alloc = Allocator::new(&panel, &config).unwrap();
        let mut rng = RngStream::from_seed(4);
        for k in 0..20 {
            let round = alloc.initial_round(k, &mut rng).unwrap();
            let plan = AllocationPlan { rounds: vec![round] };
            plan.validate(&panel, alloc.layout()).unwrap();
        }
    }

    #[test]
    fn candidates_exclude_pinned_and_cluster_breaking_partners() {
        let mut raw = panel(12, 3).to_raw();
        raw.participants[11].set_manual_table(Some(1));
        let panel = Panel::new(raw).unwrap();
        let config = RunConfig::new(3, 1).with_cluster_tables(1);
        let layout = validate_config(&panel, &config).unwrap();
        let ledger = MeetingLedger::new(12);
        // Cluster agents 0..3 on table 0 together with 3.
        let round = RoundAllocation(vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 1]);
        for i in 0..11 {
            for c in candidates_for(i, &round, 0, &panel, &layout, &ledger, &config) {
                assert_ne!(c.partner, 11);
                assert_ne!(round.table_of(c.partner), round.table_of(i));
                if panel.is_cluster(i) {
                    assert!(layout.is_cluster_table(round.table_of(c.partner)));
                }
                if panel.is_cluster(c.partner) {
                    assert!(layout.is_cluster_table(round.table_of(i)));
                }
            }
        }
        assert!(candidates_for(11, &round, 0, &panel, &layout, &ledger, &config).is_empty());
    }

    #[test]
    fn candidate_scores_match_metric_functions() {
        let panel = panel(18, 0);
        let config = RunConfig::new(3, 4);
        let layout = validate_config(&panel, &config).unwrap();
        let mut rng = RngStream::from_seed(21);
        let alloc = Allocator::new(&panel, &config).unwrap();
        let mut ledger = MeetingLedger::new(18);
        for k in 0..3 {
            ledger.record_round(&alloc.initial_round(k, &mut rng).unwrap());
        }
        let round = alloc.initial_round(3, &mut rng).unwrap();
        for i in 0..18 {
            let cs = candidates_for(i, &round, 3, &panel, &layout, &ledger, &config);
            for c in &cs {
                let own = pareto_score(&round, &panel, i, c.partner, round.table_of(i));
                let theirs = pareto_score(&round, &panel, i, c.partner, round.table_of(c.partner));
                assert_eq!((c.pareto_own_table, c.pareto_partner_table), (own, theirs));
                assert_eq!(c.meeting_delta, swap_meeting_delta(&round, i, c.partner, &ledger));
            }
            // Everything excluded is either same-table or worsens a table.
            let listed: Vec<usize> = cs.iter().map(|c| c.partner).collect();
            for p in (0..18).filter(|p| !listed.contains(p)) {
                let same = round.table_of(p) == round.table_of(i);
                let harms = pareto_score(&round, &panel, i, p, round.table_of(i)) < 0
                    || pareto_score(&round, &panel, i, p, round.table_of(p)) < 0;
                assert!(same || harms);
            }
        }
    }

    #[test]
    fn geometric_weights_track_next_meeting_value() {
        let w = meeting_weights(MeetingWeighting::Geometric, 0.5, 4);
        assert_eq!(w, vec![0, 1 << 18, 3 << 17, 7 << 16, 15 << 15]);
        assert_eq!(meeting_weights(MeetingWeighting::Raw, 0.5, 3), vec![0, 1, 2, 3]);
    }

    #[test]
    fn pinned_participants_never_move() {
        let mut raw = panel(20, 0).to_raw();
        raw.participants[4].set_manual_table(Some(1));
        raw.participants[7] = raw.participants[7].clone().pinned_in_round(1, 3);
        let panel = Panel::new(raw).unwrap();
        let config = RunConfig::new(4, 3).with_seed(8);
        let out = run(&panel, &config).unwrap();
        for (k, round) in out.plan.rounds.iter().enumerate() {
            assert_eq!(round.table_of(4), 1);
            if k == 1 {
                assert_eq!(round.table_of(7), 3);
            }
        }
        out.plan.validate(&panel, &out.layout).unwrap();
    }

    #[test]
    fn same_seed_same_plan() {
        let panel = panel(21, 4);
        let config = RunConfig::new(3, 4).with_cluster_tables(1).with_seed(42);
        let a = run(&panel, &config).unwrap();
        let b = run(&panel, &config).unwrap();
        assert_eq!(a, b);
        let c = run(&panel, &config.clone().with_seed(43)).unwrap();
        assert_ne!(a.plan, c.plan);
    }

    #[test]
    fn single_round_ledger_equals_co_seating() {
        let panel = panel(12, 0);
        let out = run(&panel, &RunConfig::new(3, 1)).unwrap();
        let round = &out.plan.rounds[0];
        for a in 0..12 {
            for b in a + 1..12 {
                let together = u32::from(round.table_of(a) == round.table_of(b));
                assert_eq!(out.ledger.get(a, b), together);
            }
        }
    }
}
