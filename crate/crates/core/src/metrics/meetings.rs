//! Pairwise meeting counts and the scores derived from them.

use serde::{Deserialize, Serialize};

use crate::model::RoundAllocation;

/// Symmetric count of how many rounds each unordered pair has shared a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeetingLedger {
    participants: usize,
    rounds: usize,
    /// Strict upper triangle, row-major.
    counts: Vec<u32>,
}

impl MeetingLedger {
    pub fn new(participants: usize) -> Self {
        Self {
            participants,
            rounds: 0,
            counts: vec![0; participants * participants.saturating_sub(1) / 2],
        }
    }

    fn index(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        a * self.participants - a * (a + 1) / 2 + (b - a - 1)
    }

    pub fn participants(&self) -> usize {
        self.participants
    }

    /// Number of rounds recorded so far.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Meetings between `a` and `b`. A participant never meets itself.
    pub fn get(&self, a: usize, b: usize) -> u32 {
        if a == b {
            0
        } else {
            self.counts[self.index(a, b)]
        }
    }

    pub fn increment(&mut self, a: usize, b: usize) {
        assert_ne!(a, b, "a participant cannot meet itself");
        let idx = self.index(a, b);
        self.counts[idx] += 1;
    }

    /// Adds one meeting for every pair co-seated in `round`.
    pub fn record_round(&mut self, round: &RoundAllocation) {
        for members in round.members(round.occupied_tables()) {
            for (x, &a) in members.iter().enumerate() {
                for &b in &members[x + 1..] {
                    self.increment(a, b);
                }
            }
        }
        self.rounds += 1;
    }

    /// Every unordered pair `(a, b)` with `a < b` and its count.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        let n = self.participants;
        (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b, self.get(a, b))))
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total_meetings(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn distinct_pairs_met(&self) -> u64 {
        self.counts.iter().filter(|&&c| c > 0).count() as u64
    }

    pub fn unmet_pairs(&self) -> u64 {
        self.counts.len() as u64 - self.distinct_pairs_met()
    }

    /// `histogram[c]` is the number of pairs that met exactly `c` times.
    pub fn histogram(&self) -> Vec<u64> {
        let max = self.counts.iter().copied().max().unwrap_or(0) as usize;
        let mut hist = vec![0u64; max + 1];
        for &c in &self.counts {
            hist[c as usize] += 1;
        }
        hist
    }
}

/// Sum of prior meeting counts over the pairs seated at `table`.
pub fn table_meeting_load(round: &RoundAllocation, table: usize, ledger: &MeetingLedger) -> u64 {
    let members = round.table_members(table);
    let mut load = 0;
    for (x, &a) in members.iter().enumerate() {
        for &b in &members[x + 1..] {
            load += u64::from(ledger.get(a, b));
        }
    }
    load
}

/// Reduction in prior-meeting load across both tables if `i` and `i_prime`
/// traded seats. Positive values mean fewer repeat meetings.
pub fn swap_meeting_delta(round: &RoundAllocation, i: usize, i_prime: usize, ledger: &MeetingLedger) -> i64 {
    let (j, j_prime) = (round.table_of(i), round.table_of(i_prime));
    if j == j_prime {
        return 0;
    }
    let mut delta = 0i64;
    for (x, &t) in round.as_slice().iter().enumerate() {
        if x == i || x == i_prime {
            continue;
        }
        if t == j {
            delta += i64::from(ledger.get(i, x)) - i64::from(ledger.get(i_prime, x));
        } else if t == j_prime {
            delta += i64::from(ledger.get(i_prime, x)) - i64::from(ledger.get(i, x));
        }
    }
    delta
}

/// Value of a pair that has met `count` times, where the n-th meeting is
/// worth `a^n`.
pub fn geometric_pair_value(count: u32, a: f64) -> f64 {
    a / (1.0 - a) * (1.0 - a.powi(count as i32))
}

/// Total geometric saturation score of the ledger.
pub fn geometric_meeting_score(ledger: &MeetingLedger, a: f64) -> f64 {
    geometric_score_from_histogram(&ledger.histogram(), a)
}

/// Geometric saturation score from a histogram of exact pair counts.
pub fn geometric_score_from_histogram(histogram: &[u64], a: f64) -> f64 {
    histogram
        .iter()
        .enumerate()
        .map(|(c, &pairs)| pairs as f64 * geometric_pair_value(c as u32, a))
        .sum()
}
