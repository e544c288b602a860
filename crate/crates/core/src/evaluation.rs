//! Run reports, the random-allocation baseline and the balance tolerance check.

use serde::{Deserialize, Serialize};

use crate::allocator::{Allocator, RngStream};
use crate::error::AllocationError;
use crate::metrics::{
    bounds, excess, geometric_meeting_score, mean_distance, table_counts, table_distance, BoundsReport,
    MeetingLedger,
};
use crate::model::{AllocationPlan, Panel, RunConfig, TableLayout};

pub const EXCESS_CLUSTERED_NOTE: &str = "clustering constraints present";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub participants: usize,
    pub num_tables: usize,
    pub num_rounds: usize,
    pub demographics: Vec<String>,
    /// `per_round_balance[k][j][d]`: distance of table `j` from the panel
    /// distribution of demographic `d` in round `k`.
    pub per_round_balance: Vec<Vec<Vec<f64>>>,
    pub mean_distance: f64,
    /// `meeting_histogram[k][c]`: pairs that met exactly `c` times after round `k`.
    pub meeting_histogram: Vec<Vec<u64>>,
    /// `meeting_curves[k][0]` counts pairs that have never met after round
    /// `k`; `meeting_curves[k][m]` for `m >= 1` counts pairs that met at
    /// least `m` times.
    pub meeting_curves: Vec<Vec<u64>>,
    pub geometric_score: f64,
    pub saturation_base: f64,
    pub bounds: BoundsReport,
    pub unmet_pairs: u64,
    pub distinct_pairs_met: u64,
    /// Present only for runs without clustered participants.
    pub excess: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excess_note: Option<String>,
    pub first_meeting_fraction: Option<f64>,
}

/// Cumulative curves from exact-count histograms; rows are padded to a
/// common width.
fn curves_from_histograms(histograms: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let width = histograms.iter().map(Vec::len).max().unwrap_or(1).max(2);
    histograms
        .iter()
        .map(|hist| {
            let mut row = vec![0u64; width];
            row[0] = hist.first().copied().unwrap_or(0);
            let mut at_least = 0;
            for m in (1..width).rev() {
                at_least += hist.get(m).copied().unwrap_or(0);
                row[m] = at_least;
            }
            row
        })
        .collect()
}

pub fn build_report(plan: &AllocationPlan, panel: &Panel, layout: &TableLayout, config: &RunConfig) -> RunReport {
    let num_tables = layout.num_tables();
    let num_demographics = panel.demographics().len();

    let per_round_balance = plan
        .rounds
        .iter()
        .map(|round| {
            (0..num_tables)
                .map(|j| (0..num_demographics).map(|d| table_distance(round, panel, j, d)).collect())
                .collect()
        })
        .collect();

    let mut ledger = MeetingLedger::new(panel.len());
    let mut meeting_histogram = Vec::with_capacity(plan.num_rounds());
    for round in &plan.rounds {
        ledger.record_round(round);
        meeting_histogram.push(ledger.histogram());
    }
    let meeting_curves = curves_from_histograms(&meeting_histogram);

    let bounds = bounds(layout, plan.num_rounds());
    let unmet_pairs = ledger.unmet_pairs();
    let (excess, excess_note) = if panel.has_clustering() {
        (None, Some(EXCESS_CLUSTERED_NOTE.to_owned()))
    } else {
        (Some(excess(unmet_pairs, &bounds)), None)
    };
    let distinct_pairs_met = ledger.distinct_pairs_met();
    let first_meeting_fraction =
        (bounds.max_first_meetings > 0).then(|| distinct_pairs_met as f64 / bounds.max_first_meetings as f64);

    RunReport {
        participants: panel.len(),
        num_tables,
        num_rounds: plan.num_rounds(),
        demographics: panel.demographics().iter().map(|d| d.name.clone()).collect(),
        per_round_balance,
        mean_distance: mean_distance(plan, panel),
        meeting_histogram,
        meeting_curves,
        geometric_score: geometric_meeting_score(&ledger, config.saturation_base),
        saturation_base: config.saturation_base,
        bounds,
        unmet_pairs,
        distinct_pairs_met,
        excess,
        excess_note,
        first_meeting_fraction,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { mean, min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub seeds: usize,
    pub geometric_score: Summary,
    pub mean_distance: Summary,
}

/// Summary of `num_seeds` constraint-respecting random allocations without
/// swaps. Draw `s` uses stream `s` under `config.rng_seed`.
pub fn random_baseline(
    panel: &Panel,
    layout: &TableLayout,
    config: &RunConfig,
    num_seeds: usize,
) -> Result<BaselineSummary, AllocationError> {
    let allocator = Allocator::with_layout(panel, layout.clone(), config);
    let mut scores = Vec::with_capacity(num_seeds);
    let mut distances = Vec::with_capacity(num_seeds);
    for s in 0..num_seeds {
        let mut rng = RngStream::derived(config.rng_seed, s as u64);
        let plan = allocator.random_plan(&mut rng)?;
        let mut ledger = MeetingLedger::new(panel.len());
        for round in &plan.rounds {
            ledger.record_round(round);
        }
        scores.push(geometric_meeting_score(&ledger, config.saturation_base));
        distances.push(mean_distance(&plan, panel));
    }
    Ok(BaselineSummary {
        seeds: num_seeds,
        geometric_score: Summary::of(&scores),
        mean_distance: Summary::of(&distances),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceOffender {
    pub round: usize,
    pub table: usize,
    pub demographic: String,
    pub value: String,
    pub table_proportion: f64,
    pub panel_proportion: f64,
    pub deviation: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceCheck {
    pub passed: bool,
    pub max_deviation: f64,
    /// The cell with the largest deviation beyond its allowance (or closest to
    /// it when everything passes).
    pub worst: Option<BalanceOffender>,
}

/// Absolute slack for comparing proportions computed in floating point.
const PROPORTION_EPS: f64 = 1e-9;

/// Checks every table, round, demographic and value against the panel
/// proportion, allowing `tolerance` plus one seat (`1 / table_size`).
pub fn balance_tolerance_check(plan: &AllocationPlan, panel: &Panel, tolerance: f64) -> BalanceCheck {
    let mut passed = true;
    let mut max_deviation: f64 = 0.0;
    let mut worst: Option<(f64, BalanceOffender)> = None;
    for (k, round) in plan.rounds.iter().enumerate() {
        for table in 0..round.occupied_tables() {
            for (d, demographic) in panel.demographics().iter().enumerate() {
                let (counts, size) = table_counts(round, panel, table, d);
                if size == 0 {
                    continue;
                }
                let allowed = tolerance + 1.0 / size as f64;
                for (v, &c) in counts.iter().enumerate() {
                    let table_proportion = c as f64 / size as f64;
                    let panel_proportion = panel.panel_proportion(d, v);
                    let deviation = (table_proportion - panel_proportion).abs();
                    max_deviation = max_deviation.max(deviation);
                    if deviation > allowed + PROPORTION_EPS {
                        passed = false;
                    }
                    let margin = deviation - allowed;
                    if worst.as_ref().is_none_or(|(m, _)| margin > *m) {
                        worst = Some((
                            margin,
                            BalanceOffender {
                                round: k,
                                table,
                                demographic: demographic.name.clone(),
                                value: demographic.values[v].clone(),
                                table_proportion,
                                panel_proportion,
                                deviation,
                                allowed,
                            },
                        ));
                    }
                }
            }
        }
    }
    BalanceCheck {
        passed,
        max_deviation,
        worst: worst.map(|(_, o)| o),
    }
}
