//! Scalar measures of an allocation: demographic balance, Pareto changes,
//! meeting counts and scores, and the theoretical meeting bounds.

mod balance;
mod bounds;
mod meetings;

pub use balance::{
    mean_distance, pareto_change, pareto_score, scaled_distance, table_counts, table_distance, table_proportion,
};
pub(crate) use balance::change_on_table;
pub use bounds::{bounds, excess, meetings_per_round, min_repeats_between_rounds, pigeonhole_repeats, BoundsReport};
pub use meetings::{
    geometric_meeting_score, geometric_pair_value, geometric_score_from_histogram, swap_meeting_delta,
    table_meeting_load, MeetingLedger,
};
