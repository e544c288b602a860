//! Multi-round allocation of deliberative panels to discussion tables.
//!
//! Each round starts from a constraint-respecting random seating (pinned
//! participants first, then clustered participants on cluster tables, then
//! everyone else) and is refined by sweeps of Pareto swaps: exchanges that
//! worsen no demographic's balance on either table, sampled either by how
//! much they improve balance or by how many repeat meetings they avoid.

pub mod allocator;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod metrics;
pub mod model;
pub mod synthetic;

pub use allocator::{run, Allocator, RngStream, RunOutcome};
pub use error::{AllocationError, ConfigError, PanelError, PlanViolation};
pub use evaluation::{build_report, RunReport};
pub use metrics::{BoundsReport, MeetingLedger};
pub use model::{
    suggest_cluster_tables, validate_config, AllocationPlan, ClusterSpec, ClusterSuggestion, Demographic,
    MeetingWeighting, Panel, Participant, RawPanel, RoundAllocation, RunConfig, TableLayout, ValidationIssue,
};
