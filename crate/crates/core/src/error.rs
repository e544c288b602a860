use thiserror::Error;

use crate::model::{ClusterSuggestion, ValidationIssue};

/// A panel failed validation with at least one error-severity issue.
#[derive(Debug, Clone, Error)]
#[error("panel has {} validation error(s)", self.issues.iter().filter(|i| i.is_error()).count())]
pub struct PanelError {
    pub issues: Vec<ValidationIssue>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("{tables} tables requested for only {participants} participants")]
    TableCount { tables: usize, participants: usize },

    #[error("{cluster_tables} cluster tables requested but only {tables} tables exist")]
    TooManyClusterTables { cluster_tables: usize, tables: usize },

    #[error("{cluster_agents} cluster participants but only {seats} seats on cluster tables{}", suggestion_text(.suggestion))]
    ClusterCapacity {
        cluster_agents: usize,
        seats: usize,
        suggestion: Option<ClusterSuggestion>,
    },

    #[error("manual assignment of '{participant}' to table {}: {reason}", .table + 1)]
    ManualConflict {
        participant: String,
        table: usize,
        reason: String,
    },

    #[error("{cluster_agents} cluster participants cannot be seated even using all {seats} seats")]
    Infeasible { cluster_agents: usize, seats: usize },
}

impl ConfigError {
    pub fn suggestion(&self) -> Option<ClusterSuggestion> {
        match self {
            ConfigError::ClusterCapacity { suggestion, .. } => *suggestion,
            _ => None,
        }
    }
}

fn suggestion_text(suggestion: &Option<ClusterSuggestion>) -> String {
    match suggestion {
        Some(s) => format!(
            "; use at least {} cluster tables (recommended: {})",
            s.minimum, s.recommended
        ),
        None => String::new(),
    }
}

/// Placement could not satisfy the seating constraints.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AllocationError {
    #[error("round {}: table {} has no free seat for pinned participant '{participant}'", .round + 1, .table + 1)]
    PinnedOverflow {
        round: usize,
        table: usize,
        participant: String,
    },
    #[error("round {}: {needed} cluster participants but {available} free cluster seats", .round + 1)]
    ClusterSeats {
        round: usize,
        needed: usize,
        available: usize,
    },
    #[error("round {}: {needed} participants but {available} free seats", .round + 1)]
    Seats {
        round: usize,
        needed: usize,
        available: usize,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// The first invariant an allocation plan breaks. Messages use 1-based
/// rounds and tables.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PlanViolation {
    #[error("round {}: expected {expected} assignments, found {actual}", .round + 1)]
    WrongLength {
        round: usize,
        expected: usize,
        actual: usize,
    },
    #[error("round {}: participant '{participant}' assigned to unknown table {}", .round + 1, .table + 1)]
    UnknownTable {
        round: usize,
        participant: String,
        table: usize,
    },
    #[error("round {}: table {} seats {actual} participants, layout requires {expected}", .round + 1, .table + 1)]
    Occupancy {
        round: usize,
        table: usize,
        expected: usize,
        actual: usize,
    },
    #[error("round {}: cluster participant '{participant}' sits at non-cluster table {}", .round + 1, .table + 1)]
    ClusterOffTable {
        round: usize,
        participant: String,
        table: usize,
    },
    #[error("round {}: participant '{participant}' is pinned to table {} but sits at table {}", .round + 1, .expected + 1, .actual + 1)]
    ManualMoved {
        round: usize,
        participant: String,
        expected: usize,
        actual: usize,
    },
}
