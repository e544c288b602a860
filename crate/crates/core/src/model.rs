//! Domain types shared by the allocator, the metrics and the I/O layer.
//!
//! Participants and tables are addressed by dense 0-based indices internally.
//! Human-facing output converts tables to 1-based numbers.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, PanelError, PlanViolation};

/// Demographics with more levels than this trigger a merge warning.
pub const MAX_RECOMMENDED_LEVELS: usize = 5;

/// A categorical attribute used for table balancing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographic {
    pub name: String,
    /// Ordered value set. Index into this vector is the value code.
    pub values: Vec<String>,
}

impl Demographic {
    pub fn new(name: impl Into<String>, values: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name: name.into(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// The column and value that mark an agent as clustered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub demographic: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    id: String,
    attributes: BTreeMap<String, String>,
    manual_table: Option<usize>,
    /// Per-round overrides of `manual_table`, keyed by 0-based round.
    manual_overrides: BTreeMap<usize, usize>,
    is_cluster: bool,
}

impl Participant {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            attributes: BTreeMap::new(),
            manual_table: None,
            manual_overrides: BTreeMap::new(),
            is_cluster: false,
        }
    }

    pub fn with(mut self, demographic: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(demographic.into(), value.into());
        self
    }

    /// Pins the participant to a 0-based table for every round.
    pub fn pinned(mut self, table: usize) -> Self {
        self.manual_table = Some(table);
        self
    }

    /// Pins the participant to a 0-based table for one 0-based round only.
    pub fn pinned_in_round(mut self, round: usize, table: usize) -> Self {
        self.manual_overrides.insert(round, table);
        self
    }

    pub fn set_attribute(&mut self, demographic: impl Into<String>, value: impl Into<String>) {
        self.attributes.insert(demographic.into(), value.into());
    }

    pub fn set_manual_table(&mut self, table: Option<usize>) {
        self.manual_table = table;
    }

    pub fn set_manual_override(&mut self, round: usize, table: usize) {
        self.manual_overrides.insert(round, table);
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn attribute(&self, demographic: &str) -> Option<&str> {
        self.attributes.get(demographic).map(String::as_str)
    }

    pub fn attributes(&self) -> &BTreeMap<String, String> {
        &self.attributes
    }

    pub fn manual_table(&self) -> Option<usize> {
        self.manual_table
    }

    pub fn manual_overrides(&self) -> &BTreeMap<usize, usize> {
        &self.manual_overrides
    }

    /// The table this participant is pinned to in `round`, if any.
    pub fn manual_table_for(&self, round: usize) -> Option<usize> {
        self.manual_overrides.get(&round).copied().or(self.manual_table)
    }

    pub fn is_manual_in(&self, round: usize) -> bool {
        self.manual_table_for(round).is_some()
    }

    /// Derived from the panel's cluster specification when the panel is built.
    pub fn is_cluster(&self) -> bool {
        self.is_cluster
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    TooFewParticipants,
    EmptyId,
    DuplicateId,
    DuplicateDemographic,
    TooFewValues,
    DuplicateValue,
    MissingValue,
    UnknownValue,
    MissingClusterValue,
    ManyValues,
    SparseValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub kind: IssueKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub participant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demographic: Option<String>,
}

impl ValidationIssue {
    fn error(kind: IssueKind, message: String) -> Self {
        Self {
            severity: Severity::Error,
            kind,
            message,
            participant: None,
            demographic: None,
        }
    }

    fn warning(kind: IssueKind, message: String) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(kind, message)
        }
    }

    fn for_participant(mut self, id: &str) -> Self {
        self.participant = Some(id.to_owned());
        self
    }

    fn for_demographic(mut self, name: &str) -> Self {
        self.demographic = Some(name.to_owned());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Unvalidated panel content, as read from a file or request body.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawPanel {
    pub participants: Vec<Participant>,
    pub demographics: Vec<Demographic>,
    pub cluster: Option<ClusterSpec>,
}

impl RawPanel {
    /// Checks the panel for structural errors and balancing warnings.
    ///
    /// `num_tables`, when known, enables the warning for values held by fewer
    /// participants than there are tables.
    pub fn validate(&self, num_tables: Option<usize>) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();

        if self.participants.len() < 2 {
            issues.push(ValidationIssue::error(
                IssueKind::TooFewParticipants,
                format!("a panel needs at least 2 participants, found {}", self.participants.len()),
            ));
        }

        let mut seen = HashSet::new();
        for p in &self.participants {
            if p.id.trim().is_empty() {
                issues.push(ValidationIssue::error(IssueKind::EmptyId, "participant with an empty id".into()));
            } else if !seen.insert(p.id.as_str()) {
                issues.push(
                    ValidationIssue::error(IssueKind::DuplicateId, format!("duplicate participant id '{}'", p.id))
                        .for_participant(&p.id),
                );
            }
        }

        let mut names = HashSet::new();
        for d in &self.demographics {
            if !names.insert(d.name.as_str()) {
                issues.push(
                    ValidationIssue::error(
                        IssueKind::DuplicateDemographic,
                        format!("demographic '{}' declared twice", d.name),
                    )
                    .for_demographic(&d.name),
                );
            }
            let distinct: HashSet<&str> = d.values.iter().map(String::as_str).collect();
            if distinct.len() != d.values.len() {
                issues.push(
                    ValidationIssue::error(
                        IssueKind::DuplicateValue,
                        format!("demographic '{}' lists a value more than once", d.name),
                    )
                    .for_demographic(&d.name),
                );
            }
            if distinct.len() < 2 {
                issues.push(
                    ValidationIssue::error(
                        IssueKind::TooFewValues,
                        format!(
                            "demographic '{}' has {} distinct value(s); balancing needs at least 2",
                            d.name,
                            distinct.len()
                        ),
                    )
                    .for_demographic(&d.name),
                );
            }
            if d.values.len() > MAX_RECOMMENDED_LEVELS {
                issues.push(
                    ValidationIssue::warning(
                        IssueKind::ManyValues,
                        format!(
                            "demographic '{}' has {} values; consider merging levels into at most {} broader groups",
                            d.name,
                            d.values.len(),
                            MAX_RECOMMENDED_LEVELS
                        ),
                    )
                    .for_demographic(&d.name),
                );
            }
        }

        for p in &self.participants {
            for d in &self.demographics {
                match p.attribute(&d.name) {
                    None => issues.push(
                        ValidationIssue::error(
                            IssueKind::MissingValue,
                            format!("participant '{}' has no value for '{}'", p.id, d.name),
                        )
                        .for_participant(&p.id)
                        .for_demographic(&d.name),
                    ),
                    Some(v) if v.trim().is_empty() => issues.push(
                        ValidationIssue::error(
                            IssueKind::MissingValue,
                            format!("participant '{}' has an empty value for '{}'", p.id, d.name),
                        )
                        .for_participant(&p.id)
                        .for_demographic(&d.name),
                    ),
                    Some(v) if d.value_index(v).is_none() => issues.push(
                        ValidationIssue::error(
                            IssueKind::UnknownValue,
                            format!("participant '{}' has undeclared value '{v}' for '{}'", p.id, d.name),
                        )
                        .for_participant(&p.id)
                        .for_demographic(&d.name),
                    ),
                    Some(_) => {}
                }
            }
            if let Some(cluster) = &self.cluster {
                if p.attribute(&cluster.demographic).is_none() {
                    issues.push(
                        ValidationIssue::error(
                            IssueKind::MissingClusterValue,
                            format!("participant '{}' has no value for cluster column '{}'", p.id, cluster.demographic),
                        )
                        .for_participant(&p.id)
                        .for_demographic(&cluster.demographic),
                    );
                }
            }
        }

        if let Some(tables) = num_tables {
            for d in &self.demographics {
                for v in &d.values {
                    let holders = self
                        .participants
                        .iter()
                        .filter(|p| p.attribute(&d.name) == Some(v.as_str()))
                        .count();
                    if holders < tables {
                        issues.push(
                            ValidationIssue::warning(
                                IssueKind::SparseValue,
                                format!(
                                    "only {holders} participant(s) have {}='{v}', fewer than the {tables} tables; \
                                     some tables cannot include this value",
                                    d.name
                                ),
                            )
                            .for_demographic(&d.name),
                        );
                    }
                }
            }
        }

        issues
    }
}

/// A validated panel with demographic values encoded as dense indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    participants: Vec<Participant>,
    demographics: Vec<Demographic>,
    cluster: Option<ClusterSpec>,
    /// `codes[i][d]` is participant `i`'s value index for demographic `d`.
    codes: Vec<Vec<usize>>,
    /// `value_totals[d][v]` is the number of panel members holding value `v`.
    value_totals: Vec<Vec<usize>>,
    cluster_count: usize,
}

impl TryFrom<RawPanel> for Panel {
    type Error = PanelError;

    fn try_from(raw: RawPanel) -> Result<Self, Self::Error> {
        Panel::new(raw)
    }
}

impl Panel {
    pub fn new(raw: RawPanel) -> Result<Self, PanelError> {
        let issues = raw.validate(None);
        if issues.iter().any(ValidationIssue::is_error) {
            return Err(PanelError { issues });
        }
        let RawPanel {
            mut participants,
            demographics,
            cluster,
        } = raw;

        let codes: Vec<Vec<usize>> = participants
            .iter()
            .map(|p| {
                demographics
                    .iter()
                    .map(|d| d.value_index(p.attribute(&d.name).unwrap_or_default()).unwrap_or(0))
                    .collect()
            })
            .collect();

        let mut value_totals: Vec<Vec<usize>> = demographics.iter().map(|d| vec![0; d.values.len()]).collect();
        for row in &codes {
            for (d, &v) in row.iter().enumerate() {
                value_totals[d][v] += 1;
            }
        }

        for p in &mut participants {
            p.is_cluster = cluster
                .as_ref()
                .is_some_and(|c| p.attribute(&c.demographic) == Some(c.value.as_str()));
        }
        let cluster_count = participants.iter().filter(|p| p.is_cluster).count();

        Ok(Self {
            participants,
            demographics,
            cluster,
            codes,
            value_totals,
            cluster_count,
        })
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn participant(&self, index: usize) -> &Participant {
        &self.participants[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.participants.iter().position(|p| p.id == id)
    }

    pub fn demographics(&self) -> &[Demographic] {
        &self.demographics
    }

    pub fn cluster(&self) -> Option<&ClusterSpec> {
        self.cluster.as_ref()
    }

    /// Value index of participant `i` for demographic `d`.
    pub fn code(&self, i: usize, d: usize) -> usize {
        self.codes[i][d]
    }

    pub fn value_totals(&self, d: usize) -> &[usize] {
        &self.value_totals[d]
    }

    /// Panel-wide proportion of demographic `d` holding value `v`.
    pub fn panel_proportion(&self, d: usize, v: usize) -> f64 {
        self.value_totals[d][v] as f64 / self.len() as f64
    }

    pub fn is_cluster(&self, i: usize) -> bool {
        self.participants[i].is_cluster
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn has_clustering(&self) -> bool {
        self.cluster_count > 0
    }

    pub fn to_raw(&self) -> RawPanel {
        RawPanel {
            participants: self.participants.clone(),
            demographics: self.demographics.clone(),
            cluster: self.cluster.clone(),
        }
    }
}

/// How swap candidates value changes in prior meetings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeetingWeighting {
    /// Differences in raw prior-meeting counts.
    #[default]
    Raw,
    /// Differences in the geometric value of the next meeting of each pair.
    Geometric,
}

fn default_swap_rounds() -> usize {
    5
}

fn default_half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub num_tables: usize,
    #[serde(default)]
    pub num_cluster_tables: usize,
    pub num_rounds: usize,
    #[serde(default = "default_swap_rounds")]
    pub swap_rounds: usize,
    /// Probability of sampling a swap by Pareto score rather than by meeting improvement.
    #[serde(default = "default_half")]
    pub pareto_mix: f64,
    #[serde(default = "default_half")]
    pub saturation_base: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub meeting_weighting: MeetingWeighting,
}

impl RunConfig {
    pub fn new(num_tables: usize, num_rounds: usize) -> Self {
        Self {
            num_tables,
            num_cluster_tables: 0,
            num_rounds,
            swap_rounds: default_swap_rounds(),
            pareto_mix: 0.5,
            saturation_base: 0.5,
            rng_seed: 0,
            meeting_weighting: MeetingWeighting::Raw,
        }
    }

    pub fn with_cluster_tables(mut self, n: usize) -> Self {
        self.num_cluster_tables = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_swap_rounds(mut self, n: usize) -> Self {
        self.swap_rounds = n;
        self
    }

    pub fn with_pareto_mix(mut self, p: f64) -> Self {
        self.pareto_mix = p;
        self
    }

    fn check_parameters(&self) -> Result<(), ConfigError> {
        let invalid = |name: &'static str, message: String| Err(ConfigError::InvalidParameter { name, message });
        if self.num_tables == 0 {
            return invalid("num_tables", "must be at least 1".into());
        }
        if self.num_rounds == 0 {
            return invalid("num_rounds", "must be at least 1".into());
        }
        if self.swap_rounds == 0 {
            return invalid("swap_rounds", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.pareto_mix) {
            return invalid("pareto_mix", format!("must lie in [0, 1], got {}", self.pareto_mix));
        }
        if !(self.saturation_base > 0.0 && self.saturation_base < 1.0) {
            return invalid(
                "saturation_base",
                format!("must lie strictly between 0 and 1, got {}", self.saturation_base),
            );
        }
        if self.num_cluster_tables > self.num_tables {
            return Err(ConfigError::TooManyClusterTables {
                cluster_tables: self.num_cluster_tables,
                tables: self.num_tables,
            });
        }
        Ok(())
    }
}

/// Seat counts per table and the subset of tables reserved for cluster agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableLayout {
    pub sizes: Vec<usize>,
    pub cluster_tables: BTreeSet<usize>,
}

impl TableLayout {
    /// Splits `participants` over `tables` as evenly as possible.
    ///
    /// The `participants % tables` larger tables come first, so the largest
    /// tables always have the lowest indices. Cluster tables are the first
    /// `cluster_tables` indices, which makes them the largest tables.
    pub fn balanced(participants: usize, tables: usize, cluster_tables: usize) -> Self {
        assert!(tables > 0, "layout needs at least one table");
        let lower = participants / tables;
        let upper_count = participants % tables;
        let sizes = (0..tables)
            .map(|j| if j < upper_count { lower + 1 } else { lower })
            .collect();
        Self {
            sizes,
            cluster_tables: (0..cluster_tables.min(tables)).collect(),
        }
    }

    pub fn num_tables(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_seats(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn is_cluster_table(&self, table: usize) -> bool {
        self.cluster_tables.contains(&table)
    }

    pub fn n_lower(&self) -> usize {
        self.total_seats() / self.num_tables()
    }

    pub fn n_upper(&self) -> usize {
        self.total_seats().div_ceil(self.num_tables())
    }

    /// Number of tables seating `n_upper` participants.
    pub fn z_upper(&self) -> usize {
        self.total_seats() % self.num_tables()
    }

    /// Number of tables seating `n_lower` participants.
    pub fn z_lower(&self) -> usize {
        self.num_tables() - self.z_upper()
    }

    /// Table indices ordered largest first, ties by lowest index.
    pub fn tables_by_size(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.num_tables()).collect();
        order.sort_by_key(|&j| (std::cmp::Reverse(self.sizes[j]), j));
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSuggestion {
    pub minimum: usize,
    pub recommended: usize,
}

/// Smallest number of cluster tables that can seat every cluster agent, and
/// one more than that for some slack.
pub fn suggest_cluster_tables(panel: &Panel, config: &RunConfig) -> Result<ClusterSuggestion, ConfigError> {
    let needed = panel.cluster_count();
    if needed == 0 {
        return Ok(ClusterSuggestion {
            minimum: 0,
            recommended: 0,
        });
    }
    if config.num_tables == 0 {
        return Err(ConfigError::Infeasible {
            cluster_agents: needed,
            seats: 0,
        });
    }
    let layout = TableLayout::balanced(panel.len(), config.num_tables, 0);
    let mut seats = 0;
    for (count, j) in layout.tables_by_size().into_iter().enumerate() {
        seats += layout.sizes[j];
        if seats >= needed {
            let minimum = count + 1;
            return Ok(ClusterSuggestion {
                minimum,
                recommended: (minimum + 1).min(config.num_tables),
            });
        }
    }
    Err(ConfigError::Infeasible {
        cluster_agents: needed,
        seats,
    })
}

/// Checks `config` against `panel` and derives the table layout.
pub fn validate_config(panel: &Panel, config: &RunConfig) -> Result<TableLayout, ConfigError> {
    config.check_parameters()?;
    if config.num_tables > panel.len() {
        return Err(ConfigError::TableCount {
            tables: config.num_tables,
            participants: panel.len(),
        });
    }
    let layout = TableLayout::balanced(panel.len(), config.num_tables, config.num_cluster_tables);

    // Manual assignments may vary per round through overrides.
    let mut rounds_to_check: BTreeSet<usize> = BTreeSet::from([0]);
    for p in panel.participants() {
        rounds_to_check.extend(p.manual_overrides().keys().copied().filter(|&k| k < config.num_rounds));
    }

    let capacity_error = |seats: usize| -> ConfigError {
        ConfigError::ClusterCapacity {
            cluster_agents: panel.cluster_count(),
            seats,
            suggestion: suggest_cluster_tables(panel, config).ok(),
        }
    };

    for round in rounds_to_check {
        let mut pinned = vec![0usize; layout.num_tables()];
        let mut pinned_non_cluster = vec![0usize; layout.num_tables()];
        for p in panel.participants() {
            let Some(table) = p.manual_table_for(round) else {
                continue;
            };
            if table >= layout.num_tables() {
                return Err(ConfigError::ManualConflict {
                    participant: p.id().to_owned(),
                    table,
                    reason: format!("table {} does not exist ({} tables)", table + 1, layout.num_tables()),
                });
            }
            if p.is_cluster() && !layout.is_cluster_table(table) {
                return Err(ConfigError::ManualConflict {
                    participant: p.id().to_owned(),
                    table,
                    reason: format!("cluster participant pinned to non-cluster table {}", table + 1),
                });
            }
            pinned[table] += 1;
            if !p.is_cluster() {
                pinned_non_cluster[table] += 1;
            }
            if pinned[table] > layout.sizes[table] {
                return Err(ConfigError::ManualConflict {
                    participant: p.id().to_owned(),
                    table,
                    reason: format!(
                        "more participants pinned to table {} than its {} seats",
                        table + 1,
                        layout.sizes[table]
                    ),
                });
            }
        }
        let cluster_seats: usize = layout
            .cluster_tables
            .iter()
            .map(|&j| layout.sizes[j] - pinned_non_cluster[j])
            .sum();
        if cluster_seats < panel.cluster_count() {
            return Err(capacity_error(cluster_seats));
        }
    }

    Ok(layout)
}

/// Table assignment for one round, indexed by participant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoundAllocation(pub Vec<usize>);

impl RoundAllocation {
    pub fn table_of(&self, participant: usize) -> usize {
        self.0[participant]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Members of every table `0..num_tables`, in participant order.
    pub fn members(&self, num_tables: usize) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); num_tables];
        for (i, &j) in self.0.iter().enumerate() {
            if j < num_tables {
                members[j].push(i);
            }
        }
        members
    }

    pub fn table_members(&self, table: usize) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] == table).collect()
    }

    /// Highest table index in use plus one.
    pub fn occupied_tables(&self) -> usize {
        self.0.iter().max().map_or(0, |&m| m + 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub rounds: Vec<RoundAllocation>,
}

impl AllocationPlan {
    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Checks partition, occupancy, clustering and manual invariants; reports
    /// the first violation found.
    pub fn validate(&self, panel: &Panel, layout: &TableLayout) -> Result<(), PlanViolation> {
        for (k, round) in self.rounds.iter().enumerate() {
            if round.len() != panel.len() {
                return Err(PlanViolation::WrongLength {
                    round: k,
                    expected: panel.len(),
                    actual: round.len(),
                });
            }
            let mut occupancy = vec![0usize; layout.num_tables()];
            for (i, &table) in round.0.iter().enumerate() {
                let p = panel.participant(i);
                if table >= layout.num_tables() {
                    return Err(PlanViolation::UnknownTable {
                        round: k,
                        participant: p.id().to_owned(),
                        table,
                    });
                }
                occupancy[table] += 1;
                if p.is_cluster() && !layout.is_cluster_table(table) {
                    return Err(PlanViolation::ClusterOffTable {
                        round: k,
                        participant: p.id().to_owned(),
                        table,
                    });
                }
                if let Some(pinned) = p.manual_table_for(k) {
                    if pinned != table {
                        return Err(PlanViolation::ManualMoved {
                            round: k,
                            participant: p.id().to_owned(),
                            expected: pinned,
                            actual: table,
                        });
                    }
                }
            }
            for (table, (&got, &want)) in occupancy.iter().zip(&layout.sizes).enumerate() {
                if got != want {
                    return Err(PlanViolation::Occupancy {
                        round: k,
                        table,
                        expected: want,
                        actual: got,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn binary_panel(n: usize) -> Panel {
        let participants = (0..n)
            .map(|i| {
                Participant::new(format!("p{i}"))
                    .with("age", if i % 2 == 0 { "young" } else { "old" })
                    .with("gender", if i % 3 == 0 { "f" } else { "m" })
            })
            .collect();
        Panel::new(RawPanel {
            participants,
            demographics: vec![
                Demographic::new("age", ["young", "old"]),
                Demographic::new("gender", ["f", "m"]),
            ],
            cluster: None,
        })
        .unwrap()
    }

    fn clustered_panel(n: usize, clustered: usize) -> Panel {
        let participants = (0..n)
            .map(|i| {
                Participant::new(format!("p{i}"))
                    .with("age", if i % 2 == 0 { "young" } else { "old" })
                    .with("media", if i < clustered { "no" } else { "yes" })
            })
            .collect();
        Panel::new(RawPanel {
            participants,
            demographics: vec![Demographic::new("age", ["young", "old"])],
            cluster: Some(ClusterSpec {
                demographic: "media".into(),
                value: "no".into(),
            }),
        })
        .unwrap()
    }

    #[test]
    fn well_formed_binary_panel_has_no_issues() {
        let raw = binary_panel(12).to_raw();
        assert!(raw.validate(None).is_empty());
    }

    #[test]
    fn seven_value_demographic_warns() {
        let cities = ["a", "b", "c", "d", "e", "f", "g"];
        let participants = (0..14)
            .map(|i| Participant::new(format!("p{i}")).with("city", cities[i % 7]))
            .collect();
        let raw = RawPanel {
            participants,
            demographics: vec![Demographic::new("city", cities)],
            cluster: None,
        };
        let issues = raw.validate(None);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::ManyValues);
        assert_eq!(issues[0].severity, Severity::Warning);
        assert!(issues[0].message.contains("merging"));
        assert!(Panel::new(raw).is_ok());
    }

    #[test]
    fn missing_value_is_an_error() {
        let mut raw = binary_panel(6).to_raw();
        raw.participants[3] = Participant::new("p3").with("age", "old");
        let issues = raw.validate(None);
        assert!(issues
            .iter()
            .any(|i| i.kind == IssueKind::MissingValue && i.participant.as_deref() == Some("p3")));
        let err = Panel::new(raw).unwrap_err();
        assert!(err.issues.iter().any(ValidationIssue::is_error));
    }

    #[test]
    fn sparse_value_warns_when_tables_known() {
        let mut raw = binary_panel(12).to_raw();
        raw.participants[0].set_attribute("gender", "f");
        for p in raw.participants.iter_mut().skip(1) {
            p.set_attribute("gender", "m");
        }
        assert!(raw.validate(None).is_empty());
        let issues = raw.validate(Some(3));
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::SparseValue);
    }

    #[test]
    fn duplicate_ids_and_single_value_demographics_are_errors() {
        let raw = RawPanel {
            participants: vec![Participant::new("a").with("x", "1"), Participant::new("a").with("x", "1")],
            demographics: vec![Demographic::new("x", ["1"])],
            cluster: None,
        };
        let kinds: Vec<IssueKind> = raw.validate(None).iter().map(|i| i.kind).collect();
        assert!(kinds.contains(&IssueKind::DuplicateId));
        assert!(kinds.contains(&IssueKind::TooFewValues));
    }

    #[test]
    fn layout_sizes_follow_z_counts() {
        let l = TableLayout::balanced(30, 3, 0);
        assert_eq!(l.sizes, vec![10, 10, 10]);
        assert_eq!((l.z_upper(), l.z_lower()), (0, 3));

        let l = TableLayout::balanced(31, 3, 1);
        assert_eq!(l.sizes, vec![11, 10, 10]);
        assert_eq!((l.z_upper(), l.z_lower()), (1, 2));
        assert_eq!((l.n_lower(), l.n_upper()), (10, 11));
        assert!(l.is_cluster_table(0));
    }

    #[test]
    fn cluster_flag_is_derived() {
        let panel = clustered_panel(30, 15);
        assert_eq!(panel.cluster_count(), 15);
        assert!(panel.is_cluster(0));
        assert!(!panel.is_cluster(29));
    }

    #[test]
    fn cluster_capacity_error_carries_suggestion() {
        // 30 participants over 6 tables of 5.
        let panel = clustered_panel(30, 15);
        let config = RunConfig::new(6, 3).with_cluster_tables(2);
        match validate_config(&panel, &config) {
            Err(ConfigError::ClusterCapacity { suggestion, seats, .. }) => {
                assert_eq!(seats, 10);
                assert_eq!(
                    suggestion,
                    Some(ClusterSuggestion {
                        minimum: 3,
                        recommended: 4
                    })
                );
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
        assert!(validate_config(&panel, &config.with_cluster_tables(3)).is_ok());
    }

    #[test]
    fn suggestion_edge_cases() {
        let config = RunConfig::new(3, 1);
        let none = suggest_cluster_tables(&binary_panel(30), &config).unwrap();
        assert_eq!((none.minimum, none.recommended), (0, 0));

        let six = suggest_cluster_tables(&clustered_panel(30, 6), &config).unwrap();
        assert_eq!((six.minimum, six.recommended), (1, 2));

        // Recommended is capped at the table count.
        let all = suggest_cluster_tables(&clustered_panel(30, 30), &config).unwrap();
        assert_eq!((all.minimum, all.recommended), (3, 3));
    }

    #[test]
    fn too_many_tables_is_rejected() {
        let panel = binary_panel(4);
        assert!(matches!(
            validate_config(&panel, &RunConfig::new(5, 1)),
            Err(ConfigError::TableCount { .. })
        ));
    }

    #[test]
    fn manual_conflicts() {
        let mut raw = clustered_panel(12, 3).to_raw();
        raw.participants[0].set_manual_table(Some(2));
        let panel = Panel::new(raw).unwrap();
        let err = validate_config(&panel, &RunConfig::new(3, 2).with_cluster_tables(1)).unwrap_err();
        assert!(matches!(err, ConfigError::ManualConflict { table: 2, .. }), "{err:?}");

        let mut raw = binary_panel(6).to_raw();
        for p in raw.participants.iter_mut().take(4) {
            p.set_manual_table(Some(0));
        }
        let panel = Panel::new(raw).unwrap();
        assert!(matches!(
            validate_config(&panel, &RunConfig::new(2, 2)),
            Err(ConfigError::ManualConflict { .. })
        ));
    }

    #[test]
    fn pinned_non_cluster_agents_reduce_cluster_capacity() {
        // 12 participants, 3 tables of 4, 4 cluster agents, one cluster table.
        let mut raw = clustered_panel(12, 4).to_raw();
        raw.participants[11].set_manual_table(Some(0));
        let panel = Panel::new(raw).unwrap();
        assert!(matches!(
            validate_config(&panel, &RunConfig::new(3, 1).with_cluster_tables(1)),
            Err(ConfigError::ClusterCapacity { seats: 3, .. })
        ));
    }

    #[test]
    fn parameter_ranges_are_checked() {
        let panel = binary_panel(10);
        for bad in [
            RunConfig::new(2, 1).with_pareto_mix(1.5),
            RunConfig::new(2, 1).with_swap_rounds(0),
            RunConfig::new(2, 0),
            RunConfig::new(2, 1).with_cluster_tables(3),
        ] {
            assert!(validate_config(&panel, &bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn plan_validation_reports_first_violation() {
        let panel = binary_panel(4);
        let layout = TableLayout::balanced(4, 2, 0);
        let good = AllocationPlan {
            rounds: vec![RoundAllocation(vec![0, 0, 1, 1])],
        };
        assert!(good.validate(&panel, &layout).is_ok());
        let bad = AllocationPlan {
            rounds: vec![RoundAllocation(vec![0, 0, 0, 1])],
        };
        assert!(matches!(
            bad.validate(&panel, &layout),
            Err(PlanViolation::Occupancy { table: 0, .. })
        ));
    }
}
