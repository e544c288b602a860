//! Synthetic panels shaped like typical deliberative-panel data sets.
//!
//! Each column draws an exact number of holders per value (largest-remainder
//! rounding of the column's weights) and shuffles them over participants, so
//! marginals are fixed and only the joint distribution is random.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::allocator::RngStream;
use crate::io::{ClusterColumn, ColumnSpec};
use crate::model::{ClusterSpec, Demographic, Participant, RawPanel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnShape {
    pub name: String,
    pub values: Vec<String>,
    pub weights: Vec<f64>,
}

impl ColumnShape {
    fn new(name: &str, values: &[&str], weights: &[f64]) -> Self {
        assert_eq!(values.len(), weights.len());
        Self {
            name: name.to_owned(),
            values: values.iter().map(|v| v.to_string()).collect(),
            weights: weights.to_vec(),
        }
    }

    /// Holders per value for a panel of `size`, summing exactly to `size`.
    pub fn counts(&self, size: usize) -> Vec<usize> {
        let total: f64 = self.weights.iter().sum();
        let exact: Vec<f64> = self.weights.iter().map(|w| w / total * size as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let short = size - counts.iter().sum::<usize>();
        for &v in order.iter().take(short) {
            counts[v] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticShape {
    pub name: String,
    pub size: usize,
    pub columns: Vec<ColumnShape>,
    /// Column name and value that mark clustered participants.
    pub cluster: Option<(String, String)>,
}

impl SyntheticShape {
    /// 30 participants, three binary columns, one usable for clustering.
    pub fn hd30() -> Self {
        Self {
            name: "hd30".into(),
            size: 30,
            columns: vec![
                ColumnShape::new("gender", &["female", "male"], &[0.5, 0.5]),
                ColumnShape::new("age", &["under_45", "45_plus"], &[0.45, 0.55]),
                ColumnShape::new("media_consent", &["yes", "no"], &[0.7, 0.3]),
            ],
            cluster: Some(("media_consent".into(), "no".into())),
        }
    }

    /// 40 participants: four binary columns (one for clustering) plus
    /// three-, four- and five-level columns.
    pub fn sf40() -> Self {
        Self {
            name: "sf40".into(),
            size: 40,
            columns: vec![
                ColumnShape::new("gender", &["female", "male"], &[0.5, 0.5]),
                ColumnShape::new("degree", &["yes", "no"], &[0.35, 0.65]),
                ColumnShape::new("urban", &["urban", "rural"], &[0.6, 0.4]),
                ColumnShape::new("age", &["16_29", "30_59", "60_plus"], &[0.25, 0.5, 0.25]),
                ColumnShape::new("region", &["north", "south", "east", "west"], &[0.3, 0.25, 0.25, 0.2]),
                ColumnShape::new(
                    "attitude",
                    &["very_low", "low", "mid", "high", "very_high"],
                    &[0.15, 0.2, 0.3, 0.2, 0.15],
                ),
                ColumnShape::new("media_consent", &["yes", "no"], &[0.75, 0.25]),
            ],
            cluster: Some(("media_consent".into(), "no".into())),
        }
    }

    /// The four-column subset of `sf40` without the clustering column.
    pub fn sf40_reduced() -> Self {
        let mut shape = Self::sf40();
        shape.name = "sf40_4d".into();
        shape.columns.retain(|c| ["gender", "degree", "age", "region"].contains(&c.name.as_str()));
        shape.cluster = None;
        shape
    }

    /// Four binary columns (one for clustering) and one four-level column,
    /// at any panel size.
    pub fn hd_scaled(size: usize) -> Self {
        Self {
            name: format!("hd{size}"),
            size,
            columns: vec![
                ColumnShape::new("gender", &["female", "male"], &[0.5, 0.5]),
                ColumnShape::new("age", &["under_45", "45_plus"], &[0.45, 0.55]),
                ColumnShape::new("ethnicity", &["majority", "minority"], &[0.8, 0.2]),
                ColumnShape::new("region", &["north", "south", "east", "west"], &[0.3, 0.25, 0.25, 0.2]),
                ColumnShape::new("media_consent", &["yes", "no"], &[0.7, 0.3]),
            ],
            cluster: Some(("media_consent".into(), "no".into())),
        }
    }

    /// 120 participants, the `hd_scaled` columns without clustering.
    pub fn hd120() -> Self {
        let mut shape = Self::hd_scaled(120);
        shape.columns.retain(|c| c.name != "media_consent");
        shape.cluster = None;
        shape
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "hd30" => Some(Self::hd30()),
            "sf40" => Some(Self::sf40()),
            "sf40_4d" => Some(Self::sf40_reduced()),
            "hd100" => Some(Self::hd_scaled(100)),
            "hd60" => Some(Self::hd_scaled(60)),
            "hd120" => Some(Self::hd120()),
            _ => None,
        }
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.size = size;
        self
    }

    /// Columns balanced across tables. With clustering the cluster column is
    /// a constraint rather than a balancing target.
    pub fn diversification_columns(&self, clustering: bool) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| !(clustering && self.cluster.as_ref().is_some_and(|(name, _)| name == &c.name)))
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn column_spec(&self, clustering: bool) -> ColumnSpec {
        ColumnSpec {
            id: "id".into(),
            demographics: self.diversification_columns(clustering),
            cluster: self
                .cluster
                .as_ref()
                .filter(|_| clustering)
                .map(|(column, value)| ClusterColumn {
                    column: column.clone(),
                    value: value.clone(),
                }),
            manual: None,
        }
    }

    /// Deterministic panel for `seed`. `clustering` enables the cluster
    /// column as a constraint when the shape has one.
    pub fn generate(&self, seed: u64, clustering: bool) -> RawPanel {
        let mut rng = RngStream::from_seed(seed);
        let width = self.size.to_string().len().max(3);
        let mut participants: Vec<Participant> = (0..self.size)
            .map(|i| Participant::new(format!("P{:0width$}", i + 1)))
            .collect();
        for column in &self.columns {
            let mut labels: Vec<&str> = column
                .counts(self.size)
                .iter()
                .zip(&column.values)
                .flat_map(|(&n, v)| std::iter::repeat_n(v.as_str(), n))
                .collect();
            labels.shuffle(&mut rng);
            for (p, label) in participants.iter_mut().zip(labels) {
                p.set_attribute(&column.name, label);
            }
        }
        let diversified = self.diversification_columns(clustering);
        RawPanel {
            participants,
            demographics: self
                .columns
                .iter()
                .filter(|c| diversified.contains(&c.name))
                .map(|c| Demographic {
                    name: c.name.clone(),
                    values: c.values.clone(),
                })
                .collect(),
            cluster: self
                .cluster
                .as_ref()
                .filter(|_| clustering)
                .map(|(demographic, value)| ClusterSpec {
                    demographic: demographic.clone(),
                    value: value.clone(),
                }),
        }
    }
}

/// Table count giving tables closest to ten seats.
pub fn tables_near_ten(participants: usize) -> usize {
    ((participants as f64 / 10.0).round() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Panel;

    #[test]
    fn counts_sum_to_size() {
        let c = ColumnShape::new("x", &["a", "b", "c"], &[1.0, 1.0, 1.0]);
        assert_eq!(c.counts(10), vec![4, 3, 3]);
        assert_eq!(c.counts(30), vec![10, 10, 10]);
    }

    #[test]
    fn presets_build_valid_panels() {
        for name in ["hd30", "sf40", "sf40_4d", "hd100", "hd60", "hd120"] {
            let shape = SyntheticShape::preset(name).unwrap();
            for clustering in [false, true] {
                let panel = Panel::new(shape.generate(1, clustering)).unwrap();
                assert_eq!(panel.len(), shape.size);
                if !clustering || shape.cluster.is_none() {
                    assert_eq!(panel.cluster_count(), 0);
                }
            }
        }
    }

    #[test]
    fn hd30_shape() {
        let shape = SyntheticShape::hd30();
        let plain = Panel::new(shape.generate(3, false)).unwrap();
        assert_eq!(plain.demographics().len(), 3);
        assert!(plain.demographics().iter().all(|d| d.values.len() == 2));
        let clustered = Panel::new(shape.generate(3, true)).unwrap();
        assert_eq!(clustered.demographics().len(), 2);
        assert_eq!(clustered.cluster_count(), 9);
    }

    #[test]
    fn generation_is_deterministic() {
        let shape = SyntheticShape::sf40();
        assert_eq!(shape.generate(9, true), shape.generate(9, true));
        assert_ne!(shape.generate(9, true), shape.generate(10, true));
    }

    #[test]
    fn table_counts_near_ten() {
        assert_eq!(tables_near_ten(30), 3);
        assert_eq!(tables_near_ten(44), 4);
        assert_eq!(tables_near_ten(5), 1);
    }
}
