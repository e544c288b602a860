//! Experiment grid over synthetic data sets.
//!
//! Every cell is one (data set, table count, round count) combination, run
//! once per seed, with a random-allocation baseline per cell.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use groupopt_core::evaluation::{build_report, random_baseline, BaselineSummary};
use groupopt_core::synthetic::{tables_near_ten, SyntheticShape};
use groupopt_core::{suggest_cluster_tables, Allocator, Panel, RunConfig, RunReport};
use serde::Deserialize;

use crate::{write_atomic, Failure};

#[derive(Args)]
pub struct BenchArgs {
    /// Grid specification (JSON, or TOML with a .toml extension).
    #[arg(long)]
    suite: PathBuf,
    /// Seeds per cell.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Output directory for cells.csv, curves.csv and excess.csv.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

fn default_offsets() -> Vec<i64> {
    vec![-1, 0, 1]
}

fn default_swap_rounds() -> usize {
    5
}

fn default_mix() -> f64 {
    0.5
}

fn default_baseline() -> usize {
    100
}

fn default_data_seed() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub rounds: Vec<usize>,
    /// Offsets applied to each data set's base table count.
    #[serde(default = "default_offsets")]
    pub table_offsets: Vec<i64>,
    #[serde(default = "default_swap_rounds")]
    pub swap_rounds: usize,
    #[serde(default = "default_mix")]
    pub pareto_mix: f64,
    #[serde(default = "default_baseline")]
    pub baseline_seeds: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    /// Synthetic preset: hd30, sf40, sf40_4d, hd60, hd100 or hd120.
    pub preset: String,
    pub size: Option<usize>,
    #[serde(default)]
    pub clustering: bool,
    #[serde(default = "default_data_seed")]
    pub data_seed: u64,
    /// Base table count; defaults to tables of about ten.
    pub tables: Option<usize>,
}

impl Suite {
    fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Failure::Invalid(format!("grid specification: {e}")))
    }
}

struct CellResult {
    dataset: String,
    clustering: bool,
    config: RunConfig,
    reports: Vec<RunReport>,
    baseline: BaselineSummary,
}

fn run_cell(panel: &Panel, config: &RunConfig, seeds: u64, suite: &Suite) -> Result<(Vec<RunReport>, BaselineSummary), String> {
    let mut reports = Vec::new();
    for s in 0..seeds {
        let seeded = config.clone().with_seed(suite.seed + s);
        let allocator = Allocator::new(panel, &seeded).map_err(|e| e.to_string())?;
        let outcome = allocator.run().map_err(|e| e.to_string())?;
        reports.push(build_report(&outcome.plan, panel, &outcome.layout, &seeded));
    }
    let layout = groupopt_core::validate_config(panel, config).map_err(|e| e.to_string())?;
    let baseline = random_baseline(panel, &layout, config, suite.baseline_seeds).map_err(|e| e.to_string())?;
    Ok((reports, baseline))
}

fn table_counts(base: usize, offsets: &[i64], size: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = offsets
        .iter()
        .filter_map(|&o| usize::try_from(base as i64 + o).ok())
        .filter(|&t| t >= 1 && t <= size)
        .collect();
    counts.dedup();
    counts
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(args: BenchArgs) -> Result<(), Failure> {
    let suite = Suite::load(&args.suite)?;
    let mut results = Vec::new();
    let mut failed = Vec::new();

    for dataset in &suite.datasets {
        let Some(mut shape) = SyntheticShape::preset(&dataset.preset) else {
            failed.push(format!("{}: unknown preset '{}'", dataset.name, dataset.preset));
            continue;
        };
        if let Some(size) = dataset.size {
            shape = shape.with_size(size);
        }
        let panel = match Panel::new(shape.generate(dataset.data_seed, dataset.clustering)) {
            Ok(p) => p,
            Err(e) => {
                failed.push(format!("{}: {e}", dataset.name));
                continue;
            }
        };
        let base = dataset.tables.unwrap_or_else(|| tables_near_ten(panel.len()));
        for tables in table_counts(base, &suite.table_offsets, panel.len()) {
            for &rounds in &suite.rounds {
                let mut config = RunConfig::new(tables, rounds)
                    .with_swap_rounds(suite.swap_rounds)
                    .with_pareto_mix(suite.pareto_mix);
                // Binding: the fewest cluster tables that can seat every cluster participant.
                if let Ok(s) = suggest_cluster_tables(&panel, &config) {
                    config.num_cluster_tables = s.minimum;
                }
                let label = format!("{} tables={tables} rounds={rounds}", dataset.name);
                match run_cell(&panel, &config, args.seeds, &suite) {
                    Ok((reports, baseline)) => {
                        let mean = reports.iter().map(|r| r.geometric_score).sum::<f64>() / reports.len().max(1) as f64;
                        println!(
                            "{label}: mean score {mean:.2} (random {:.2})",
                            baseline.geometric_score.mean
                        );
                        results.push(CellResult {
                            dataset: dataset.name.clone(),
                            clustering: panel.has_clustering(),
                            config,
                            reports,
                            baseline,
                        });
                    }
                    Err(e) => {
                        eprintln!("{label}: failed: {e}");
                        failed.push(format!("{label}: {e}"));
                    }
                }
            }
        }
    }

    write_outputs(&args.out, &results, suite.seed)?;

    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Io(format!("{} cell(s) failed:\n{}", failed.len(), failed.join("\n"))))
    }
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

fn write_outputs(out: &Path, results: &[CellResult], base_seed: u64) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;

    let mut cells = Vec::new();
    let mut curves = Vec::new();
    let mut excess = Vec::new();
    for cell in results {
        for (s, report) in cell.reports.iter().enumerate() {
            let seed = (base_seed + s as u64).to_string();
            let key = vec![
                cell.dataset.clone(),
                cell.config.num_tables.to_string(),
                cell.config.num_rounds.to_string(),
                seed.clone(),
            ];
            let mut row = key.clone();
            row.extend([
                cell.clustering.to_string(),
                report.participants.to_string(),
                cell.config.num_cluster_tables.to_string(),
                report.geometric_score.to_string(),
                report.mean_distance.to_string(),
                report.unmet_pairs.to_string(),
                report.bounds.min_unmet_pairs.to_string(),
                fmt_opt(report.excess),
                fmt_opt(report.first_meeting_fraction),
                cell.baseline.geometric_score.mean.to_string(),
                cell.baseline.mean_distance.mean.to_string(),
            ]);
            cells.push(row);
            for (k, row) in report.meeting_curves.iter().enumerate() {
                for (m, &pairs) in row.iter().enumerate() {
                    let mut r = key.clone();
                    r.extend([(k + 1).to_string(), m.to_string(), pairs.to_string()]);
                    curves.push(r);
                }
            }
            if let Some(x) = report.excess {
                let mut r = key;
                r.push(x.to_string());
                excess.push(r);
            }
        }
    }

    let key = ["dataset", "tables", "rounds", "seed"];
    let cells_header: Vec<&str> = key
        .iter()
        .copied()
        .chain([
            "clustering",
            "participants",
            "cluster_tables",
            "geometric_score",
            "mean_distance",
            "unmet_pairs",
            "min_unmet_pairs",
            "excess",
            "first_meeting_fraction",
            "baseline_geometric_mean",
            "baseline_mean_distance",
        ])
        .collect();
    let curves_header: Vec<&str> = key.iter().copied().chain(["round", "m", "pairs"]).collect();
    let excess_header: Vec<&str> = key.iter().copied().chain(["excess"]).collect();

    write_atomic(&out.join("cells.csv"), &csv_bytes(&cells_header, cells)?)?;
    write_atomic(&out.join("curves.csv"), &csv_bytes(&curves_header, curves)?)?;
    write_atomic(&out.join("excess.csv"), &csv_bytes(&excess_header, excess)?)?;
    Ok(())
}
