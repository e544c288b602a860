use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use groupopt_core::evaluation::build_report;
use groupopt_core::io::{self, ConfigFile, IoError, LoadedPanel, ReportDocument};
use groupopt_core::{validate_config, Allocator, ConfigError, RunReport};

mod bench;

#[derive(Parser)]
#[command(name = "groupopt", version, about = "Allocate panel participants to discussion tables over several rounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Allocate a panel and write the allocation table and report.
    Allocate(AllocateArgs),
    /// Recompute a report from an existing allocation table.
    Evaluate(EvaluateArgs),
    /// Run an experiment grid over synthetic panels.
    Bench(bench::BenchArgs),
}

/// Values that take precedence over the configuration file.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// Random seed. Falls back to GROUPOPT_SEED, then to the configuration file.
    #[arg(long, env = "GROUPOPT_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    tables: Option<usize>,
    #[arg(long = "cluster-tables")]
    cluster_tables: Option<usize>,
    #[arg(long = "swap-rounds")]
    swap_rounds: Option<usize>,
    #[arg(long = "pareto-mix")]
    pareto_mix: Option<f64>,
}

impl Overrides {
    fn apply(&self, config: &mut ConfigFile) {
        let run = &mut config.run;
        if let Some(seed) = self.seed {
            run.rng_seed = seed;
        }
        if let Some(v) = self.rounds {
            run.num_rounds = v;
        }
        if let Some(v) = self.tables {
            run.num_tables = v;
        }
        if let Some(v) = self.cluster_tables {
            run.num_cluster_tables = v;
        }
        if let Some(v) = self.swap_rounds {
            run.swap_rounds = v;
        }
        if let Some(v) = self.pareto_mix {
            run.pareto_mix = v;
        }
    }
}

#[derive(Args)]
struct AllocateArgs {
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Output directory for allocations.csv and report.json.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    allocations: PathBuf,
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Failure with its process exit status.
#[derive(Debug)]
pub(crate) enum Failure {
    /// Exit 1.
    Io(String),
    /// Exit 2.
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Invalid(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Invalid(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(err: IoError) -> Self {
        match err {
            IoError::Io(e) => Failure::Io(e.to_string()),
            IoError::Invalid { issues } => Failure::Invalid(
                issues
                    .iter()
                    .filter(|i| i.is_error())
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("\n"),
            ),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(err: ConfigError) -> Self {
        Failure::Invalid(format!("invalid configuration: {err}"))
    }
}

fn io_failure(path: &Path, err: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {err}", path.display()))
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(|e| io_failure(&tmp, e))?;
    file.write_all(bytes).map_err(|e| io_failure(&tmp, e))?;
    file.sync_all().map_err(|e| io_failure(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_failure(path, e))
}

fn load_inputs(panel: &Path, config: &Path, overrides: &Overrides) -> Result<(ConfigFile, LoadedPanel), Failure> {
    let mut config = ConfigFile::load(config).map_err(|e| match e {
        IoError::Io(err) => io_failure(config, err),
        other => Failure::from(other),
    })?;
    overrides.apply(&mut config);
    let file = fs::File::open(panel).map_err(|e| io_failure(panel, e))?;
    let loaded = io::load_panel(file, &config)?;
    for warning in &loaded.warnings {
        eprintln!("{warning}");
    }
    Ok((config, loaded))
}

fn print_summary(report: &RunReport, seed: u64) {
    println!(
        "participants {}, tables {}, rounds {}, seed {seed}",
        report.participants, report.num_tables, report.num_rounds
    );
    println!("mean distance     {:.4}", report.mean_distance);
    println!("geometric score   {:.4}", report.geometric_score);
    println!(
        "unmet pairs       {} of {} (bound {})",
        report.unmet_pairs, report.bounds.pairs_total, report.bounds.min_unmet_pairs
    );
    match (report.excess, &report.excess_note) {
        (Some(excess), _) => println!("excess            {excess:.4}"),
        (None, Some(note)) => println!("excess            n/a ({note})"),
        (None, None) => println!("excess            n/a"),
    }
    if let Some(fraction) = report.first_meeting_fraction {
        println!("first meetings    {fraction:.4} of maximum");
    }
}

fn allocate(args: AllocateArgs) -> Result<(), Failure> {
    let (config, loaded) = load_inputs(&args.panel, &args.config, &args.overrides)?;
    let panel = &loaded.panel;
    let allocator = Allocator::new(panel, &config.run).map_err(|e| Failure::Invalid(e.to_string()))?;
    let outcome = allocator.run().map_err(|e| Failure::Invalid(e.to_string()))?;

    let report = build_report(&outcome.plan, panel, &outcome.layout, &config.run);
    let doc = ReportDocument::new(&config.run, report);

    let mut allocations = Vec::new();
    io::write_allocations(&outcome.plan, panel, &outcome.layout, &mut allocations)?;

    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let allocations_path = args.out.join("allocations.csv");
    let report_path = args.out.join("report.json");
    write_atomic(&allocations_path, &allocations)?;
    write_atomic(&report_path, doc.to_json()?.as_bytes())?;

    print_summary(&doc.report, doc.seed);
    println!("wrote {} and {}", allocations_path.display(), report_path.display());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let (mut config, loaded) = load_inputs(&args.panel, &args.config, &args.overrides)?;
    let panel = &loaded.panel;
    let file = fs::File::open(&args.allocations).map_err(|e| io_failure(&args.allocations, e))?;
    let plan = io::read_allocations(file, panel)?;
    config.run.num_rounds = plan.num_rounds().max(1);
    let layout = validate_config(panel, &config.run)?;
    plan.validate(panel, &layout)
        .map_err(|v| Failure::Invalid(format!("allocation violates plan invariants: {v}")))?;

    let doc = ReportDocument::new(&config.run, build_report(&plan, panel, &layout, &config.run));
    let json = doc.to_json()?;
    match &args.out {
        Some(path) => {
            write_atomic(path, json.as_bytes())?;
            print_summary(&doc.report, doc.seed);
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Allocate(args) => allocate(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Bench(args) => bench::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
