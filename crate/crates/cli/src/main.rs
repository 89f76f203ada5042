use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use reflect_hull::harness::{
    emit_report, preset, run_experiment, ConvergenceReport, ExperimentConfig, HarnessError, ReportFormat, PRESETS,
};

#[derive(Parser)]
#[command(name = "reflect-hull", version, about = "Convex-hull estimation of reflected diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config or the default suite.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Flat key = value experiment file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment, or `all` for the default suite.
    #[arg(long, default_value = "all")]
    preset: String,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's output.path, else `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Also run the step-1 bound and hitting diagnostics; fails on any bound violation.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => Self::Csv,
            Format::Json => Self::Json,
            Format::Both => Self::Both,
        }
    }
}

fn configs(args: &RunArgs) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let mut configs = match &args.config {
        Some(path) => vec![ExperimentConfig::from_file(path)?],
        None if args.preset == "all" => PRESETS.iter().filter_map(|p| preset(p)).collect(),
        None => vec![preset(&args.preset).ok_or_else(|| {
            HarnessError::Invalid(format!("unknown preset {:?}; expected one of {:?} or all", args.preset, PRESETS))
        })?],
    };
    for config in &mut configs {
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        if args.check {
            config.keep_h = true;
            config.step1_check = true;
        }
        config.prepare()?;
    }
    Ok(configs)
}

fn print_summary(report: &ConvergenceReport) {
    let c = &report.config;
    println!("{}: {} rows in {:.1} s", c.name, report.rows.len(), report.metadata.wall_clock_seconds);
    for s in &report.series {
        let medians: Vec<String> = s.cells.iter().map(|cell| format!("{:.3e}", cell.median)).collect();
        let label = if s.probe_index < 0 { "d_H".to_string() } else { format!("probe {}", s.probe_index) };
        let slope = s.fit.as_ref().map_or("-".to_string(), |f| format!("{:.3}", f.slope));
        println!("  j={:<3} {label:<8} medians [{}] slope {slope}", s.j, medians.join(", "));
        if let Some(scaled) = s.scaled_medians() {
            let scaled: Vec<String> = scaled.iter().map(|v| format!("{v:.3e}")).collect();
            println!("  j={:<3} N*d_H    medians [{}]", s.j, scaled.join(", "));
        }
    }
    if let Some(step1) = &report.diagnostics.step1 {
        println!(
            "  step-1 bound: {} violations in {} checks (c1 {:.6}, c2 {:.6})",
            step1.violations, step1.checked, step1.constants.c1, step1.constants.c2
        );
    }
    for hit in &report.diagnostics.hits {
        println!(
            "  hits j={} probe {}: {} of {}",
            hit.j, hit.probe_index, hit.report.hits, hit.report.copies
        );
    }
}

fn run(args: RunArgs) -> Result<(), HarnessError> {
    let configs = configs(&args)?;
    for config in configs {
        let out = args
            .out
            .clone()
            .or_else(|| config.output.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"));
        let report = run_experiment(&config)?;
        for path in emit_report(&report, &out, args.format.into())? {
            println!("wrote {}", path.display());
        }
        print_summary(&report);
        if args.check {
            if let Some(step1) = report.diagnostics.step1.as_ref().filter(|s| s.violations > 0) {
                return Err(HarnessError::Run {
                    n: config.diagnostic_copies,
                    replication: 0,
                    j: step1.worst_at.map_or(0, |w| w.1 + 1),
                    message: format!("{} step-1 bound violations", step1.violations),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
