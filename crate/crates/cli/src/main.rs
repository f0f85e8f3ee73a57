use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use quest_core::scenario::{self, OutputFormat, RunOutcome, ScenarioConfig, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    OverlapCurve,
    AltitudeCurve,
    ZenithCurve,
    PassSim,
    Sensitivity,
    DetectorAging,
    LinkBudget,
    ChannelVerify,
    /// Every subcommand, one directory each.
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Gravitational-decoherence link simulator.
#[derive(Debug, Parser)]
#[command(name = "quest-sim", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario TOML; the shipped worst case when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERIC: u8 = 2;

fn print_outcome(out: &RunOutcome, dir: &std::path::Path) {
    println!("[{}]", out.manifest.subcommand);
    for line in &out.report.summary {
        println!("  {line}");
    }
    println!("  wrote {} file(s) and manifest.json to {}", out.manifest.outputs.len(), dir.display());
}

fn run(cli: Cli) -> quest_core::Result<()> {
    let cfg = match &cli.config {
        Some(p) => scenario::load_config(p)?,
        None => ScenarioConfig::default_worst_case(),
    };
    let seed = cli.seed.unwrap_or(cfg.seed);
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let sub = match cli.command {
        Command::OverlapCurve => Subcommand::OverlapCurve,
        Command::AltitudeCurve => Subcommand::AltitudeCurve,
        Command::ZenithCurve => Subcommand::ZenithCurve,
        Command::PassSim => Subcommand::PassSim,
        Command::Sensitivity => Subcommand::Sensitivity,
        Command::DetectorAging => Subcommand::DetectorAging,
        Command::LinkBudget => Subcommand::LinkBudget,
        Command::ChannelVerify => Subcommand::ChannelVerify,
        Command::All => {
            for (out, s) in scenario::run_all(&cfg, seed, &dir, format)?.iter().zip(Subcommand::ALL) {
                print_outcome(out, &dir.join(s.name()));
            }
            return Ok(());
        }
    };
    let out = scenario::run_subcommand(sub, &cfg, seed, &dir, format)?;
    print_outcome(&out, &dir);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERIC })
        }
    }
}
