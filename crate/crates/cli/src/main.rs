use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lambda_cli::{demo_config, emit_report, parse_config, run_experiments, ExperimentConfig, Format, Status};

#[derive(Parser)]
#[command(name = "lambda-lab", version, about = "Internal-time and Λ-transformation experiments on finite cascades")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a config and write the report bundle.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run the built-in demonstration config.
    Demo {
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Output {
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_GATE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_USAGE)
    })?;
    parse_config(&text).map_err(|errs| {
        for e in &errs.0 {
            eprintln!("{}: {e}", path.display());
        }
        ExitCode::from(EXIT_USAGE)
    })
}

fn execute(mut config: ExperimentConfig, output: Output) -> ExitCode {
    if let Some(seed) = output.seed {
        config.seed = seed;
    }
    let dir = output.out.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("lambda-report"));
    let bundle = run_experiments(&config);
    for r in &bundle.experiments {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        };
        let gate = if r.gated { "" } else { " (ungated)" };
        match &r.error {
            Some(e) => println!("{status:5} {}{gate}: {e}", r.name),
            None => println!("{status:5} {}{gate}", r.name),
        }
    }
    match emit_report(&bundle, &dir, output.format) {
        Ok(files) => println!("wrote {} files to {}", files.len(), dir.display()),
        Err(e) => {
            eprintln!("error: cannot write report to {}: {e}", dir.display());
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let s = &bundle.summary;
    println!("{} passed, {} failed, {} errored; {} gated failures", s.passed, s.failed, s.errored, s.gated_failures);
    if bundle.exit_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_GATE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("{}: ok, {} experiments", config.display(), c.experiments.len());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, output } => match load(&config) {
            Ok(c) => execute(c, output),
            Err(code) => code,
        },
        Command::Demo { output } => execute(demo_config(), output),
    }
}
