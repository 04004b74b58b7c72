use std::path::PathBuf;
use std::process::ExitCode;

use banditproof_cli::report::write_summary_csv;
use banditproof_cli::suite::{emit_suite, write_suite_csv};
use banditproof_cli::{
    default_suite, emit_reports, run_experiment, run_suite, ExperimentConfig, Format,
    HarnessError, RunOptions, SuiteConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "banditproof", version, about = "Run verification protocols and lower-bound labs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-message verification of a smooth bandit strategy.
    VerifyBandit(Common),
    /// Check that a given strategy is near-optimal.
    VerifyStrategy(Common),
    /// Check a smooth equilibrium profile of a game.
    VerifyGame(Common),
    /// Commitment-based verification that outputs a value.
    Lowcomm(Common),
    /// Coin-bias reduction.
    LbCoin(Common),
    /// Budgeted learners on hard instances.
    LbLearning(Common),
    /// Run the acceptance matrix (built in unless --config is given).
    Suite(SuiteArgs),
}

#[derive(Args)]
struct Output {
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per experiment; overrides the config.
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory. Without it the summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Include full transcripts in JSON output.
    #[arg(long)]
    transcripts: bool,
    /// Record per-trial wall time in JSON output.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the built-in suite as JSON and exit.
    #[arg(long)]
    print_default: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl Output {
    fn options(&self) -> RunOptions {
        RunOptions {
            workers: self.workers,
            transcripts: self.transcripts,
            timing: self.timing,
        }
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn read(path: &PathBuf) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn run_single(command: &str, args: &Common) -> Result<bool, HarnessError> {
    let mut config = ExperimentConfig::from_json(&read(&args.config)?)?;
    if config.protocol.command() != command {
        return Err(HarnessError::Config(format!(
            "config is for `{}`, not `{command}`",
            config.protocol.command()
        )));
    }
    if let Some(s) = args.output.seed {
        config.seed = s;
    }
    if let Some(t) = args.output.trials {
        config.trials = t;
    }
    let report = run_experiment(&config, &args.output.options())?;
    match &args.output.out {
        Some(dir) => {
            emit_reports(dir, std::slice::from_ref(&report), args.output.format())?;
        }
        None => match args.output.format() {
            Format::Csv => write_summary_csv(std::io::stdout(), &[report.summary])
                .map_err(|source| HarnessError::Csv { path: "<stdout>".into(), source })?,
            Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        },
    }
    Ok(true)
}

fn run_suite_command(args: &SuiteArgs) -> Result<bool, HarnessError> {
    let mut suite = match &args.config {
        Some(path) => SuiteConfig::from_json(&read(path)?)?,
        None => default_suite(),
    };
    if args.print_default {
        println!("{}", serde_json::to_string_pretty(&suite)?);
        return Ok(true);
    }
    if let Some(s) = args.output.seed {
        suite.seed = s;
    }
    let outcome = run_suite(&suite, args.output.trials, &args.output.options())?;
    match &args.output.out {
        Some(dir) => emit_suite(dir, &outcome, args.output.format())?,
        None => write_suite_csv(std::io::stdout(), &outcome.entries)
            .map_err(|source| HarnessError::Csv { path: "<stdout>".into(), source })?,
    }
    for e in &outcome.entries {
        eprintln!(
            "{} {} rate={:.4}",
            if e.passed { "PASS" } else { "FAIL" },
            e.experiment,
            e.success_rate
        );
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::VerifyBandit(a) => run_single("verify-bandit", a),
        Command::VerifyStrategy(a) => run_single("verify-strategy", a),
        Command::VerifyGame(a) => run_single("verify-game", a),
        Command::Lowcomm(a) => run_single("lowcomm", a),
        Command::LbCoin(a) => run_single("lb-coin", a),
        Command::LbLearning(a) => run_single("lb-learning", a),
        Command::Suite(a) => run_suite_command(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
