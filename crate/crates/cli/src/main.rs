use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use gcalc_cli::commands::{self, Outcome};
use gcalc_cli::suites;
use gcalc_cli::{CliError, Config, Result, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// G-expectation calculator: prices, moments, path statistics and check suites.
#[derive(Debug, Parser)]
#[command(name = "gcalc", version)]
struct Cli {
    /// TOML configuration; every section is optional.
    #[arg(long, global = true, env = "GCALC_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true, env = "GCALC_SEED")]
    seed: Option<u64>,
    /// Directory for reports and the run manifest.
    #[arg(long, global = true, env = "GCALC_OUT")]
    out: Option<PathBuf>,
    /// Spatial grid points for single PDE solves.
    #[arg(long, global = true, env = "GCALC_GRID_POINTS")]
    grid_points: Option<usize>,
    /// Paths per scenario control.
    #[arg(long, global = true, env = "GCALC_PATHS")]
    paths: Option<usize>,
    /// Format printed to stdout.
    #[arg(long, global = true, env = "GCALC_FORMAT", value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// G-expectation of the configured payoff via the PDE solver.
    Price,
    /// Closed-form moments against the PDE solver.
    Moments,
    /// Quadratic variation statistics under a constant scenario.
    Qv,
    /// Picard contraction and Euler ensembles for the configured SDE.
    Sde,
    /// G-convexity verdict and both sides of Jensen's inequality.
    Jensen,
    /// Two traders and their supervisor.
    RiskDemo,
    /// Run a named check battery.
    Suite {
        #[arg(value_parser = suites::SUITES)]
        name: String,
    },
    /// Print the effective configuration as TOML.
    Config,
}

impl Command {
    fn stem(&self) -> String {
        match self {
            Command::Price => "price".into(),
            Command::Moments => "moments".into(),
            Command::Qv => "qv".into(),
            Command::Sde => "sde".into(),
            Command::Jensen => "jensen".into(),
            Command::RiskDemo => "risk-demo".into(),
            Command::Suite { name } => format!("suite-{name}"),
            Command::Config => "config".into(),
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    cfg.apply_overrides(cli.seed, cli.grid_points, cli.paths)?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &Config) -> Result<Outcome> {
    match &cli.command {
        Command::Price => commands::price(cfg),
        Command::Moments => commands::moments(cfg),
        Command::Qv => commands::qv(cfg),
        Command::Sde => commands::sde(cfg),
        Command::Jensen => commands::jensen(cfg),
        Command::RiskDemo => commands::risk(cfg),
        Command::Suite { name } => {
            let report = suites::run(name, cfg)?;
            let passed = report.passed;
            Ok(Outcome { report: serde_json::to_value(&report)?, csv: None, passed })
        }
        Command::Config => unreachable!("handled before execution"),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    if let Command::Config = cli.command {
        print!("{}", cfg.to_toml()?);
        return Ok(true);
    }
    let started = Instant::now();
    let outcome = execute(cli, &cfg)?;
    let json = serde_json::to_string_pretty(&outcome.report)? + "\n";
    match (cli.format, &outcome.csv) {
        (Format::Csv, Some(csv)) => print!("{csv}"),
        (Format::Csv, None) => {
            eprintln!("note: {} has no tabular output; printing JSON", cli.command.stem());
            print!("{json}");
        }
        (Format::Json, _) => print!("{json}"),
    }
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        let stem = cli.command.stem();
        let command: Vec<String> = std::env::args().collect();
        let mut manifest = RunManifest::new(command, &cfg, started.elapsed().as_secs_f64());
        manifest.write_output(dir, &format!("{stem}.json"), json.as_bytes())?;
        if let Some(csv) = &outcome.csv {
            manifest.write_output(dir, &format!("{stem}.csv"), csv.as_bytes())?;
        }
        manifest.save(dir)?;
    }
    if !outcome.passed {
        eprintln!("{}: check failed", cli.command.stem());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
