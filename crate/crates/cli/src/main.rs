//! `scenario-arb`: arbitrage, pricing and partition reports for market files.
//!
//! Exit status 0 on success, 2 on unusable input, 3 when a computed result
//! fails its own consistency checks.

mod commands;
mod expr;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use scenario_arb::market_file::load_market;
use scenario_arb::MarketModel;

#[derive(Debug, Parser)]
#[command(
    name = "scenario-arb",
    version,
    about = "Arbitrage and superhedging on finite scenario markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct MarketArgs {
    /// Market file.
    #[arg(long)]
    market: PathBuf,
    /// Statically traded options to keep, by name; all when omitted, none
    /// when empty.
    #[arg(long, value_delimiter = ',')]
    options: Option<Vec<String>>,
    /// Write the JSON report here and print a summary instead.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HedgeSet {
    Efficient,
    Omega,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Efficient set, partition scheme, calibrated measure and strong arbitrage.
    Ftap(MarketArgs),
    /// Superhedging price and dual value of a payoff.
    Price {
        #[command(flatten)]
        market: MarketArgs,
        /// Expression such as `max(S[2][1]-2,0)`, or a JSON file mapping
        /// scenario ids to values.
        #[arg(long)]
        payoff: String,
        #[arg(long, value_enum, default_value = "efficient")]
        hedge_set: HedgeSet,
    },
    /// Full trace of the pathspace partition scheme.
    Partition(MarketArgs),
    /// Classical no-arbitrage under a probability.
    Dmw {
        #[command(flatten)]
        market: MarketArgs,
        /// JSON file `{"weights": {id: p, ...}}`.
        #[arg(long)]
        measure: PathBuf,
    },
    /// Runs every consistency check on one market.
    Check {
        #[arg(long, required_unless_present = "seed", conflicts_with = "seed")]
        market: Option<PathBuf>,
        /// Check the generated corpus market with this seed instead.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        options: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] scenario_arb::Error),
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(scenario_arb::Error::InvariantBreach(_)) => 3,
            _ => 2,
        }
    }
}

/// Result of one command: JSON payload, a one-line summary and any failed
/// consistency check.
pub struct Outcome {
    pub result: Value,
    pub summary: String,
    pub breach: Option<String>,
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load(path: &Path, options: &Option<Vec<String>>) -> Result<MarketModel, CliError> {
    let market = load_market(&read(path)?)?;
    match options {
        None => Ok(market),
        Some(names) => {
            let names: Vec<&str> = names.iter().map(String::as_str).filter(|n| !n.is_empty()).collect();
            let indices = market.option_indices(&names)?;
            Ok(market.with_options(&indices)?)
        }
    }
}

fn command_echo(cli: &Command) -> Value {
    let path = |p: &Path| p.display().to_string();
    match cli {
        Command::Ftap(m) | Command::Partition(m) => json!({
            "name": if matches!(cli, Command::Ftap(_)) { "ftap" } else { "partition" },
            "market": path(&m.market),
            "options": m.options,
        }),
        Command::Price {
            market,
            payoff,
            hedge_set,
        } => json!({
            "name": "price",
            "market": path(&market.market),
            "options": market.options,
            "payoff": payoff,
            "hedge_set": match hedge_set {
                HedgeSet::Efficient => "efficient",
                HedgeSet::Omega => "omega",
            },
        }),
        Command::Dmw { market, measure } => json!({
            "name": "dmw",
            "market": path(&market.market),
            "options": market.options,
            "measure": path(measure),
        }),
        Command::Check {
            market, seed, options, ..
        } => json!({
            "name": "check",
            "market": market.as_deref().map(path),
            "seed": seed,
            "options": options,
        }),
    }
}

fn run(cli: &Command) -> Result<(MarketModel, Outcome), CliError> {
    match cli {
        Command::Ftap(m) => {
            let market = load(&m.market, &m.options)?;
            let outcome = commands::ftap(&market)?;
            Ok((market, outcome))
        }
        Command::Price {
            market: m,
            payoff,
            hedge_set,
        } => {
            let market = load(&m.market, &m.options)?;
            let g = commands::payoff_vector(&market, payoff)?;
            let outcome = commands::price(&market, &g, *hedge_set == HedgeSet::Omega)?;
            Ok((market, outcome))
        }
        Command::Partition(m) => {
            let market = load(&m.market, &m.options)?;
            let outcome = commands::partition(&market)?;
            Ok((market, outcome))
        }
        Command::Dmw { market: m, measure } => {
            let market = load(&m.market, &m.options)?;
            let outcome = commands::dmw(&market, &read(measure)?)?;
            Ok((market, outcome))
        }
        Command::Check {
            market, seed, options, ..
        } => {
            let market = match (market, seed) {
                (Some(path), _) => load(path, options)?,
                (None, Some(seed)) => {
                    let generated = commands::corpus_market(*seed);
                    match options {
                        None => generated,
                        Some(_) => return Err(CliError::Input("--options needs --market".into())),
                    }
                }
                (None, None) => unreachable!("clap requires one of --market and --seed"),
            };
            let outcome = commands::check(&market, seed.unwrap_or(0))?;
            Ok((market, outcome))
        }
    }
}

fn out_path(cli: &Command) -> Option<&Path> {
    match cli {
        Command::Ftap(m) | Command::Partition(m) => m.out.as_deref(),
        Command::Price { market, .. } | Command::Dmw { market, .. } => market.out.as_deref(),
        Command::Check { out, .. } => out.as_deref(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (market, outcome) = match run(&cli.command) {
        Ok(done) => done,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(err.exit_code());
        }
    };
    let status = match &outcome.breach {
        None => "ok".to_string(),
        Some(what) => format!("invariant breach: {what}"),
    };
    let document = json!({
        "command": command_echo(&cli.command),
        "market": report::digest(&market),
        "result": outcome.result,
        "status": status,
    });
    let text = serde_json::to_string_pretty(&document).expect("reports serialize") + "\n";
    match out_path(&cli.command) {
        Some(path) => {
            if let Err(source) = std::fs::write(path, text) {
                eprintln!(
                    "error: {}",
                    CliError::Io {
                        path: path.display().to_string(),
                        source,
                    }
                );
                return ExitCode::from(2);
            }
            println!("{}", outcome.summary);
        }
        None => print!("{text}"),
    }
    if let Some(what) = outcome.breach {
        eprintln!("invariant breach: {what}");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
