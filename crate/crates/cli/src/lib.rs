//! `lure`: one entry point for the checksum, selector, miner, homograph,
//! scanner and explorer tools.
//!
//! Exit codes: 0 success, 1 findings present (only for gating flags such as
//! `scan --fail-on-match`), 2 usage error or a command that could not
//! complete, 3 explorer transport failure.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lure_client::Network;
use lure_core::miners::Seed;
use thiserror::Error;

pub use config::{CliConfig, Settings};
pub use output::{Outcome, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRANSPORT: i32 = 3;

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Transport(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Failed(_) => EXIT_USAGE,
            Failure::Transport(_) => EXIT_TRANSPORT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    /// Schema-versioned JSON with sorted keys.
    #[value(alias = "json")]
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "lure", version, about = "Address, selector and source checks for social-engineering smart contracts")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// 32-byte hex seed for the miners.
    #[arg(long, global = true)]
    pub seed: Option<Seed>,
    /// Worker threads; output is reproducible at 1.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Extra confusables rows (`ascii<TAB>U+XXXX<TAB>script`) merged into the built-in table.
    #[arg(long, global = true)]
    pub confusables: Option<PathBuf>,
    /// TOML file with the same keys as the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub network: Option<Network>,
    /// Explorer endpoint, e.g. a local mirror.
    #[arg(long, global = true)]
    pub base_url: Option<String>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify an address against its EIP-55 checksum.
    Eip55 { address: String },
    /// Address of a private key.
    Derive { private_key: String },
    /// 4-byte selector of a function header.
    Selector {
        signature: String,
        /// Hash the text exactly as given instead of canonicalizing it.
        #[arg(long)]
        raw: bool,
    },
    /// Address of the contract a deployer creates at a given nonce.
    Predict { deployer: String, nonce: u64 },
    /// Search for a key whose address has an all-lowercase checksum.
    MineLowercase {
        #[arg(long, default_value_t = 100_000_000)]
        max_attempts: u64,
    },
    /// Search for a deployable address and a checksum-compatible look-alike.
    MinePair {
        #[arg(long, default_value_t = 120)]
        budget_secs: u64,
    },
    /// Search for a function name whose selector matches a target.
    MineCollision(CollisionArgs),
    /// Report non-ASCII, look-alike and invisible characters.
    HomographScan {
        path: PathBuf,
        #[arg(long)]
        fail_on_finding: bool,
    },
    /// Scan Solidity files and explorer bundles for attack patterns.
    Scan {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Write per-unit reports and summary.tsv here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// `origin<TAB>label` triage labels.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        fail_on_match: bool,
    },
    /// Auditor advisories: hard-coded accounts, lowercase checksums, literal bytes.
    Audit {
        path: PathBuf,
        /// Look up outgoing transactions of hard-coded accounts on the explorer.
        #[arg(long)]
        online: bool,
        #[arg(long)]
        fail_on_advisory: bool,
    },
    /// Download verified source bundles from the explorer.
    Fetch {
        #[arg(required = true)]
        addresses: Vec<String>,
        /// Save each bundle as `<address>.json` here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also count outgoing transactions.
        #[arg(long)]
        tx_count: bool,
    },
    /// Summarize a directory written by `scan --output`.
    Report {
        dir: PathBuf,
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CollisionArgs {
    /// Selector (`0x12345678`) or a function header whose selector is the target.
    pub target: String,
    #[arg(long, default_value = "f")]
    pub prefix: String,
    #[arg(long, default_value = "0123456789")]
    pub charset: String,
    /// Comma-separated argument types; defaults to the target header's.
    #[arg(long)]
    pub args: Option<String>,
    /// Leading selector bits that must match.
    #[arg(long, default_value_t = 32)]
    pub bits: u32,
    #[arg(long, default_value_t = 3600)]
    pub budget_secs: u64,
    #[arg(long)]
    pub max_trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub start_index: u64,
}

/// Parses `argv` (program name first), runs the command and prints its
/// output. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let settings = match Settings::resolve(&cli.global) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    init_logging(settings.verbosity);
    match commands::execute(&cli.command, &settings) {
        Ok(outcome) => {
            println!("{}", outcome.render(settings.format));
            if let Some(e) = &outcome.failure {
                eprintln!("error: {e}");
                return e.exit_code();
            }
            if outcome.gate && outcome.findings {
                EXIT_FINDINGS
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}
