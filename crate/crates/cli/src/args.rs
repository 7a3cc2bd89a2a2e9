use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gridshort", version, about = "Enumerate and shortlist DC breaker configurations for energy hubs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count configurations per breaker count, closed form against enumeration.
    Enumerate(RunConfig),
    /// Run the filtering pipeline for every breaker count up to the maximum.
    Shortlist(RunConfig),
    /// Evaluate the fully selective configuration.
    Baseline(RunConfig),
    /// Co-zone counts over the final shortlist at exactly `--max-breakers`.
    Heatmap(RunConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Branches {
    Avg,
    Backup,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Parallel,
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    NetImport,
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    Cables,
    AllZones,
}

#[derive(Clone, Debug, Args)]
pub struct RunConfig {
    /// Built-in case (small, medium, large) or path to a JSON network file.
    #[arg(long, default_value = "small")]
    pub case: String,

    #[arg(long, default_value_t = 3)]
    pub max_breakers: usize,

    /// Comma-separated scenario names to keep; all by default.
    #[arg(long, value_delimiter = ',')]
    pub scenarios: Vec<String>,

    #[arg(long, value_enum, default_value_t = Branches::Both)]
    pub branches: Branches,

    /// Run the branch filters independently or avg then backup.
    #[arg(long, value_enum, default_value_t = Mode::Parallel)]
    pub branch_mode: Mode,

    /// Scenario the branch metrics are evaluated in; the first by default.
    #[arg(long)]
    pub branch_scenario: Option<String>,

    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// Format of the summary printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,

    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub pruning: Switch,

    /// Re-solve every reported flow with an independent min-cut check.
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub oracle_check: Switch,

    #[arg(long, value_enum, default_value_t = Convention::NetImport)]
    pub loss_convention: Convention,

    #[arg(long, value_enum, default_value_t = Scope::Cables)]
    pub fault_scope: Scope,
}
