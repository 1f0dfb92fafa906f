use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "coffeescan", version, about = "Find key-misuse flaws in mini-app packages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan packages, unpacked package directories or corpus directories.
    Scan(ScanArgs),
    /// Run the mock platform server until interrupted.
    Serve(ServeArgs),
    /// Generate a corpus with planted flaws and its manifest.
    Forge(ForgeArgs),
    /// Play a protocol scenario script and print its transcript.
    Lab(LabArgs),
    /// Merge JSON reports into one table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Comma-separated detector names.
    #[arg(long, value_delimiter = ',')]
    pub detectors: Option<Vec<String>>,
    /// Check candidate secrets against the token endpoint.
    #[arg(long)]
    pub validate: bool,
    #[arg(long, env = "COFFEESCAN_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Alternate platform: numeric app keys, 32-char alphanumeric secrets,
    /// `/oauth/2.0/token` validation.
    #[arg(long)]
    pub baidu: bool,
    /// Validation requests per minute.
    #[arg(long, default_value_t = 60)]
    pub rate_limit: u32,
    /// Validation requests in flight at once.
    #[arg(long, default_value_t = 4)]
    pub max_concurrent: usize,
    /// Detector configuration file (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Registrations file.
    #[arg(long)]
    pub seed: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ForgeArgs {
    #[arg(long, default_value = "corpus")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exact plant counts, e.g. `BleMisconfig:3,AppSecretString:1`.
    #[arg(long)]
    pub plants: Option<String>,
    #[arg(long, default_value_t = 150)]
    pub clean: usize,
    /// Packages with 2 to 4 random plants; ignored with --plants.
    #[arg(long, default_value_t = 50)]
    pub planted: usize,
    /// Obfuscation levels to draw from: plain, renamed, detached, ternary.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<String>,
}

#[derive(Debug, Args)]
pub struct LabArgs {
    /// Scenario script; read from stdin when absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}
