//! Configuration, subcommands and artifact output behind the `mobidiff`
//! binary.

pub mod commands;
pub mod config;
pub mod output;

pub use config::ExperimentConfig;

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<mobidiff::Error> for CliError {
    fn from(e: mobidiff::Error) -> Self {
        match e {
            mobidiff::Error::InvalidArgument(_) | mobidiff::Error::InvalidConfig(_) => CliError::Validation(e.to_string()),
            mobidiff::Error::Numerical(_) | mobidiff::Error::DegenerateLaw => CliError::Numerical(e.to_string()),
        }
    }
}

/// One CSV file held in memory until the run succeeds.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Cir,
    ReceivedSignal,
    DistancePdf,
    Ber,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Cir => "cir",
            Command::ReceivedSignal => "received-signal",
            Command::DistancePdf => "distance-pdf",
            Command::Ber => "ber",
            Command::Selftest => "selftest",
        }
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
        match self {
            Command::Cir => commands::cmd_cir(cfg),
            Command::ReceivedSignal => commands::cmd_received_signal(cfg),
            Command::DistancePdf => commands::cmd_distance_pdf(cfg),
            Command::Ber => commands::cmd_ber(cfg),
            Command::Selftest => commands::cmd_selftest(cfg),
        }
    }
}
