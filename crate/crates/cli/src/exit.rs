use petrowave::Error;

pub const OK: i32 = 0;
pub const IO: i32 = 1;
pub const CONFIG: i32 = 2;
pub const HYPOTHESIS: i32 = 3;
pub const DIVERGED: i32 = 4;
pub const BRANCH: i32 = 5;
pub const DOMINANCE: i32 = 6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),
    #[error("simulation diverged at t = {t} (partial outputs written)")]
    Diverged { t: f64 },
    #[error("unsupported decay branch: {0}")]
    Branch(String),
    #[error("dominance check failed: worst ratio {worst_ratio} at t = {t}")]
    Dominance { worst_ratio: f64, t: f64 },
    #[error("{summary}")]
    Sweep { code: i32, summary: String },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn config(context: &str, e: Error) -> Self {
        CliError::Config(format!("{context}: {e}"))
    }

    pub fn io(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => CONFIG,
            CliError::Hypothesis(_) => HYPOTHESIS,
            CliError::Diverged { .. } => DIVERGED,
            CliError::Branch(_) => BRANCH,
            CliError::Dominance { .. } => DOMINANCE,
            CliError::Sweep { code, .. } => *code,
            CliError::Io(_) => IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { t } => CliError::Diverged { t },
            Error::UncoveredBranch { .. } => CliError::Branch(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
