use std::fmt;

/// Pipeline stage that raised an error, used to tag infeasibility reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Initializer,
    Subproblem,
    Transmit,
    Reflect,
    Baseline,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Initializer => "initializer",
            Stage::Subproblem => "convex subproblem",
            Stage::Transmit => "transmit optimizer",
            Stage::Reflect => "reflect optimizer",
            Stage::Baseline => "baseline",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible ({stage}): {detail}")]
    Infeasible { stage: Stage, detail: String },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("enumeration budget exceeded: {configs} configurations > limit {limit}")]
    BudgetExceeded { configs: u128, limit: u128 },

    #[error("enumeration timed out after {0:.1} s")]
    Timeout(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn infeasible(stage: Stage, detail: impl Into<String>) -> Self {
        Error::Infeasible {
            stage,
            detail: detail.into(),
        }
    }

    /// Short class name, used by the CLI when choosing an exit code.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Dimension(_) | Error::Domain(_) => "domain",
            Error::Infeasible { .. } => "infeasible",
            Error::Config { .. } | Error::Json(_) => "config",
            Error::BudgetExceeded { .. } | Error::Timeout(_) => "budget",
            Error::Io(_) | Error::Csv(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
