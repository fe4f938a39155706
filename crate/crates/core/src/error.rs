use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("mesh has no usable triangles")]
    EmptyMesh,

    #[error("infeasible scene spec: {0}")]
    InfeasibleSpec(String),

    /// A configuration value failed validation; `key` names the offending field.
    #[error("invalid config `{key}`: {msg}")]
    InvalidConfig { key: String, msg: String },

    #[error("candidate grid is empty (inset region degenerate)")]
    EmptyGrid,

    #[error("no feasible candidates: all {total} proposals rejected by the sanity filter")]
    NoFeasibleCandidates { total: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("schema violation in {path}: {msg}")]
    Schema { path: PathBuf, msg: String },
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than
    /// runtime failures.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. } | Error::InfeasibleSpec(_) | Error::Parse { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
