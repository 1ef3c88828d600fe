use std::path::PathBuf;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("bad_env_file: {origin}: {detail}")]
    BadEnvFile { origin: String, detail: String },
    #[error("not_stabilizable: environment `{0}` has no stabilizing gain")]
    NotStabilizable(String),
    #[error("unknown_env: `{0}` is neither a bundled environment nor a readable file")]
    UnknownEnv(String),
    #[error("unknown_algo: `{0}` (expected one of medlq, ofulq, tslq, stabl, tsac, optimal, fixed)")]
    UnknownAlgo(String),
    #[error("bad_spec: {0}")]
    BadSpec(String),
    #[error("no_sign_change: L(0) = {l0}, L(1) = {l1}")]
    NoSignChange { l0: f64, l1: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Core(#[from] medlq_core::Error),
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Self::Csv {
            path: path.into(),
            source,
        }
    }
}
