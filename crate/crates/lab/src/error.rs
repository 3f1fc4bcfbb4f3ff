use std::path::PathBuf;

use serde_json::json;

/// Process exit codes.
pub mod exit {
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BLOW_UP: i32 = 3;
    pub const ASSUMPTION: i32 = 4;
    pub const REPLAY_DIVERGENCE: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Core(#[from] dklab_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("assumption check failed: {0}")]
    Assumption(String),

    #[error("replay diverged in {file} at row {row}")]
    ReplayDivergence {
        file: String,
        row: usize,
        expected: Option<String>,
        actual: Option<String>,
    },
}

pub type LabResult<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use dklab_core::Error as E;
        match self {
            Self::Config { .. } => exit::CONFIG,
            Self::Core(E::Config(_) | E::Domain(_) | E::Usage(_)) => exit::CONFIG,
            Self::Core(E::BlowUp { .. }) => exit::BLOW_UP,
            Self::Core(_) => exit::OTHER,
            Self::Assumption(_) => exit::ASSUMPTION,
            Self::ReplayDivergence { .. } => exit::REPLAY_DIVERGENCE,
            Self::Io { .. } | Self::Csv(_) => exit::OTHER,
        }
    }

    fn kind(&self) -> &'static str {
        use dklab_core::Error as E;
        match self {
            Self::Config { .. } => "config",
            Self::Core(E::BlowUp { .. }) => "blow_up",
            Self::Core(E::Config(_)) => "config",
            Self::Core(E::Domain(_)) => "domain",
            Self::Core(E::Usage(_)) => "usage",
            Self::Core(E::Numeric(_)) => "numeric",
            Self::Core(_) => "internal",
            Self::Io { .. } => "io",
            Self::Csv(_) => "csv",
            Self::Assumption(_) => "assumption",
            Self::ReplayDivergence { .. } => "replay_divergence",
        }
    }

    /// Machine-readable error record, one JSON object.
    pub fn to_record(&self) -> serde_json::Value {
        let mut rec = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            Self::Config { key, .. } => rec["key"] = json!(key),
            Self::Core(dklab_core::Error::BlowUp {
                step,
                last_good_time,
            }) => {
                rec["step"] = json!(step);
                rec["last_good_time"] = json!(last_good_time);
            }
            Self::ReplayDivergence {
                file,
                row,
                expected,
                actual,
            } => {
                rec["file"] = json!(file);
                rec["row"] = json!(row);
                rec["expected"] = json!(expected);
                rec["actual"] = json!(actual);
            }
            _ => {}
        }
        rec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(LabError::config("domain.N", "missing").exit_code(), 2);
        let blow = LabError::Core(dklab_core::Error::BlowUp {
            step: 3,
            last_good_time: 0.5,
        });
        assert_eq!(blow.exit_code(), 3);
        assert_eq!(blow.to_record()["last_good_time"], 0.5);
        assert_eq!(LabError::Assumption("x".into()).exit_code(), 4);
        let div = LabError::ReplayDivergence {
            file: "a.csv".into(),
            row: 2,
            expected: Some("1".into()),
            actual: None,
        };
        assert_eq!(div.exit_code(), 5);
        assert_eq!(div.to_record()["row"], 2);
    }
}
