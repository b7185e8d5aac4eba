//! Pipeline error type. Ingestion failures carry the file, line and violated
//! rule so bad inputs are directly actionable.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{file}:{line}: {rule}")]
    Invalid {
        file: String,
        line: usize,
        rule: String,
    },
    #[error("missing required input file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("io error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("synthetic generation: {0}")]
    Synth(String),
    #[error("report: {0}")]
    Report(String),
}

impl PipelineError {
    pub fn invalid(file: &str, line: usize, rule: impl Into<String>) -> Self {
        PipelineError::Invalid {
            file: file.to_string(),
            line,
            rule: rule.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }
}
