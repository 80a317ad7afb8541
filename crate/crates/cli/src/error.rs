//! Error classification onto the documented exit codes.

use std::fmt;

/// 0 ok / 1 usage / 2 data error / 3 internal.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> CliError {
        CliError::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> CliError {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

macro_rules! data_error_from {
    ($($ty:ty),+) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> CliError {
                CliError::Data(e.to_string())
            }
        })+
    };
}

data_error_from!(
    lexiforge_core::ingest::IngestError,
    lexiforge_core::lexicon::LexiconError,
    lexiforge_core::embed::EmbedError,
    lexiforge_core::annotate::BioError,
    lexiforge_core::annotate::AnnotationParseError,
    lexiforge_core::annotate::bio::ConllError,
    lexiforge_core::split::SplitError,
    lexiforge_core::tagger::TaggerError,
    lexiforge_core::extract::ExtractError,
    lexiforge_core::eval::EvalError,
    lexiforge_core::cvalue::CvalueError,
    lexiforge_core::pipeline::PipelineError
);
