use std::io;

/// Broad failure class, used by front ends to choose an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The inputs were readable but the requested metric is undefined for them.
    Domain,
    /// Malformed input, missing columns, bad configuration or I/O trouble.
    Format,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),

    #[error("no content: {0}")]
    NoContent(String),

    #[error("record `{identifier}` published {published} is later than reference date {reference}")]
    PublishedAfterReference {
        identifier: String,
        published: chrono::NaiveDate,
        reference: chrono::NaiveDate,
    },

    #[error("unknown site `{0}`")]
    UnknownSite(String),

    #[error("comparison refused: {0}")]
    ComparisonRefused(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("missing mandatory column `{0}`")]
    MissingColumn(&'static str),

    #[error("root node `{0}` is not part of the graph")]
    UnknownRoot(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("report validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_)
            | Error::NoContent(_)
            | Error::PublishedAfterReference { .. }
            | Error::UnknownSite(_)
            | Error::ComparisonRefused(_) => ErrorKind::Domain,
            Error::Format(_)
            | Error::MissingColumn(_)
            | Error::UnknownRoot(_)
            | Error::Config(_)
            | Error::Validation(_)
            | Error::Json(_)
            | Error::Io(_) => ErrorKind::Format,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
