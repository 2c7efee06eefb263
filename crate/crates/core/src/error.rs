use std::path::PathBuf;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// An input violates an operation's domain (dimensions, ranges, class coverage).
    #[error("domain error: {0}")]
    Domain(String),

    /// An object was used before reaching the required state (e.g. an untrained map).
    #[error("state error: {0}")]
    State(String),

    /// Training produced a non-finite loss.
    #[error("training error: {0}")]
    Training(String),

    /// Index coverage of a combined prediction has an overlap or a gap.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// A file could not be parsed; `field` names the offending field when known.
    #[error("parse error in {path}: {field}: {message}")]
    Parse {
        path: String,
        field: String,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A pipeline stage failed; wraps the underlying error with the stage tag.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    /// Tags an error with the pipeline stage it came from.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Deserializes JSON, naming the offending field (as a path such as
/// `runs[2].accuracy`) in the parse error.
pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // Missing and unknown fields are named in the message, one level
        // below the reported path.
        let named = message
            .strip_prefix("missing field `")
            .or_else(|| message.strip_prefix("unknown field `"))
            .and_then(|rest| rest.split('`').next());
        let field = match (named, path.as_str()) {
            (Some(name), ".") => name.to_string(),
            (Some(name), parent) => format!("{parent}.{name}"),
            (None, ".") => format!("line {} column {}", inner.line(), inner.column()),
            (None, p) => p.to_string(),
        };
        Error::parse(source, field, message)
    })?;
    de.end()
        .map_err(|e| Error::parse(source, format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    Ok(value)
}
