use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PisaError>;

#[derive(Debug, Error)]
pub enum PisaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode or encode image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<PisaError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("dataset at {0} contains no usable entries")]
    EmptyDataset(PathBuf),
}

impl PisaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PisaError::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PisaError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Tags an error with the pipeline stage that produced it.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| PisaError::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
