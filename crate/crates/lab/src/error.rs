use std::path::PathBuf;

pub type LabResult<T> = Result<T, LabError>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] hartree_blowup_core::Error),

    #[error("bad box: {0}")]
    Shape(String),

    #[error("under-resolved: {0}")]
    Unresolved(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<LabError> },
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        LabError::Format { path: path.into(), msg: msg.into() }
    }
}

/// Tags errors with the pipeline stage they came from.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> LabResult<T>;
}

impl<T, E: Into<LabError>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> LabResult<T> {
        self.map_err(|e| LabError::Stage { stage, source: Box::new(e.into()) })
    }
}
