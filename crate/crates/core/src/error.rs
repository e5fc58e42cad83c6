use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { found: String, expected: String },

    #[error("{rejected} of {total} rows rejected (more than half); first problem: {first}")]
    TooManyRejected {
        rejected: usize,
        total: usize,
        first: String,
    },

    #[error("duplicate measurement for detector {detector_id} at {date} hour {hour}")]
    DuplicateRecord {
        detector_id: String,
        date: chrono::NaiveDate,
        hour: u8,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid GeoJSON: {0}")]
    GeoJson(String),

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("no segment carries a lane tag")]
    NoLaneTags,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("detector {detector_id} lies in more than one zone ({zones:?})")]
    ZoneOverlap {
        detector_id: String,
        zones: Vec<String>,
    },

    #[error("zone mismatch: {before:?} vs {after:?}")]
    ZoneMismatch { before: String, after: String },

    #[error("baseline value of {0} is zero")]
    ZeroBaseline(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// True for errors raised while validating the study configuration.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
