use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the articulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },
    #[error("label/face count mismatch: {labels} labels for {faces} faces")]
    LabelCountMismatch { labels: usize, faces: usize },
    #[error("empty part: {0}")]
    EmptyPart(String),
    #[error("degenerate part {0}: zero total area")]
    DegeneratePart(String),
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("parts not connectable: no points within {final_threshold} after {doublings} doublings")]
    NotConnectable { final_threshold: f64, doublings: u32 },
    #[error("degenerate plane: {0}")]
    DegeneratePlane(String),
    #[error("degenerate line: {0}")]
    DegenerateLine(String),
    #[error("invalid k: {k} clusters requested for {points} points")]
    InvalidK { k: usize, points: usize },
    #[error("part fully occluded: {0}")]
    PartOccluded(String),
    #[error("prompt image degenerate: {0}")]
    PromptDegenerate(String),
    #[error("part centroid off-image: {0}")]
    CentroidOffImage(String),
    #[error("missing placeholder value: {0}")]
    MissingPlaceholder(&'static str),
    #[error("reply parse error: {0}")]
    Parse(#[from] crate::oracle::ParseError),
    #[error("oracle authentication failed: {0}")]
    OracleAuth(String),
    #[error("oracle transport failure after {attempts} attempts: {message}")]
    OracleTransport { attempts: u32, message: String },
    #[error("oracle reply malformed after reprompt: {0}")]
    OracleMalformed(String),
    #[error("replay miss: no stored transcript for request {0}")]
    ReplayMiss(String),
    #[error("candidate id {0} not in candidate set")]
    UnknownCandidate(u32),
    #[error("coincident selections: {0}")]
    CoincidentSelection(String),
    #[error("arrow direction parallel to plane normal")]
    ArrowParallel,
    #[error("invalid joint state: {0}")]
    InvalidJointState(String),
    #[error("invalid articulation tree: {0}")]
    InvalidTree(String),
    #[error("unknown link: {0}")]
    UnknownLink(String),
    #[error("guidance failed at iteration {iteration}: {message}")]
    Guidance { iteration: usize, message: String },
    #[error("nothing to evaluate")]
    NothingToEvaluate,
    #[error("mismatched joint ids: {0}")]
    MismatchedIds(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("urdf error: {0}")]
    Urdf(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
