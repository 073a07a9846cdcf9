//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// An operation received an empty cloud, feature matrix, or score vector.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A keypoint detector found nothing; callers usually fall back to
    /// farthest-point sampling over the full cloud.
    #[error("detector produced no keypoints")]
    EmptyKeypoints,

    /// Every sampled RANSAC minimal set was degenerate (collinear or duplicated).
    #[error("all correspondence triplets were degenerate")]
    DegenerateCorrespondences,

    /// ICP found no correspondences within the search distance.
    #[error("no overlap between clouds within correspondence distance")]
    NoOverlap,

    /// A metric is undefined for the given labels (e.g. AUROC on one class).
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    /// Internal state does not admit the requested operation.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A file could not be parsed; `offset` is the byte position of the failure.
    #[error("parse error at byte {offset}: {message}")]
    ParseError { offset: u64, message: String },

    /// Registration of a specific prototype against the base failed.
    #[error("registration of prototype {prototype} failed: {source}")]
    RegistrationFailed {
        prototype: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
