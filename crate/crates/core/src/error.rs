use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Variant names double as the machine-readable codes surfaced by the HTTP
/// service and the CLI (`Error::code`).
#[derive(Debug, Error)]
pub enum Error {
    // ingest
    #[error("cannot decode {path}: {reason}")]
    UndecodableFile { path: PathBuf, reason: String },
    #[error("video {0} has zero duration")]
    ZeroDurationVideo(PathBuf),
    #[error("{0} is already part of this project")]
    DuplicatePath(PathBuf),
    #[error("frame {video_id}/{frame_index} does not exist")]
    FrameNotFound { video_id: String, frame_index: u32 },
    #[error("media tool failed: {0}")]
    MediaTool(String),

    // lens
    #[error("image has no pixels")]
    EmptyImage,
    #[error("expected a 3-channel image, got {0} channels")]
    NonColorImage(u8),
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("model asset missing: {0}")]
    ModelAssetMissing(String),
    #[error("provider returned {got} values, lens expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("lens {0} has no text encoder")]
    TextNotSupported(String),
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("lens {0} is not registered in this project")]
    LensNotFound(String),
    #[error("cannot decode image: {0}")]
    UndecodableImage(String),

    // projection
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("{n} points cannot support perplexity {perplexity}")]
    PerplexityInfeasible { n: usize, perplexity: f64 },
    #[error("empty input")]
    EmptyInput,

    // mapmodel / routing
    #[error("no vectors under lens {lens} for {video_id}/{frame_index}")]
    MissingVectors {
        lens: String,
        video_id: String,
        frame_index: u32,
    },
    #[error("unknown video {0}")]
    UnknownVideo(String),
    #[error("route needs at least 2 videos, got {0}")]
    TooFewVideos(usize),
    #[error("route planning supports at most 20 videos, got {0}")]
    TooManyVideos(usize),
    #[error("no street between {0} and {1}")]
    MissingStreet(String, String),
    #[error("video {0} listed more than once")]
    DuplicateVideo(String),
    #[error("operation cancelled")]
    Cancelled,

    // search / extensions
    #[error("{sentences} sentences but only {videos} videos")]
    MoreSentencesThanVideos { sentences: usize, videos: usize },
    #[error("{n} points cannot form {k} clusters")]
    TooFewPoints { n: usize, k: usize },
    #[error("wcss curve is empty")]
    CurveTooShort,
    #[error("landmark {0} not found")]
    LandmarkNotFound(usize),
    #[error("no landmarks selected")]
    EmptySelection,

    // store
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("sidecar {0} has the wrong magic")]
    MagicMismatch(PathBuf),
    #[error("sidecar {0} is truncated")]
    TruncatedSidecar(PathBuf),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("project directory {0} is locked by another writer")]
    ProjectLocked(PathBuf),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::UndecodableFile { .. } => "UndecodableFile",
            Error::ZeroDurationVideo(_) => "ZeroDurationVideo",
            Error::DuplicatePath(_) => "DuplicatePath",
            Error::FrameNotFound { .. } => "FrameNotFound",
            Error::MediaTool(_) => "MediaTool",
            Error::EmptyImage => "EmptyImage",
            Error::NonColorImage(_) => "NonColorImage",
            Error::ProviderUnavailable(_) => "ProviderUnavailable",
            Error::ModelAssetMissing(_) => "ModelAssetMissing",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::TextNotSupported(_) => "TextNotSupported",
            Error::EmptyPrompt => "EmptyPrompt",
            Error::LensNotFound(_) => "LensNotFound",
            Error::UndecodableImage(_) => "UndecodableImage",
            Error::NonFiniteInput => "NonFiniteInput",
            Error::PerplexityInfeasible { .. } => "PerplexityInfeasible",
            Error::EmptyInput => "EmptyInput",
            Error::MissingVectors { .. } => "MissingVectors",
            Error::UnknownVideo(_) => "UnknownVideo",
            Error::TooFewVideos(_) => "TooFewVideos",
            Error::TooManyVideos(_) => "TooManyVideos",
            Error::MissingStreet(..) => "MissingStreet",
            Error::DuplicateVideo(_) => "DuplicateVideo",
            Error::Cancelled => "Cancelled",
            Error::MoreSentencesThanVideos { .. } => "MoreSentencesThanVideos",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::CurveTooShort => "CurveTooShort",
            Error::LandmarkNotFound(_) => "LandmarkNotFound",
            Error::EmptySelection => "EmptySelection",
            Error::CorruptManifest(_) => "CorruptManifest",
            Error::MagicMismatch(_) => "MagicMismatch",
            Error::TruncatedSidecar(_) => "TruncatedSidecar",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::ProjectLocked(_) => "ProjectLocked",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
        }
    }

    /// Errors caused by a model provider rather than by engine input.
    pub fn is_provider_error(&self) -> bool {
        matches!(
            self,
            Error::ProviderUnavailable(_)
                | Error::ModelAssetMissing(_)
                | Error::DimensionMismatch { .. }
        )
    }

    pub(crate) fn frame_not_found(key: &crate::FrameKey) -> Self {
        Error::FrameNotFound {
            video_id: key.video_id.to_string(),
            frame_index: key.frame_index,
        }
    }
}
