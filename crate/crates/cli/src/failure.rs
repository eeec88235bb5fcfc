use std::fmt;
use std::path::Path;

use keygraph::evaluation::EvalError;
use keygraph::image::ImageError;
use keygraph::keypoint::KeypointError;
use keygraph::matching::MatchingError;
use keygraph::pipeline::PipelineError;

/// Exit status 2: bad arguments, configuration or model contents.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status 3: unreadable or malformed files and directories.
pub const EXIT_IO: u8 = 3;
/// Exit status 4: the pipeline ran but found no pose.
pub const EXIT_NO_POSE: u8 = 4;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Io(String),
    NoPose,
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Io(_) => EXIT_IO,
            Failure::NoPose => EXIT_NO_POSE,
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    /// Prefixes the message with the file it concerns.
    pub fn with_path(self, path: &Path) -> Self {
        match self {
            Failure::Validation(m) => Failure::Validation(format!("{}: {m}", path.display())),
            Failure::Io(m) => Failure::Io(format!("{}: {m}", path.display())),
            Failure::NoPose => Failure::NoPose,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) | Failure::Io(m) => f.write_str(m),
            Failure::NoPose => f.write_str("no pose found"),
        }
    }
}

impl From<ImageError> for Failure {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::Empty { .. } | ImageError::SizeMismatch { .. } | ImageError::RectOutOfBounds { .. } => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Io(e.to_string()),
        }
    }
}

impl From<KeypointError> for Failure {
    fn from(e: KeypointError) -> Self {
        match e {
            KeypointError::OutOfBoundsPoint(..) => Failure::Validation(e.to_string()),
            _ => Failure::Io(e.to_string()),
        }
    }
}

impl From<MatchingError> for Failure {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::Parse { .. } | MatchingError::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Image(e) => e.into(),
            EvalError::Parse(_) | EvalError::DatasetLayout(_) | EvalError::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Matching(e) => e.into(),
            PipelineError::Eval(e) => e.into(),
            _ => Failure::Validation(e.to_string()),
        }
    }
}
