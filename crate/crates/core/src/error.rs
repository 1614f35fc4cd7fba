use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("empty match set: S-IoU needs at least one matched instance")]
    EmptyMatchSet,

    #[error("area must be positive, got {0}")]
    NonPositiveArea(f64),

    #[error("degenerate bounding box: {0}")]
    DegenerateBBox(String),

    #[error("tile {0} has no DEM coverage")]
    NoDemCoverage(String),

    #[error("detector unavailable: {0}")]
    DetectorUnavailable(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: parse error: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: {}", path.display(), format_problems(problems))]
    Features {
        path: PathBuf,
        problems: Vec<FeatureProblem>,
    },

    #[error("CRS mismatch: {left} vs {right}")]
    CrsMismatch { left: String, right: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Schema,
    Geometry,
}

/// A defect in one feature of a feature file.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureProblem {
    pub index: usize,
    pub kind: ProblemKind,
    pub message: String,
}

fn format_problems(problems: &[FeatureProblem]) -> String {
    problems
        .iter()
        .map(|p| {
            let kind = match p.kind {
                ProblemKind::Schema => "schema",
                ProblemKind::Geometry => "geometry",
            };
            format!("feature {}: {kind} error: {}", p.index, p.message)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by the content of input data rather than by how the
    /// toolkit was invoked.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidArgument(_))
    }
}
