use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point ({0}, {1}) lies outside the sensor domain [-1, 1]^2")]
    OutsideDomain(f64, f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pixel index ({k1}, {k2}) out of range for a {r1}x{r2} grid")]
    IndexOutOfRange { k1: usize, k2: usize, r1: usize, r2: usize },

    #[error("inverse deformation did not converge (residual {residual:e})")]
    Convergence { residual: f64 },

    #[error("degenerate boundary tangent (|r'| = {0:e})")]
    DegenerateTangent(f64),

    #[error("collapsed pixel: volume estimate {0:e} is below the minimum")]
    CollapsedPixel(f64),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("radiance field does not provide spatial gradients")]
    GradientUnavailable,

    #[error("malformed {kind} data: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("unsupported bit depth (maxval {0})")]
    UnsupportedBitDepth(u32),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the filesystem rather than by the inputs themselves.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
