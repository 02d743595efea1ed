use std::path::PathBuf;

/// Errors produced by the lighting engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("zero-length vector cannot be normalized")]
    ZeroVector,

    #[error("coefficient count {found} does not match degree {degree} (expected {expected})")]
    InvalidLength {
        degree: usize,
        expected: usize,
        found: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("SH degree mismatch: transfer has degree {transfer}, light has degree {light}")]
    DegreeMismatch { transfer: usize, light: usize },

    #[error("SH degree {0} out of supported range 0..=8")]
    UnsupportedDegree(usize),

    #[error("quadrature resolution {n_theta}x{n_phi} below the 8x16 minimum")]
    QuadratureTooCoarse { n_theta: usize, n_phi: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: NaN texel at pixel (x={x}, y={y})")]
    NanPixel { path: PathBuf, x: usize, y: usize },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("surface point is not valid (zero density gradient)")]
    InvalidPoint,

    #[error("no valid surface points found on any probe ray")]
    NoSurfacePoints,

    #[error("unknown render mode '{0}' (expected lit, diffuse, specular, albedo, normal, irradiance or visibility)")]
    UnknownMode(String),

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
