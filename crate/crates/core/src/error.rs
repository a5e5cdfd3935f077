use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("mesh `{0}` has no faces")]
    EmptyMesh(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("empty sketch")]
    EmptySketch,

    #[error("sketch library is empty")]
    EmptyLibrary,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training produced NaN at epoch {epoch} (lr decoder {lr_decoder:e}, latent {lr_latent:e}): udf {udf}, latent {latent}, geo {geo}")]
    TrainingDiverged {
        epoch: usize,
        lr_decoder: f64,
        lr_latent: f64,
        udf: f64,
        latent: f64,
        geo: f64,
    },

    #[error("{skipped} of {total} surface samples had a vanishing field gradient")]
    DegenerateGradient { skipped: usize, total: usize },

    #[error("projected contour is empty")]
    EmptyContour,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
