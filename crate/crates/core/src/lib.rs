//! Garment reconstruction from sketches through unsigned distance fields.
//!
//! Meshes are normalized into `[-1, 1]^3`, turned into UDF samples, fitted by
//! an auto-decoder and read back out as meshes, point clouds and sketches.

pub mod decoder;
pub mod editor;
pub mod encoder;
pub mod error;
pub mod field;
pub mod geom;
pub mod kdtree;
pub mod mesh;
pub mod mesher;
pub mod metrics;
pub mod primitives;
pub mod sampling;
pub mod sketch;
pub mod toy;

pub use error::{Error, Result};
