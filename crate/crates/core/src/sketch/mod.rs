//! Depth rendering, contour sketches and sketch/mesh pair datasets.

mod camera;
mod dataset;
mod edt;
mod image;
mod raster;

pub use camera::{CameraPose, DEFAULT_IMAGE_SIZE, MIN_IMAGE_SIZE};
pub use dataset::{
    build_pair_dataset, load_pair_dataset, read_manifest, write_pair_dataset, ManifestEntry, PairConfig, SketchPair,
    MANIFEST_FILE,
};
pub use edt::DistanceTransform;
pub use image::SketchImage;
pub use raster::{contour_from_depth, project_contour, render_depth, DepthMap, DEFAULT_DEPTH_EDGE_THRESHOLD, NO_FACE};
