use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{CameraPose, DEFAULT_IMAGE_SIZE};
use super::image::SketchImage;
use super::raster::{contour_from_depth, render_depth, DEFAULT_DEPTH_EDGE_THRESHOLD};
use crate::mesh::TriMesh;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub n_views: usize,
    pub image_size: usize,
    /// Radians.
    pub elevation: f64,
    /// `None` draws silhouettes only.
    pub depth_edge_threshold: Option<f64>,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self {
            n_views: 36,
            image_size: DEFAULT_IMAGE_SIZE,
            elevation: 0.0,
            depth_edge_threshold: Some(DEFAULT_DEPTH_EDGE_THRESHOLD),
        }
    }
}

impl PairConfig {
    pub fn contour_mode(&self) -> &'static str {
        if self.depth_edge_threshold.is_some() {
            "silhouette+depth-edges"
        } else {
            "silhouette"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchPair {
    pub sketch: SketchImage,
    pub mesh_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sketch_path: String,
    pub mesh_name: String,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub image_size: usize,
    pub contour_mode: String,
}

impl ManifestEntry {
    pub fn pose(&self) -> Result<CameraPose> {
        CameraPose::from_degrees(self.azimuth_deg, self.elevation_deg, self.image_size)
    }
}

/// Contour sketches of every mesh from `n_views` azimuths. Views with an empty
/// footprint are skipped with a warning.
pub fn build_pair_dataset(meshes: &[TriMesh], cfg: &PairConfig) -> Result<Vec<SketchPair>> {
    if cfg.n_views == 0 {
        return Err(Error::InvalidArgument("at least one view is required".into()));
    }
    let poses = CameraPose::orbit(cfg.n_views, cfg.elevation, cfg.image_size)?;
    let jobs: Vec<(&TriMesh, CameraPose)> = meshes
        .iter()
        .flat_map(|m| poses.iter().map(move |p| (m, *p)))
        .collect();
    let pairs = jobs
        .into_par_iter()
        .filter_map(|(mesh, pose)| {
            let sketch = contour_from_depth(&render_depth(mesh, &pose), cfg.depth_edge_threshold, pose);
            if sketch.is_blank() {
                log::warn!("skipping {} at azimuth {:.1}: empty footprint", mesh.name, pose.azimuth_deg());
                return None;
            }
            Some(SketchPair {
                sketch,
                mesh_name: mesh.name.clone(),
            })
        })
        .collect();
    Ok(pairs)
}

/// Writes PNG sketches and a JSON-lines manifest into `dir`.
pub fn write_pair_dataset(pairs: &[SketchPair], cfg: &PairConfig, dir: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(pairs.len());
    let mut manifest = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
    for pair in pairs {
        let pose = pair.sketch.pose;
        let file = format!("{}_az{:05.1}_el{:+05.1}.png", pair.mesh_name, pose.azimuth_deg(), pose.elevation_deg());
        pair.sketch.save_png(dir.join(&file))?;
        let entry = ManifestEntry {
            sketch_path: file,
            mesh_name: pair.mesh_name.clone(),
            azimuth_deg: pose.azimuth_deg(),
            elevation_deg: pose.elevation_deg(),
            image_size: pose.width,
            contour_mode: cfg.contour_mode().to_string(),
        };
        serde_json::to_writer(&mut manifest, &entry)?;
        manifest.write_all(b"\n")?;
        entries.push(entry);
    }
    manifest.flush()?;
    Ok(entries)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Loads the sketches listed in a manifest, resolving paths against `dir`.
pub fn load_pair_dataset(dir: impl AsRef<Path>) -> Result<Vec<SketchPair>> {
    let dir: PathBuf = dir.as_ref().into();
    read_manifest(dir.join(MANIFEST_FILE))?
        .into_iter()
        .map(|e| {
            let pose = e.pose()?;
            Ok(SketchPair {
                sketch: SketchImage::load_png(dir.join(&e.sketch_path), Some(pose))?,
                mesh_name: e.mesh_name,
            })
        })
        .collect()
}
