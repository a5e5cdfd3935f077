//! Synchronous generate / capture / edit / reset operations behind the HTTP layer.

use serde::{Deserialize, Serialize};
use udfcloth::decoder::Checkpoint;
use udfcloth::editor::{coarse_mesh, optimize_latent, EditConfig, EditSession};
use udfcloth::encoder::{SketchLibrary, DEFAULT_TOP_K};
use udfcloth::mesh::{write_obj, TriMesh};
use udfcloth::primitives::bundled_by_name;
use udfcloth::sketch::{build_pair_dataset, contour_from_depth, render_depth, CameraPose, PairConfig, SketchImage};
use udfcloth::{Error, Result};

/// Decoder, latents and retrieval library shared by every session.
#[derive(Debug, Clone)]
pub struct Model {
    pub checkpoint: Checkpoint,
    pub library: SketchLibrary,
}

impl Model {
    pub fn new(checkpoint: Checkpoint, library: SketchLibrary) -> Result<Self> {
        if library.is_empty() {
            return Err(Error::EmptyLibrary);
        }
        Ok(Self { checkpoint, library })
    }

    /// Builds a library by rendering the bundled meshes named in the checkpoint.
    pub fn with_bundled_library(checkpoint: Checkpoint, pairs: &PairConfig) -> Result<Self> {
        let meshes: Vec<TriMesh> = checkpoint
            .latents
            .names()
            .filter_map(|n| {
                let m = bundled_by_name(n);
                if m.is_none() {
                    log::warn!("no bundled mesh named {n}; it is left out of the library");
                }
                m
            })
            .collect();
        let pairs = build_pair_dataset(&meshes, pairs)?;
        let (library, _) = SketchLibrary::build(&pairs, &checkpoint.latents);
        Self::new(checkpoint, library)
    }

    /// Size of the sketches in the library.
    pub fn image_size(&self) -> (usize, usize) {
        self.library.image_size().expect("library is non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub generate_steps: usize,
    pub edit_steps: usize,
    pub top_k: usize,
    pub mesh_resolution: usize,
    pub edit: EditConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let edit = EditConfig::default();
        Self {
            generate_steps: 20,
            edit_steps: 50,
            top_k: DEFAULT_TOP_K,
            mesh_resolution: edit.grid_resolution,
            edit,
        }
    }
}

/// Editing state of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub z: Vec<f64>,
    pub z_init: Vec<f64>,
    pub pose: CameraPose,
    pub shape_name: String,
    #[serde(skip, default = "empty_mesh")]
    pub mesh: TriMesh,
    pub created_unix: u64,
    pub updated_unix: u64,
}

fn empty_mesh() -> TriMesh {
    TriMesh::empty("session")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generated {
    pub chamfer_score: f64,
    pub retrieval_score: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edited {
    pub chamfer_before: f64,
    pub chamfer_after: f64,
    pub steps: usize,
    pub diverged: bool,
    pub converged: bool,
    pub history: Vec<(usize, f64)>,
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Decodes an uploaded PNG and resamples it to `pose`.
pub fn decode_sketch(png: &[u8], pose: CameraPose) -> Result<SketchImage> {
    let sketch = SketchImage::from_png_bytes(png, None)?.resampled(pose);
    if sketch.is_blank() {
        return Err(Error::EmptySketch);
    }
    Ok(sketch)
}

pub fn display_mesh(model: &Model, cfg: &EngineConfig, z: &[f64]) -> Result<TriMesh> {
    let mut mesh = coarse_mesh(&model.checkpoint.decoder, z, cfg.mesh_resolution, cfg.edit.max_surface_value)?;
    mesh.name = "reconstruction".into();
    Ok(mesh)
}

/// Retrieval followed by a short latent refinement.
pub fn generate(model: &Model, cfg: &EngineConfig, png: &[u8]) -> Result<(SessionState, Generated)> {
    let (w, h) = model.image_size();
    let sketch = decode_sketch(png, CameraPose::new(0.0, 0.0, w, h)?)?;
    let enc = model.library.encode(&sketch, cfg.top_k)?;
    let sketch = sketch.resampled(enc.pose);
    let session = EditSession::new(enc.latent.clone(), sketch, cfg.edit.clone().with_steps(cfg.generate_steps))?;
    let out = optimize_latent(session, &model.checkpoint.decoder)?;
    let mesh = display_mesh(model, cfg, &out.z)?;
    if mesh.is_empty() {
        return Err(Error::EmptyMesh("reconstruction".into()));
    }
    let now = now_unix();
    let state = SessionState {
        z_init: out.z.clone(),
        z: out.z.clone(),
        pose: enc.pose,
        shape_name: enc.shape_name.clone(),
        mesh,
        created_unix: now,
        updated_unix: now,
    };
    let info = Generated {
        chamfer_score: out.best_chamfer().unwrap_or(f64::NAN),
        retrieval_score: enc.score,
        diverged: out.diverged,
    };
    Ok((state, info))
}

/// Contour sketch of the session mesh at a new pose, which becomes the session pose.
pub fn capture(model: &Model, state: &mut SessionState, cfg: &EngineConfig, azimuth_deg: f64, elevation_deg: f64) -> Result<SketchImage> {
    let (w, _) = model.image_size();
    let pose = CameraPose::from_degrees(azimuth_deg, elevation_deg, w)?;
    let sketch = contour_from_depth(&render_depth(&state.mesh, &pose), cfg.edit.depth_edge_threshold, pose);
    state.pose = pose;
    state.updated_unix = now_unix();
    Ok(sketch)
}

pub fn edit(model: &Model, state: &mut SessionState, cfg: &EngineConfig, png: &[u8]) -> Result<Edited> {
    let sketch = decode_sketch(png, state.pose)?;
    let session = EditSession::new(state.z.clone(), sketch, cfg.edit.clone().with_steps(cfg.edit_steps))?;
    let out = optimize_latent(session, &model.checkpoint.decoder)?;
    let mesh = display_mesh(model, cfg, &out.z)?;
    state.z = out.z.clone();
    state.mesh = mesh;
    state.updated_unix = now_unix();
    Ok(Edited {
        chamfer_before: out.initial_chamfer().unwrap_or(f64::NAN),
        chamfer_after: out.best_chamfer().unwrap_or(f64::NAN),
        steps: out.history.len().saturating_sub(1),
        diverged: out.diverged,
        converged: out.converged,
        history: out.history,
    })
}

pub fn reset(model: &Model, state: &mut SessionState, cfg: &EngineConfig) -> Result<()> {
    state.z = state.z_init.clone();
    state.mesh = display_mesh(model, cfg, &state.z)?;
    state.updated_unix = now_unix();
    Ok(())
}

pub fn obj_bytes(mesh: &TriMesh) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_obj(mesh, &mut buf)?;
    Ok(buf)
}
