//! Latent-code editing: gradient descent on the latent so the decoded shape's
//! projected contour matches a target sketch.
//!
//! Each step decodes a coarse grid, extracts its mesh, renders the contour at
//! the session pose and back-projects every contour pixel onto the mesh. Those
//! points are moved onto the decoded surface and form the projected contour
//! `S_p`. The latent gradient moves each point along the surface normal by the
//! decoder's latent sensitivity, measured at two probes straddling the surface.

use serde::{Deserialize, Serialize};

use crate::decoder::{decode_grid, Adam, CullConfig, Decoder, LatentField};
use crate::field::MIN_GRADIENT_NORM;
use crate::geom::Vec3;
use crate::kdtree::KdTree;
use crate::mesh::TriMesh;
use crate::mesher::{extract_mesh, prune_triangles, MeshingConfig};
use crate::sampling::EvalGrid;
use crate::sketch::{contour_from_depth, render_depth, CameraPose, SketchImage, DEFAULT_DEPTH_EDGE_THRESHOLD, NO_FACE};
use crate::{Error, Result};

/// Learned fields leave shallow valleys away from the surface that marching
/// cubes would mesh; real surface vertices decode well below this value.
pub const DEFAULT_MAX_SURFACE_VALUE: f64 = 0.03;

/// Chamfer value reported when either point set is empty.
pub const CHAMFER_SENTINEL: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditConfig {
    pub steps: usize,
    pub step_size: f64,
    /// Number of contour samples per step; contour pixels repeat when there are fewer.
    pub surface_samples: usize,
    pub grid_resolution: usize,
    /// Distance of the two probes from each contour seed.
    pub probe_offset: f64,
    pub depth_edge_threshold: Option<f64>,
    /// Decoded triangles whose mean vertex value exceeds this are dropped.
    pub max_surface_value: Option<f64>,
    /// Mean squared pixel residual below which the fit counts as converged.
    pub converge_mean_sq: f64,
    pub divergence_factor: f64,
    pub divergence_patience: usize,
}

impl Default for EditConfig {
    fn default() -> Self {
        Self {
            steps: 50,
            step_size: 1e-2,
            surface_samples: 4000,
            grid_resolution: 48,
            probe_offset: 0.02,
            depth_edge_threshold: Some(DEFAULT_DEPTH_EDGE_THRESHOLD),
            max_surface_value: Some(DEFAULT_MAX_SURFACE_VALUE),
            converge_mean_sq: 1.0,
            divergence_factor: 10.0,
            divergence_patience: 5,
        }
    }
}

impl EditConfig {
    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size must be positive");
        }
        if self.surface_samples == 0 {
            return bad("surface_samples must be positive");
        }
        if self.grid_resolution < 8 {
            return bad("grid_resolution must be at least 8");
        }
        if !(self.probe_offset > 0.0) {
            return bad("probe_offset must be positive");
        }
        if self.max_surface_value.is_some_and(|v| !(v > 0.0)) {
            return bad("max_surface_value must be positive");
        }
        if !(self.divergence_factor > 1.0) || self.divergence_patience == 0 {
            return bad("divergence rule needs factor > 1 and patience > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chamfer2d {
    pub value: f64,
    /// Set when one side was empty and `value` is the sentinel.
    pub degenerate: bool,
    /// Number of projected points plus number of ink pixels.
    pub terms: usize,
}

impl Chamfer2d {
    pub fn mean(&self) -> f64 {
        if self.terms == 0 {
            CHAMFER_SENTINEL
        } else {
            self.value / self.terms as f64
        }
    }
}

/// Symmetric sum of squared nearest-neighbour distances, in pixels squared,
/// between projected points and the sketch's ink pixel centers.
pub fn chamfer_2d(points: &[[f64; 2]], sketch: &SketchImage) -> Chamfer2d {
    let ink = sketch.ink_points();
    if points.is_empty() || ink.is_empty() {
        return Chamfer2d {
            value: CHAMFER_SENTINEL,
            degenerate: true,
            terms: 0,
        };
    }
    let (value, _) = chamfer_terms(points, &ink);
    Chamfer2d {
        value,
        degenerate: false,
        terms: points.len() + ink.len(),
    }
}

/// Chamfer value and its gradient with respect to every projected point.
pub fn chamfer_terms(points: &[[f64; 2]], ink: &[[f64; 2]]) -> (f64, Vec<[f64; 2]>) {
    let ink_tree = KdTree::build(ink.to_vec());
    let point_tree = KdTree::build(points.to_vec());
    let mut value = 0.0;
    let mut grad = vec![[0.0; 2]; points.len()];
    for (v, g) in points.iter().zip(&mut grad) {
        let (j, d2) = ink_tree.nearest(v).expect("ink is non-empty");
        let s = ink_tree.point(j);
        value += d2;
        g[0] += 2.0 * (v[0] - s[0]);
        g[1] += 2.0 * (v[1] - s[1]);
    }
    for s in ink {
        let (i, d2) = point_tree.nearest(s).expect("points are non-empty");
        let v = point_tree.point(i);
        value += d2;
        // The tree stores points in input order, so `i` indexes `points`.
        grad[i][0] += 2.0 * (v[0] - s[0]);
        grad[i][1] += 2.0 * (v[1] - s[1]);
    }
    (value, grad)
}

/// One point of the projected contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSample {
    /// Back-projected contour pixel on the coarse mesh.
    pub seed: Vec3,
    /// `seed` moved onto the decoded surface by [`probe_project`].
    pub point: Vec3,
    /// Unit normal of the mesh face under the pixel, unoriented.
    pub normal: Vec3,
}

/// Moves each seed onto the decoded surface along its normal.
///
/// One unit-gradient projection step is taken from each of the probes
/// `seed +- offset * n` and the two landing points are averaged, which gives
/// `seed + n (D_- - D_+) / 2`. Any constant floor of the decoded field
/// cancels. The step is clamped to `offset`.
pub fn probe_project(decoder: &Decoder, z: &[f64], seeds: &[Vec3], normals: &[Vec3], offset: f64) -> Result<Vec<Vec3>> {
    let values = decoder.values(&probe_points(seeds, normals, offset), z)?;
    Ok(seeds
        .iter()
        .zip(normals)
        .zip(values.chunks(2))
        .map(|((s, n), d)| s + n * probe_step(d[0], d[1], offset))
        .collect())
}

fn probe_points(seeds: &[Vec3], normals: &[Vec3], offset: f64) -> Vec<Vec3> {
    seeds
        .iter()
        .zip(normals)
        .flat_map(|(s, n)| [s + n * offset, s - n * offset])
        .collect()
}

fn probe_step(d_plus: f64, d_minus: f64, offset: f64) -> f64 {
    (0.5 * (d_minus - d_plus)).clamp(-offset, offset)
}

/// Replaces mesh normals by the decoder's normal direction,
/// `grad D_+ - grad D_-` at probes along the mesh normal.
pub fn refine_normals(decoder: &Decoder, z: &[f64], seeds: &[Vec3], normals: &[Vec3], offset: f64) -> Result<Vec<Vec3>> {
    let evals = decoder.evaluate_batch(&probe_points(seeds, normals, offset), z)?;
    Ok(normals
        .iter()
        .zip(evals.chunks(2))
        .map(|(n, e)| {
            let d = e[0].grad_p - e[1].grad_p;
            if d.norm() > MIN_GRADIENT_NORM {
                d.normalize()
            } else {
                *n
            }
        })
        .collect())
}

/// Decodes the grid used for contour sampling and extracts its mesh,
/// optionally pruning triangles that sit above `max_surface_value`.
pub fn coarse_mesh(decoder: &Decoder, z: &[f64], resolution: usize, max_surface_value: Option<f64>) -> Result<TriMesh> {
    let field = LatentField::new(decoder, z)?;
    let meshing = MeshingConfig::auto(EvalGrid::new(resolution)?.spacing());
    let grid = decode_grid(&field, resolution, Some(CullConfig::for_band(meshing.surface_band)))?;
    let mesh = extract_mesh(&grid, &meshing)?;
    match max_surface_value {
        Some(limit) if !mesh.is_empty() => prune_triangles(&mesh, &decoder.values(&mesh.vertices, z)?, limit),
        _ => Ok(mesh),
    }
}

/// Samples the projected contour of the decoded shape at `pose`.
pub fn contour_samples(decoder: &Decoder, z: &[f64], pose: &CameraPose, cfg: &EditConfig) -> Result<Vec<ContourSample>> {
    let mesh = coarse_mesh(decoder, z, cfg.grid_resolution, cfg.max_surface_value)?;
    let depth = render_depth(&mesh, pose);
    let contour = contour_from_depth(&depth, cfg.depth_edge_threshold, *pose);
    let mut seeds = Vec::new();
    let mut normals = Vec::new();
    for (l, ink) in contour.ink_mask().iter().enumerate() {
        let face = depth.face[l];
        if !*ink || face == NO_FACE {
            continue;
        }
        let [a, b, c] = mesh.triangles[face as usize].map(|i| mesh.vertices[i]);
        let n = (b - a).cross(&(c - a));
        if n.norm() < 1e-14 {
            continue;
        }
        let (x, y) = (l % pose.width, l / pose.width);
        seeds.push(pose.unproject(x as f64 + 0.5, y as f64 + 0.5, depth.depth[l]));
        normals.push(n.normalize());
    }
    if seeds.is_empty() {
        return Err(Error::EmptyContour);
    }
    let n = seeds.len();
    let pick: Vec<usize> = (0..cfg.surface_samples).map(|i| i * n / cfg.surface_samples).collect();
    let seeds: Vec<Vec3> = pick.iter().map(|&i| seeds[i]).collect();
    let normals: Vec<Vec3> = pick.iter().map(|&i| normals[i]).collect();
    let normals = refine_normals(decoder, z, &seeds, &normals, cfg.probe_offset)?;
    let points = probe_project(decoder, z, &seeds, &normals, cfg.probe_offset)?;
    Ok(seeds
        .into_iter()
        .zip(points)
        .zip(normals)
        .map(|((seed, point), normal)| ContourSample { seed, point, normal })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentGradient {
    pub chamfer: Chamfer2d,
    pub gradient: Vec<f64>,
    pub skipped: usize,
    pub total: usize,
}

/// Chamfer of `samples` against `sketch` and its gradient with respect to `z`.
///
/// The image-space gradient `g` of each sample is lifted to world space and
/// turned into a latent gradient through `-(g . grad D) dD/dz`, averaged over
/// the two probes that placed the sample. At each probe the decoder gradient
/// is taken as the unit normal pointing away from the seed, so the result is
/// the exact derivative of the placement in [`probe_project`]. Samples whose
/// step was clamped contribute nothing; samples with a vanishing decoder
/// gradient at a probe are skipped and counted.
pub fn latent_gradient(
    decoder: &Decoder,
    z: &[f64],
    pose: &CameraPose,
    sketch: &SketchImage,
    samples: &[ContourSample],
    probe_offset: f64,
) -> Result<LatentGradient> {
    if sketch.is_blank() {
        return Err(Error::EmptySketch);
    }
    if samples.is_empty() {
        return Err(Error::EmptyContour);
    }
    let projected: Vec<[f64; 2]> = samples
        .iter()
        .map(|s| {
            let (u, v, _) = pose.project(&s.point);
            [u, v]
        })
        .collect();
    let ink = sketch.ink_points();
    let (value, grad2) = chamfer_terms(&projected, &ink);
    let seeds: Vec<Vec3> = samples.iter().map(|s| s.seed).collect();
    let normals: Vec<Vec3> = samples.iter().map(|s| s.normal).collect();
    let evals = decoder.evaluate_batch(&probe_points(&seeds, &normals, probe_offset), z)?;
    let mut gradient = vec![0.0; z.len()];
    let mut skipped = 0;
    for (i, (g2, pair)) in grad2.iter().zip(evals.chunks(2)).enumerate() {
        if pair.iter().any(|e| e.grad_p.norm() < MIN_GRADIENT_NORM) {
            skipped += 1;
            continue;
        }
        if probe_step(pair[0].value, pair[1].value, probe_offset).abs() >= probe_offset {
            continue;
        }
        let gn = pose.lift_gradient(g2[0], g2[1]).dot(&normals[i]);
        for (sign, e) in [(1.0, &pair[0]), (-1.0, &pair[1])] {
            let c = -0.5 * sign * gn;
            for (g, dz) in gradient.iter_mut().zip(&e.grad_z) {
                *g += c * dz;
            }
        }
    }
    if 2 * skipped > samples.len() {
        return Err(Error::DegenerateGradient {
            skipped,
            total: samples.len(),
        });
    }
    Ok(LatentGradient {
        chamfer: Chamfer2d {
            value,
            degenerate: false,
            terms: projected.len() + ink.len(),
        },
        gradient,
        skipped,
        total: samples.len(),
    })
}

/// Chamfer after re-projecting previously sampled seeds at latent `z`.
///
/// Holding seeds and normals fixed makes this a smooth function of `z`,
/// suitable for finite-difference checks of [`latent_gradient`].
pub fn frozen_chamfer(
    decoder: &Decoder,
    z: &[f64],
    pose: &CameraPose,
    sketch: &SketchImage,
    samples: &[ContourSample],
    probe_offset: f64,
) -> Result<f64> {
    let seeds: Vec<Vec3> = samples.iter().map(|s| s.seed).collect();
    let normals: Vec<Vec3> = samples.iter().map(|s| s.normal).collect();
    let points: Vec<[f64; 2]> = probe_project(decoder, z, &seeds, &normals, probe_offset)?
        .iter()
        .map(|p| {
            let (u, v, _) = pose.project(p);
            [u, v]
        })
        .collect();
    Ok(chamfer_2d(&points, sketch).value)
}

/// Samples the contour at `z` and evaluates chamfer and latent gradient.
pub fn evaluate_latent(
    decoder: &Decoder,
    z: &[f64],
    pose: &CameraPose,
    sketch: &SketchImage,
    cfg: &EditConfig,
) -> Result<LatentGradient> {
    let samples = contour_samples(decoder, z, pose, cfg)?;
    latent_gradient(decoder, z, pose, sketch, &samples, cfg.probe_offset)
}

/// State of one editing run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditSession {
    /// Best latent found so far, or the starting latent before optimizing.
    pub z: Vec<f64>,
    pub z_init: Vec<f64>,
    pub pose: CameraPose,
    #[serde(skip)]
    pub sketch: SketchImage,
    /// `(step, chamfer)` for the initial evaluation and every step after it.
    pub history: Vec<(usize, f64)>,
    pub config: EditConfig,
    pub diverged: bool,
    pub converged: bool,
}

impl EditSession {
    /// A session fitting `z` to `sketch` at the sketch's own pose.
    pub fn new(z: Vec<f64>, sketch: SketchImage, config: EditConfig) -> Result<Self> {
        config.validate()?;
        if z.is_empty() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial latent".into()));
        }
        if sketch.is_blank() {
            return Err(Error::EmptySketch);
        }
        Ok(Self {
            z_init: z.clone(),
            z,
            pose: sketch.pose,
            sketch,
            history: Vec::new(),
            config,
            diverged: false,
            converged: false,
        })
    }

    pub fn initial_chamfer(&self) -> Option<f64> {
        self.history.first().map(|h| h.1)
    }

    pub fn best_chamfer(&self) -> Option<f64> {
        self.history.iter().map(|h| h.1).min_by(f64::total_cmp)
    }
}

/// Runs `session.config.steps` Adam steps and returns the session holding the
/// lowest-chamfer latent seen.
///
/// Once the mean squared residual drops below `converge_mean_sq` the latent is
/// left unchanged for the remaining steps. The run stops early, flagged as
/// diverged, when the chamfer stays above `divergence_factor` times its
/// initial value for `divergence_patience` consecutive steps or when the
/// decoded contour vanishes.
pub fn optimize_latent(mut session: EditSession, decoder: &Decoder) -> Result<EditSession> {
    let cfg = session.config.clone();
    let pose = session.pose;
    session.history.clear();
    session.diverged = false;
    session.converged = false;

    let mut z = session.z.clone();
    let mut current = evaluate_latent(decoder, &z, &pose, &session.sketch, &cfg)?;
    let initial = current.chamfer.value;
    session.history.push((0, initial));
    let mut best = (initial, z.clone());
    let mut adam = Adam::new(z.len(), 0.9, 0.999);
    let mut over = 0;

    for step in 1..=cfg.steps {
        if current.chamfer.mean() <= cfg.converge_mean_sq {
            session.converged = true;
            session.history.push((step, current.chamfer.value));
            continue;
        }
        adam.step(z.iter_mut(), current.gradient.iter().copied(), cfg.step_size);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("latent after step {step}")));
        }
        current = match evaluate_latent(decoder, &z, &pose, &session.sketch, &cfg) {
            Ok(c) => c,
            Err(Error::EmptyContour | Error::DegenerateGradient { .. }) => {
                log::warn!("contour lost at step {step}; stopping");
                session.history.push((step, CHAMFER_SENTINEL));
                session.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let c = current.chamfer.value;
        session.history.push((step, c));
        log::debug!("edit step {step}: chamfer {c:.3}");
        if c < best.0 {
            best = (c, z.clone());
        }
        if c > cfg.divergence_factor * initial {
            over += 1;
            if over >= cfg.divergence_patience {
                log::warn!("chamfer above {}x its initial value for {over} steps; stopping", cfg.divergence_factor);
                session.diverged = true;
                break;
            }
        } else {
            over = 0;
        }
    }
    session.z = best.1;
    Ok(session)
}
