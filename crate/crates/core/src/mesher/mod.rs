//! Marching cubes on unsigned distance grids.
//!
//! An unsigned field has no inside, so each cell assigns its own pseudo-signs:
//! the lowest corner is positive and any corner whose gradient opposes it is
//! flipped. Cells are independent, which lets open surfaces end in boundary
//! edges instead of being closed off.

pub mod tables;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::UdfGrid;
use crate::geom::{triangle_area, Vec3};
use crate::mesh::TriMesh;
use crate::{Error, Result};
use tables::{CORNERS, EDGE_CONNECTION, TRIANGLE_CONNECTION};

/// Triangles with area at or below this are dropped.
const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Node gradients shorter than this are replaced by a neighbour's direction.
const RELIABLE_GRADIENT_NORM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshingConfig {
    /// Cells whose smallest corner value reaches this are skipped.
    pub surface_band: f64,
    /// Two corners lie on opposite sides when their gradient dot product is below this.
    pub grad_opposition_threshold: f64,
    /// Corner values below this are snapped onto the surface.
    pub min_corner_value: f64,
}

impl MeshingConfig {
    /// Defaults for a grid with the given node spacing.
    pub fn auto(spacing: f64) -> Self {
        Self {
            surface_band: 2.0 * spacing,
            grad_opposition_threshold: 0.0,
            min_corner_value: 1e-6,
        }
    }

    pub fn for_grid(grid: &UdfGrid) -> Self {
        Self::auto(grid.spacing())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.surface_band > 0.0) {
            return Err(Error::InvalidArgument("surface band must be positive".into()));
        }
        if !(-1.0..=0.0).contains(&self.grad_opposition_threshold) {
            return Err(Error::InvalidArgument("gradient threshold must lie in [-1, 0]".into()));
        }
        if !(self.min_corner_value >= 0.0) {
            return Err(Error::InvalidArgument("min corner value must be non-negative".into()));
        }
        Ok(())
    }
}

/// Crossing position along an edge, measured from the positive corner.
pub fn vertex_interpolate(d_pos: f64, d_neg: f64) -> f64 {
    let s = d_pos + d_neg;
    if d_pos < 1e-12 && d_neg < 1e-12 {
        0.5
    } else {
        (d_pos / s).clamp(0.0, 1.0)
    }
}

/// Where an output vertex sits: on a grid node or inside an axis-aligned grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum VertexKey {
    Node(usize),
    Edge(usize, u8),
}

struct CellOutput {
    vertices: Vec<(VertexKey, Vec3)>,
    triangles: Vec<[usize; 3]>,
}

pub fn extract_mesh(grid: &UdfGrid, cfg: &MeshingConfig) -> Result<TriMesh> {
    cfg.validate()?;
    let r = grid.resolution();
    if r < 8 {
        return Err(Error::InvalidArgument(format!("grid resolution {r} is below 8")));
    }
    let gradients = repair_gradients(grid, &grid.node_gradients(), cfg);
    let slabs: Vec<CellOutput> = (0..r - 1)
        .into_par_iter()
        .map(|k| mesh_slab(grid, &gradients, cfg, k))
        .collect();

    let mut index: HashMap<VertexKey, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for slab in slabs {
        let remap: Vec<usize> = slab
            .vertices
            .iter()
            .map(|(key, p)| {
                *index.entry(*key).or_insert_with(|| {
                    vertices.push(*p);
                    vertices.len() - 1
                })
            })
            .collect();
        for t in slab.triangles {
            let tri = [remap[t[0]], remap[t[1]], remap[t[2]]];
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                continue;
            }
            if triangle_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]) <= MIN_TRIANGLE_AREA {
                continue;
            }
            let mut sorted = tri;
            sorted.sort_unstable();
            if seen.insert(sorted) {
                triangles.push(tri);
            }
        }
    }
    if triangles.is_empty() {
        log::warn!("no cell in the surface band produced triangles");
        return Ok(TriMesh::empty("extracted"));
    }
    let vertices = compact(vertices, &mut triangles);
    TriMesh::new("extracted", vertices, triangles)
}

/// Drops vertices that only belonged to filtered triangles.
fn compact(vertices: Vec<Vec3>, triangles: &mut [[usize; 3]]) -> Vec<Vec3> {
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut out = Vec::new();
    for t in triangles.iter_mut() {
        for v in t.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = out.len();
                out.push(vertices[*v]);
            }
            *v = remap[*v];
        }
    }
    out
}

fn mesh_slab(grid: &UdfGrid, gradients: &[Vec3], cfg: &MeshingConfig, k: usize) -> CellOutput {
    let eg = grid.eval_grid();
    let r = eg.resolution();
    let mut out = CellOutput {
        vertices: Vec::new(),
        triangles: Vec::new(),
    };
    let mut local: HashMap<VertexKey, usize> = HashMap::new();
    for j in 0..r - 1 {
        for i in 0..r - 1 {
            let nodes: [usize; 8] = std::array::from_fn(|c| {
                let o = CORNERS[c];
                eg.linear_index(i + o[0], j + o[1], k + o[2])
            });
            let values: [f64; 8] = std::array::from_fn(|c| grid.values()[nodes[c]]);
            if values.iter().all(|v| *v >= cfg.surface_band) {
                continue;
            }
            let grads: [Vec3; 8] = std::array::from_fn(|c| gradients[nodes[c]]);
            let Some(negative) = pseudo_signs(&values, &grads, cfg) else {
                continue;
            };
            let case = (0..8).fold(0usize, |acc, c| acc | ((negative[c] as usize) << c));
            let row = &TRIANGLE_CONNECTION[case];
            let mut edge_vertex = [usize::MAX; 12];
            for tri in row.chunks(3).take_while(|t| t[0] >= 0) {
                let mut ids = [0usize; 3];
                for (slot, e) in tri.iter().enumerate() {
                    let e = *e as usize;
                    if edge_vertex[e] == usize::MAX {
                        let (key, p) = edge_crossing(eg, &nodes, &values, &negative, cfg, e);
                        edge_vertex[e] = *local.entry(key).or_insert_with(|| {
                            out.vertices.push((key, p));
                            out.vertices.len() - 1
                        });
                    }
                    ids[slot] = edge_vertex[e];
                }
                out.triangles.push(ids);
            }
        }
    }
    out
}

/// Central differences fade to noise at nodes within half a cell of the
/// surface. Such nodes borrow the gradient of their strongest axis neighbour,
/// flipped when a tangent-plane test puts them on the other side of it.
fn repair_gradients(grid: &UdfGrid, gradients: &[Vec3], cfg: &MeshingConfig) -> Vec<Vec3> {
    let eg = grid.eval_grid();
    let r = eg.resolution();
    (0..eg.len())
        .into_par_iter()
        .map(|l| {
            let g = gradients[l];
            let v = grid.values()[l];
            if g.norm() >= RELIABLE_GRADIENT_NORM || v >= cfg.surface_band {
                return g;
            }
            let idx = [l % r, (l / r) % r, l / (r * r)];
            let mut best: Option<usize> = None;
            for axis in 0..3 {
                for step in [-1isize, 1] {
                    let n = idx[axis] as isize + step;
                    if n < 0 || n >= r as isize {
                        continue;
                    }
                    let mut q = idx;
                    q[axis] = n as usize;
                    let m = eg.linear_index(q[0], q[1], q[2]);
                    if best.is_none_or(|b| gradients[m].norm() > gradients[b].norm()) {
                        best = Some(m);
                    }
                }
            }
            let Some(m) = best.filter(|m| gradients[*m].norm() >= RELIABLE_GRADIENT_NORM) else {
                return g;
            };
            let n = gradients[m].normalize();
            let offset = (eg.point(l) - eg.point(m)).dot(&n) + grid.values()[m];
            if offset >= 0.0 {
                n
            } else {
                -n
            }
        })
        .collect()
}

/// Returns which corners are pseudo-negative, or `None` when the cell has no usable reference.
fn pseudo_signs(values: &[f64; 8], grads: &[Vec3; 8], cfg: &MeshingConfig) -> Option<[bool; 8]> {
    let on_surface: [bool; 8] = std::array::from_fn(|c| values[c] < cfg.min_corner_value);
    let reference = (0..8)
        .filter(|c| !on_surface[*c])
        .min_by(|a, b| values[*a].total_cmp(&values[*b]))?;
    let unit: [Vec3; 8] = std::array::from_fn(|c| grads[c].try_normalize(1e-12).unwrap_or_else(Vec3::zeros));
    let movable = |c: usize| c != reference && !on_surface[c] && values[c] < cfg.surface_band;
    let opposed = |a: usize, b: usize| unit[a].dot(&unit[b]) < cfg.grad_opposition_threshold;

    let mut negative: [bool; 8] = std::array::from_fn(|c| on_surface[c] || (movable(c) && opposed(c, reference)));

    let inconsistent = (0..8).any(|a| {
        (a + 1..8).any(|b| {
            movable(a) && movable(b) && (negative[a] == negative[b]) == opposed(a, b)
        })
    });
    if inconsistent {
        let current = negative;
        for c in (0..8).filter(|c| movable(*c)) {
            let mut vote = 0.0;
            for o in (0..8).filter(|o| *o != c && !on_surface[*o]) {
                let side = if current[o] { -1.0 } else { 1.0 };
                vote += side * unit[c].dot(&unit[o]);
            }
            if vote != 0.0 {
                negative[c] = vote < 0.0;
            }
        }
    }
    Some(negative)
}

fn edge_crossing(
    eg: &crate::sampling::EvalGrid,
    nodes: &[usize; 8],
    values: &[f64; 8],
    negative: &[bool; 8],
    cfg: &MeshingConfig,
    edge: usize,
) -> (VertexKey, Vec3) {
    let [a, b] = EDGE_CONNECTION[edge];
    let (pos, neg) = if negative[a] { (b, a) } else { (a, b) };
    let value = |c: usize| if values[c] < cfg.min_corner_value { 0.0 } else { values[c] };
    let t = vertex_interpolate(value(pos), value(neg));
    if t == 0.0 {
        return (VertexKey::Node(nodes[pos]), eg.point(nodes[pos]));
    }
    if t == 1.0 {
        return (VertexKey::Node(nodes[neg]), eg.point(nodes[neg]));
    }
    let (lo, hi) = if nodes[a] < nodes[b] { (a, b) } else { (b, a) };
    let axis = (0..3).find(|x| CORNERS[lo][*x] != CORNERS[hi][*x]).unwrap_or(0) as u8;
    let pa = eg.point(nodes[pos]);
    let pb = eg.point(nodes[neg]);
    (VertexKey::Edge(nodes[lo], axis), pa + (pb - pa) * t)
}

/// Drops triangles whose mean vertex value exceeds `max_mean` and removes the
/// vertices left unreferenced. `values` holds one field value per vertex.
pub fn prune_triangles(mesh: &TriMesh, values: &[f64], max_mean: f64) -> Result<TriMesh> {
    if values.len() != mesh.vertices.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} vertices",
            values.len(),
            mesh.vertices.len()
        )));
    }
    let mut remap = vec![usize::MAX; mesh.vertices.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for t in &mesh.triangles {
        if t.iter().map(|&i| values[i]).sum::<f64>() / 3.0 > max_mean {
            continue;
        }
        triangles.push(t.map(|i| {
            if remap[i] == usize::MAX {
                remap[i] = vertices.len();
                vertices.push(mesh.vertices[i]);
            }
            remap[i]
        }));
    }
    TriMesh::new(mesh.name.clone(), vertices, triangles)
}

