//! Triangle meshes: the explicit-geometry currency of the pipeline.
//!
//! Meshes are indexed triangle soups and may be non-watertight. Boundary
//! edges (edges referenced by a single triangle) are expected for garments
//! and are never repaired.

mod index;
mod normalize;
mod obj;

use std::collections::HashMap;

pub use index::{sample_surface, ClosestPoint, SurfaceIndex};
pub use normalize::{normalize_mesh, NormalizeTransform};
pub use obj::{load_mesh, parse_obj, save_mesh, write_obj};

use crate::geom::{triangle_area, Aabb, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub name: String,
}

impl TriMesh {
    /// Builds a mesh after checking index bounds and coordinate finiteness.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let name = name.into();
        if let Some(v) = vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("vertex {v:?} of mesh `{name}`")));
        }
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidArgument(format!(
                "triangle {t:?} indexes past {n} vertices in mesh `{name}`"
            )));
        }
        Ok(Self {
            vertices,
            triangles,
            name,
        })
    }

    /// An empty mesh; used as the result of meshing a field with no surface.
    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            name: name.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, tri: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[tri];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.corners(tri);
        triangle_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// Undirected edges used by exactly one triangle, sorted.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut counts: HashMap<[usize; 2], usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = if a < b { [a, b] } else { [b, a] };
                *counts.entry(key).or_default() += 1;
            }
        }
        let mut edges: Vec<_> = counts
            .into_iter()
            .filter_map(|(e, c)| (c == 1).then_some(e))
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.boundary_edges().len()
    }

    /// Returns a copy with every vertex mapped through `f`.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            name: self.name.clone(),
        }
    }
}
