//! Procedural test meshes: a watertight sphere plus open garment-like
//! surfaces (skirt, dress tube, cape, sheet).

use std::f64::consts::PI;

use crate::geom::Vec3;
use crate::mesh::{normalize_mesh, TriMesh};

/// Radial segment count of the bundled tube-like garments.
pub const RADIAL_SEGMENTS: usize = 48;

/// Target half-extent used by the bundled meshes and the sampling recipe.
pub const NORMALIZED_SCALE: f64 = 0.8;

pub fn uv_sphere(name: &str, radius: f64, segments: usize, rings: usize) -> TriMesh {
    assert!(segments >= 3 && rings >= 2);
    let mut vertices = vec![Vec3::new(0.0, radius, 0.0)];
    for r in 1..rings {
        let theta = PI * r as f64 / rings as f64;
        for s in 0..segments {
            let phi = 2.0 * PI * s as f64 / segments as f64;
            vertices.push(Vec3::new(
                radius * theta.sin() * phi.cos(),
                radius * theta.cos(),
                radius * theta.sin() * phi.sin(),
            ));
        }
    }
    vertices.push(Vec3::new(0.0, -radius, 0.0));
    let bottom = vertices.len() - 1;
    let ring = |r: usize, s: usize| 1 + (r - 1) * segments + s % segments;

    let mut triangles = Vec::new();
    for s in 0..segments {
        triangles.push([0, ring(1, s + 1), ring(1, s)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b) = (ring(r, s), ring(r, s + 1));
            let (c, d) = (ring(r + 1, s), ring(r + 1, s + 1));
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    for s in 0..segments {
        triangles.push([bottom, ring(rings - 1, s), ring(rings - 1, s + 1)]);
    }
    TriMesh::new(name, vertices, triangles).expect("valid sphere")
}

/// Surface of revolution around +y, open at both ends. `radius(t)` gives
/// the radius at height fraction `t` in `[0, 1]` (0 = bottom). `arc` is the
/// swept angle; a full turn wraps the seam.
fn revolved(
    name: &str,
    height: f64,
    radial: usize,
    rows: usize,
    arc: f64,
    radius: impl Fn(f64) -> f64,
) -> TriMesh {
    let closed = (arc - 2.0 * PI).abs() < 1e-12;
    let cols = if closed { radial } else { radial + 1 };
    let mut vertices = Vec::with_capacity((rows + 1) * cols);
    for r in 0..=rows {
        let t = r as f64 / rows as f64;
        let y = -0.5 * height + t * height;
        let rad = radius(t);
        for s in 0..cols {
            let phi = arc * s as f64 / radial as f64 - 0.5 * arc + 0.5 * PI;
            vertices.push(Vec3::new(rad * phi.cos(), y, rad * phi.sin()));
        }
    }
    let idx = |r: usize, s: usize| r * cols + s % cols;
    let mut triangles = Vec::new();
    for r in 0..rows {
        for s in 0..radial {
            let (a, b) = (idx(r, s), idx(r, s + 1));
            let (c, d) = (idx(r + 1, s), idx(r + 1, s + 1));
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    TriMesh::new(name, vertices, triangles).expect("valid surface of revolution")
}

/// Open cone frustum; a flared skirt.
pub fn skirt(radial: usize) -> TriMesh {
    revolved("skirt", 1.0, radial, 12, 2.0 * PI, |t| 0.75 - 0.4 * t)
}

/// Open straight tube; a sleeveless dress proxy.
pub fn dress(radial: usize) -> TriMesh {
    revolved("dress", 1.6, radial, 16, 2.0 * PI, |_| 0.45)
}

/// Open cylinder with the given radius and height.
pub fn open_cylinder(name: &str, radius: f64, height: f64, radial: usize, rows: usize) -> TriMesh {
    revolved(name, height, radial, rows, 2.0 * PI, |_| radius)
}

/// Partial cylinder covering 200 degrees of arc, hanging from the shoulders.
pub fn cape(radial: usize) -> TriMesh {
    revolved("cape", 1.3, radial, 14, 200f64.to_radians(), |t| 0.6 - 0.15 * t)
}

/// Gently waving rectangular sheet, roughly in the z = 0.1 plane.
pub fn sheet(n: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = -0.7 + 1.4 * i as f64 / n as f64;
            let y = -0.6 + 1.2 * j as f64 / n as f64;
            let z = 0.1 + 0.08 * (2.5 * x).sin() * (1.7 * y).cos();
            vertices.push(Vec3::new(x, y, z));
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::new("sheet", vertices, triangles).expect("valid sheet")
}

fn normalized(mesh: TriMesh) -> TriMesh {
    normalize_mesh(&mesh, NORMALIZED_SCALE)
        .expect("procedural meshes have extent")
        .0
}

/// The bundled test meshes, normalized to a maximum coordinate of 0.8.
pub fn bundled() -> Vec<TriMesh> {
    vec![
        normalized(uv_sphere("sphere", 1.0, 48, 24)),
        normalized(skirt(RADIAL_SEGMENTS)),
        normalized(dress(RADIAL_SEGMENTS)),
        normalized(cape(RADIAL_SEGMENTS)),
        normalized(sheet(24)),
    ]
}

/// The three garment shapes used for toy shape-space training.
pub fn toy_garments() -> Vec<TriMesh> {
    vec![
        normalized(skirt(RADIAL_SEGMENTS)),
        normalized(dress(RADIAL_SEGMENTS)),
        normalized(cape(RADIAL_SEGMENTS)),
    ]
}

pub fn bundled_by_name(name: &str) -> Option<TriMesh> {
    bundled().into_iter().find(|m| m.name == name)
}
