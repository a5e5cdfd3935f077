//! Unsigned distance fields behind one query interface, with surface
//! projection along the negative gradient and dense point-cloud extraction.

mod analytic;
mod grid;

use rayon::prelude::*;

pub use analytic::AnalyticField;
pub use grid::UdfGrid;

use crate::geom::Vec3;
use crate::mesh::SurfaceIndex;
use crate::sampling::EvalGrid;

/// Gradients shorter than this are treated as vanishing.
pub const MIN_GRADIENT_NORM: f64 = 1e-8;

/// Projection stops once the field value drops below this.
pub const DEFAULT_PROJECTION_EPS: f64 = 1e-4;

pub const DEFAULT_PROJECTION_ITERS: usize = 3;

/// A scalar field that is non-negative everywhere.
pub trait FieldQuery: Sync {
    fn value(&self, p: &Vec3) -> f64;

    /// Finite-difference step used by the default [`FieldQuery::gradient`].
    fn gradient_step(&self) -> f64 {
        1e-5
    }

    fn gradient(&self, p: &Vec3) -> Vec3 {
        field_gradient(self, p, self.gradient_step())
    }

    /// Value and gradient together; fields with a shared forward pass override this.
    fn value_and_gradient(&self, p: &Vec3) -> (f64, Vec3) {
        (self.value(p), self.gradient(p))
    }

    /// Batched values. Learned fields override this with a batched forward pass.
    fn values(&self, points: &[Vec3]) -> Vec<f64> {
        points.par_iter().map(|p| self.value(p)).collect()
    }
}

/// Central finite-difference gradient with step `h` per axis.
pub fn field_gradient<F: FieldQuery + ?Sized>(field: &F, p: &Vec3, h: f64) -> Vec3 {
    let mut g = Vec3::zeros();
    for axis in 0..3 {
        let mut hi = *p;
        let mut lo = *p;
        hi[axis] += h;
        lo[axis] -= h;
        g[axis] = (field.value(&hi) - field.value(&lo)) / (2.0 * h);
    }
    g
}

/// Exact UDF of a triangle mesh.
pub struct MeshField<'a> {
    pub index: &'a SurfaceIndex,
}

impl FieldQuery for MeshField<'_> {
    fn value(&self, p: &Vec3) -> f64 {
        self.index.distance(p)
    }

    fn gradient(&self, p: &Vec3) -> Vec3 {
        let c = self.index.closest_point(p);
        if c.distance > 0.0 {
            (p - c.point) / c.distance
        } else {
            Vec3::zeros()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: Vec3,
    /// Set when a vanishing gradient stopped the walk; `point` is then the input.
    pub flagged: bool,
    pub iterations: usize,
}

/// Walks `p` toward the zero level set with `q <- q - f(q) * grad f(q) / |grad f(q)|`.
pub fn project_point<F: FieldQuery + ?Sized>(field: &F, p: &Vec3, max_iters: usize, eps: f64) -> Projection {
    let mut q = *p;
    for it in 0..max_iters.max(1) {
        let (d, g) = field.value_and_gradient(&q);
        if d < eps {
            return Projection {
                point: q,
                flagged: false,
                iterations: it,
            };
        }
        let n = g.norm();
        if n < MIN_GRADIENT_NORM {
            return Projection {
                point: *p,
                flagged: true,
                iterations: it,
            };
        }
        q -= g * (d / n);
    }
    Projection {
        point: q,
        flagged: false,
        iterations: max_iters,
    }
}

/// A densified surface point and the grid node it was projected from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSample {
    pub point: Vec3,
    pub seed: Vec3,
}

/// Projects every grid node with field value below `band` onto the surface.
pub fn densify_point_cloud<F: FieldQuery + ?Sized>(field: &F, grid: &EvalGrid, band: f64, iters: usize) -> Vec<Vec3> {
    densify_samples(field, grid, band, iters)
        .into_iter()
        .map(|s| s.point)
        .collect()
}

pub fn densify_samples<F: FieldQuery + ?Sized>(field: &F, grid: &EvalGrid, band: f64, iters: usize) -> Vec<DenseSample> {
    let nodes = grid.points();
    let values = field.values(&nodes);
    let seeds: Vec<Vec3> = nodes
        .into_iter()
        .zip(values)
        .filter_map(|(p, v)| (v < band).then_some(p))
        .collect();
    project_seeds(field, &seeds, iters)
}

/// Projects the given seeds, dropping those whose walk was flagged.
pub fn project_seeds<F: FieldQuery + ?Sized>(field: &F, seeds: &[Vec3], iters: usize) -> Vec<DenseSample> {
    let out: Vec<DenseSample> = seeds
        .par_iter()
        .filter_map(|s| {
            let pr = project_point(field, s, iters, DEFAULT_PROJECTION_EPS);
            (!pr.flagged).then_some(DenseSample {
                point: pr.point,
                seed: *s,
            })
        })
        .collect();
    if out.is_empty() {
        log::warn!("densification found no grid point inside the band");
    }
    out
}
