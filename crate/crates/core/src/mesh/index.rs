//! Exact point-to-surface distance queries over a triangle BVH, plus
//! area-weighted surface sampling.

use rand::Rng;

use super::TriMesh;
use crate::geom::{closest_point_on_triangle, triangle_area, Aabb, Vec3};
use crate::{Error, Result};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub distance: f64,
    pub point: Vec3,
    pub triangle: usize,
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    // Leaves: `start..start + count` into `order`. Inner nodes: children at `start` and `start + 1`.
    start: usize,
    count: usize,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

/// Immutable acceleration structure over a mesh's triangles.
#[derive(Debug, Clone)]
pub struct SurfaceIndex {
    nodes: Vec<Node>,
    order: Vec<usize>,
    corners: Vec<[Vec3; 3]>,
    cumulative_area: Vec<f64>,
}

impl SurfaceIndex {
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptyMesh(mesh.name.clone()));
        }
        let corners: Vec<[Vec3; 3]> = (0..mesh.triangles.len()).map(|t| mesh.corners(t)).collect();
        let boxes: Vec<Aabb> = corners.iter().map(|c| Aabb::from_points(c)).collect();
        let centroids: Vec<Vec3> = corners.iter().map(|c| (c[0] + c[1] + c[2]) / 3.0).collect();

        let mut order: Vec<usize> = (0..corners.len()).collect();
        let mut nodes = vec![Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        }];
        let mut stack = vec![(0usize, 0usize, order.len())];
        while let Some((node, lo, hi)) = stack.pop() {
            let bounds = order[lo..hi]
                .iter()
                .fold(Aabb::empty(), |b, &t| b.merge(&boxes[t]));
            nodes[node].bounds = bounds;
            if hi - lo <= LEAF_SIZE {
                nodes[node].start = lo;
                nodes[node].count = hi - lo;
                continue;
            }
            let centroid_box = Aabb::from_points(order[lo..hi].iter().map(|&t| &centroids[t]));
            let axis = centroid_box.longest_axis();
            let mid = lo + (hi - lo) / 2;
            order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                centroids[a][axis].total_cmp(&centroids[b][axis])
            });
            let left = nodes.len();
            for _ in 0..2 {
                nodes.push(Node {
                    bounds: Aabb::empty(),
                    start: 0,
                    count: 0,
                });
            }
            nodes[node].start = left;
            stack.push((left, lo, mid));
            stack.push((left + 1, mid, hi));
        }

        let mut cumulative_area = Vec::with_capacity(corners.len());
        let mut acc = 0.0;
        for c in &corners {
            acc += triangle_area(&c[0], &c[1], &c[2]);
            cumulative_area.push(acc);
        }

        Ok(Self {
            nodes,
            order,
            corners,
            cumulative_area,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.corners.len()
    }

    pub fn total_area(&self) -> f64 {
        self.cumulative_area.last().copied().unwrap_or(0.0)
    }

    /// Exact closest point on the surface. Ties resolve to the lowest triangle index.
    pub fn closest_point(&self, p: &Vec3) -> ClosestPoint {
        let mut best_d2 = f64::INFINITY;
        let mut best = (Vec3::zeros(), usize::MAX);
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.distance_squared(p) > best_d2 {
                continue;
            }
            if node.is_leaf() {
                for &t in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = &self.corners[t];
                    let (q, _) = closest_point_on_triangle(p, a, b, c);
                    let d2 = (p - q).norm_squared();
                    if d2 < best_d2 || (d2 == best_d2 && t < best.1) {
                        best_d2 = d2;
                        best = (q, t);
                    }
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let dl = self.nodes[l].bounds.distance_squared(p);
                let dr = self.nodes[r].bounds.distance_squared(p);
                // Visit the nearer child first (pushed last).
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        ClosestPoint {
            distance: best_d2.sqrt(),
            point: best.0,
            triangle: best.1,
        }
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest_point(p).distance
    }

    /// Draws `n` points uniformly by area.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Vec3>> {
        let total = self.total_area();
        if !(total > 0.0) {
            return Err(Error::Degenerate("surface has zero area".into()));
        }
        Ok((0..n).map(|_| self.sample_one(total, rng)).collect())
    }

    pub(crate) fn sample_one<R: Rng + ?Sized>(&self, total: f64, rng: &mut R) -> Vec3 {
        let target = rng.random::<f64>() * total;
        let t = self
            .cumulative_area
            .partition_point(|&a| a <= target)
            .min(self.corners.len() - 1);
        let [a, b, c] = &self.corners[t];
        uniform_in_triangle(a, b, c, rng)
    }
}

fn uniform_in_triangle<R: Rng + ?Sized>(a: &Vec3, b: &Vec3, c: &Vec3, rng: &mut R) -> Vec3 {
    let r1 = rng.random::<f64>().sqrt();
    let r2 = rng.random::<f64>();
    a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
}

/// Area-weighted random points on `mesh`.
pub fn sample_surface<R: Rng + ?Sized>(mesh: &TriMesh, n: usize, rng: &mut R) -> Result<Vec<Vec3>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    SurfaceIndex::build(mesh)?.sample(n, rng)
}
