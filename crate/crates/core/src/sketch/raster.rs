use super::camera::CameraPose;
use super::image::SketchImage;
use crate::mesh::TriMesh;

pub const DEFAULT_DEPTH_EDGE_THRESHOLD: f64 = 0.03;

pub const NO_FACE: u32 = u32::MAX;

/// Per-pixel nearest depth; background pixels hold `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    /// Index of the visible triangle, `NO_FACE` on background.
    pub face: Vec<u32>,
}

impl DepthMap {
    pub fn background(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depth: vec![f64::INFINITY; width * height],
            face: vec![NO_FACE; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.at(x, y).is_finite()
    }

    pub fn foreground_count(&self) -> usize {
        self.depth.iter().filter(|d| d.is_finite()).count()
    }
}

/// Rasterizes `mesh` with a depth test at pixel centers.
pub fn render_depth(mesh: &TriMesh, pose: &CameraPose) -> DepthMap {
    let (w, h) = (pose.width, pose.height);
    let mut map = DepthMap::background(w, h);
    let projected: Vec<(f64, f64, f64)> = mesh.vertices.iter().map(|p| pose.project(p)).collect();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = tri.map(|i| projected[i]);
        let area = edge(a, b, c.0, c.1);
        if area.abs() < 1e-12 {
            continue;
        }
        let x0 = a.0.min(b.0).min(c.0).floor().max(0.0) as usize;
        let y0 = a.1.min(b.1).min(c.1).floor().max(0.0) as usize;
        let x1 = (a.0.max(b.0).max(c.0).ceil().max(0.0) as usize).min(w);
        let y1 = (a.1.max(b.1).max(c.1).ceil().max(0.0) as usize).min(h);
        for y in y0..y1 {
            let py = y as f64 + 0.5;
            for x in x0..x1 {
                let px = x as f64 + 0.5;
                let wa = edge(b, c, px, py) / area;
                let wb = edge(c, a, px, py) / area;
                let wc = 1.0 - wa - wb;
                if wa < -1e-12 || wb < -1e-12 || wc < -1e-12 {
                    continue;
                }
                let d = wa * a.2 + wb * b.2 + wc * c.2;
                let l = y * w + x;
                if d < map.depth[l] {
                    map.depth[l] = d;
                    map.face[l] = t as u32;
                }
            }
        }
    }
    map
}

fn edge(a: (f64, f64, f64), b: (f64, f64, f64), px: f64, py: f64) -> f64 {
    (b.0 - a.0) * (py - a.1) - (b.1 - a.1) * (px - a.0)
}

/// Marks silhouette pixels and the near side of depth discontinuities.
///
/// A finite `depth_edge_threshold` compares each neighbour's depth with a
/// linear extrapolation across the pixel, so steep but smooth regions near a
/// silhouette stay unmarked. `None` gives silhouettes only.
pub fn contour_from_depth(depth: &DepthMap, depth_edge_threshold: Option<f64>, pose: CameraPose) -> SketchImage {
    let (w, h) = (depth.width, depth.height);
    let fg = |x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && depth.is_foreground(x as usize, y as usize)
    };
    let d = |x: isize, y: isize| depth.at(x as usize, y as usize);
    const DIRS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let silhouette = |x: isize, y: isize| DIRS.iter().any(|(dx, dy)| !fg(x + dx, y + dy));

    let mut ink = vec![false; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            if !fg(x, y) {
                continue;
            }
            let mut mark = silhouette(x, y);
            if let (false, Some(t)) = (mark, depth_edge_threshold) {
                let dp = d(x, y);
                mark = DIRS.iter().any(|(dx, dy)| {
                    let (qx, qy) = (x + dx, y + dy);
                    if !fg(qx, qy) || silhouette(qx, qy) {
                        return false;
                    }
                    let predicted = if fg(x - dx, y - dy) { 2.0 * dp - d(x - dx, y - dy) } else { dp };
                    d(qx, qy) - predicted > t
                });
            }
            ink[y as usize * w + x as usize] = mark;
        }
    }
    SketchImage::from_ink(w, h, ink, pose).expect("dimensions match")
}

/// Ink pixel centers of the mesh's contour at `pose`.
pub fn project_contour(mesh: &TriMesh, pose: &CameraPose, depth_edge_threshold: Option<f64>) -> Vec<[f64; 2]> {
    let sketch = contour_from_depth(&render_depth(mesh, pose), depth_edge_threshold, *pose);
    let pts = sketch.ink_points();
    if pts.is_empty() {
        log::warn!("mesh {} has an empty footprint", mesh.name);
    }
    pts
}
