use serde::{Deserialize, Serialize};

use super::TriMesh;
use crate::geom::Vec3;
use crate::{Error, Result};

/// Maps original coordinates `p` to `(p - center) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizeTransform {
    pub center: [f64; 3],
    pub scale: f64,
}

impl NormalizeTransform {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        (p - Vec3::from(self.center)) * self.scale
    }

    pub fn invert(&self, q: &Vec3) -> Vec3 {
        q / self.scale + Vec3::from(self.center)
    }
}

/// Centers the mesh on its bounding-box center and scales it so that the
/// largest absolute coordinate equals `target_scale`.
pub fn normalize_mesh(mesh: &TriMesh, target_scale: f64) -> Result<(TriMesh, NormalizeTransform)> {
    if !(target_scale > 0.0 && target_scale <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target scale {target_scale} outside (0, 1]"
        )));
    }
    if mesh.is_empty() {
        return Err(Error::EmptyMesh(mesh.name.clone()));
    }
    let center = mesh.bounds().center();
    let half = mesh
        .vertices
        .iter()
        .map(|v| (v - center).amax())
        .fold(0.0, f64::max);
    if !(half > 0.0) {
        return Err(Error::Degenerate(format!("mesh `{}` has zero extent", mesh.name)));
    }
    let transform = NormalizeTransform {
        center: center.into(),
        scale: target_scale / half,
    };
    let mut out = mesh.map_vertices(|v| transform.apply(v));
    // Pin the extreme coordinate so the maximum is exact rather than off by an ulp.
    for v in &mut out.vertices {
        for c in v.iter_mut() {
            if (c.abs() - target_scale).abs() < 1e-12 {
                *c = target_scale.copysign(*c);
            }
        }
    }
    Ok((out, transform))
}
