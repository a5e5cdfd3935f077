use super::FieldQuery;
use crate::geom::Vec3;

/// Closed-form UDFs of simple surfaces.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticField {
    Sphere { center: Vec3, radius: f64 },
    /// Infinite plane through `point` with unit `normal`.
    Plane { point: Vec3, normal: Vec3 },
    /// Open tube around the y axis through `center`, without end caps.
    Tube { center: Vec3, radius: f64, half_height: f64 },
    Union(Vec<AnalyticField>),
}

impl AnalyticField {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Self::Sphere { center, radius }
    }

    pub fn plane(point: Vec3, normal: Vec3) -> Self {
        Self::Plane {
            point,
            normal: normal.normalize(),
        }
    }

    pub fn tube(center: Vec3, radius: f64, half_height: f64) -> Self {
        Self::Tube {
            center,
            radius,
            half_height,
        }
    }

    fn value_and_gradient_impl(&self, p: &Vec3) -> (f64, Vec3) {
        match self {
            Self::Sphere { center, radius } => {
                let d = p - center;
                let r = d.norm();
                let g = if r > 0.0 { d / r } else { Vec3::zeros() };
                let s = r - radius;
                (s.abs(), g * s.signum())
            }
            Self::Plane { point, normal } => {
                let s = (p - point).dot(normal);
                (s.abs(), normal * s.signum())
            }
            Self::Tube {
                center,
                radius,
                half_height,
            } => {
                let d = p - center;
                let rho = (d.x * d.x + d.z * d.z).sqrt();
                let radial = if rho > 0.0 {
                    Vec3::new(d.x / rho, 0.0, d.z / rho)
                } else {
                    Vec3::zeros()
                };
                let dy = d.y.abs() - half_height;
                let dr = rho - radius;
                if dy <= 0.0 {
                    (dr.abs(), radial * dr.signum())
                } else {
                    let v = (dr * dr + dy * dy).sqrt();
                    let g = (radial * dr + Vec3::new(0.0, dy * d.y.signum(), 0.0)) / v;
                    (v, g)
                }
            }
            Self::Union(parts) => parts
                .iter()
                .map(|f| f.value_and_gradient_impl(p))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap_or((f64::INFINITY, Vec3::zeros())),
        }
    }
}

impl FieldQuery for AnalyticField {
    fn value(&self, p: &Vec3) -> f64 {
        self.value_and_gradient_impl(p).0
    }

    fn gradient(&self, p: &Vec3) -> Vec3 {
        self.value_and_gradient_impl(p).1
    }

    fn value_and_gradient(&self, p: &Vec3) -> (f64, Vec3) {
        self.value_and_gradient_impl(p)
    }
}
