use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::{Error, Result};

pub const MIN_IMAGE_SIZE: usize = 32;
pub const DEFAULT_IMAGE_SIZE: usize = 256;

/// Orthographic camera orbiting the origin. The world cube `[-1, 1]` spans the
/// shorter image side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    /// Radians about the world y axis; zero looks down the negative z axis.
    pub azimuth: f64,
    /// Radians above the horizontal plane.
    pub elevation: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraPose {
    pub fn new(azimuth: f64, elevation: f64, width: usize, height: usize) -> Result<Self> {
        if width < MIN_IMAGE_SIZE || height < MIN_IMAGE_SIZE {
            return Err(Error::InvalidArgument(format!(
                "image size {width}x{height} is below {MIN_IMAGE_SIZE}"
            )));
        }
        if !(azimuth.is_finite() && elevation.is_finite()) {
            return Err(Error::InvalidArgument("camera angles must be finite".into()));
        }
        Ok(Self {
            azimuth,
            elevation,
            width,
            height,
        })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64, size: usize) -> Result<Self> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians(), size, size)
    }

    pub fn frontal(size: usize) -> Result<Self> {
        Self::new(0.0, 0.0, size, size)
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth.to_degrees()
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation.to_degrees()
    }

    /// Unit vector from the origin toward the camera.
    pub fn toward_camera(&self) -> Vec3 {
        let (sa, ca) = self.azimuth.sin_cos();
        let (se, ce) = self.elevation.sin_cos();
        Vec3::new(sa * ce, se, ca * ce)
    }

    pub fn right(&self) -> Vec3 {
        let (sa, ca) = self.azimuth.sin_cos();
        Vec3::new(ca, 0.0, -sa)
    }

    pub fn up(&self) -> Vec3 {
        self.toward_camera().cross(&self.right())
    }

    /// Pixels per world unit.
    pub fn scale(&self) -> f64 {
        self.width.min(self.height) as f64 / 2.0
    }

    /// Image coordinates `(u, v)` with v growing downward, and depth along the view ray.
    pub fn project(&self, p: &Vec3) -> (f64, f64, f64) {
        let s = self.scale();
        let u = self.width as f64 / 2.0 + s * self.right().dot(p);
        let v = self.height as f64 / 2.0 - s * self.up().dot(p);
        (u, v, -self.toward_camera().dot(p))
    }

    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vec3 {
        let s = self.scale();
        let x = (u - self.width as f64 / 2.0) / s;
        let y = (self.height as f64 / 2.0 - v) / s;
        self.right() * x + self.up() * y - self.toward_camera() * depth
    }

    /// Adjoint of the image-plane projection: world gradient of a function of `(u, v)`.
    pub fn lift_gradient(&self, gu: f64, gv: f64) -> Vec3 {
        (self.right() * gu - self.up() * gv) * self.scale()
    }

    /// `n` azimuths evenly spaced over a full turn at a fixed elevation.
    pub fn orbit(n: usize, elevation: f64, size: usize) -> Result<Vec<Self>> {
        (0..n)
            .map(|i| Self::new(std::f64::consts::TAU * i as f64 / n as f64, elevation, size, size))
            .collect()
    }
}
