use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, Luma};

use super::camera::CameraPose;
use super::edt::DistanceTransform;
use crate::{Error, Result};

const INK_LEVEL: u8 = 0;
const BACKGROUND_LEVEL: u8 = 255;

/// Binary contour raster. Ink is 0 and background 1, stored as 0 and 255 on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchImage {
    pub width: usize,
    pub height: usize,
    ink: Vec<bool>,
    pub pose: CameraPose,
}

impl SketchImage {
    pub fn from_ink(width: usize, height: usize, ink: Vec<bool>, pose: CameraPose) -> Result<Self> {
        if ink.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} pixels for a {width}x{height} sketch",
                ink.len()
            )));
        }
        Ok(Self {
            width,
            height,
            ink,
            pose,
        })
    }

    pub fn blank(pose: CameraPose) -> Self {
        Self {
            width: pose.width,
            height: pose.height,
            ink: vec![false; pose.width * pose.height],
            pose,
        }
    }

    pub fn is_ink(&self, x: usize, y: usize) -> bool {
        self.ink[y * self.width + x]
    }

    pub fn set_ink(&mut self, x: usize, y: usize, ink: bool) {
        self.ink[y * self.width + x] = ink;
    }

    pub fn ink_mask(&self) -> &[bool] {
        &self.ink
    }

    pub fn ink_count(&self) -> usize {
        self.ink.iter().filter(|i| **i).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.ink.iter().any(|i| *i)
    }

    /// Pixel value under the 0 = ink, 1 = background convention.
    pub fn value(&self, x: usize, y: usize) -> u8 {
        u8::from(!self.is_ink(x, y))
    }

    /// Ink pixel centers in image coordinates, row-major.
    pub fn ink_points(&self) -> Vec<[f64; 2]> {
        self.ink
            .iter()
            .enumerate()
            .filter(|(_, i)| **i)
            .map(|(l, _)| [(l % self.width) as f64 + 0.5, (l / self.width) as f64 + 0.5])
            .collect()
    }

    pub fn distance_transform(&self) -> DistanceTransform {
        DistanceTransform::compute(self.width, self.height, &self.ink)
    }

    /// Ink grown by one pixel in each of the 8 directions.
    pub fn dilated(&self) -> Vec<bool> {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = vec![false; self.ink.len()];
        for y in 0..h {
            for x in 0..w {
                if !self.ink[(y * w + x) as usize] {
                    continue;
                }
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (qx, qy) = (x + dx, y + dy);
                        if qx >= 0 && qy >= 0 && qx < w && qy < h {
                            out[(qy * w + qx) as usize] = true;
                        }
                    }
                }
            }
        }
        out
    }

    /// The same ink seen from `pose`, resampled when the size differs.
    ///
    /// Each target pixel takes ink if any source pixel it covers is ink, so
    /// thin strokes survive downsampling.
    pub fn resampled(&self, pose: CameraPose) -> SketchImage {
        let (w, h) = (pose.width, pose.height);
        if (w, h) == (self.width, self.height) {
            return SketchImage { pose, ..self.clone() };
        }
        let mut ink = vec![false; w * h];
        for y in 0..h {
            let y0 = y * self.height / h;
            let y1 = ((y + 1) * self.height).div_ceil(h).max(y0 + 1);
            for x in 0..w {
                let x0 = x * self.width / w;
                let x1 = ((x + 1) * self.width).div_ceil(w).max(x0 + 1);
                ink[y * w + x] = (y0..y1).any(|sy| (x0..x1).any(|sx| self.is_ink(sx, sy)));
            }
        }
        SketchImage {
            width: w,
            height: h,
            ink,
            pose,
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([if self.is_ink(x as usize, y as usize) {
                INK_LEVEL
            } else {
                BACKGROUND_LEVEL
            }])
        })
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Cursor::new(Vec::new());
        self.to_gray().write_to(&mut buf, ImageFormat::Png)?;
        Ok(buf.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_png_bytes()?)?;
        Ok(())
    }

    /// Decodes a PNG; pixels darker than mid-gray are ink, transparent pixels are background.
    pub fn from_png_bytes(bytes: &[u8], pose: Option<CameraPose>) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        Self::from_image(&img, pose)
    }

    pub fn load_png(path: impl AsRef<Path>, pose: Option<CameraPose>) -> Result<Self> {
        Self::from_png_bytes(&std::fs::read(path)?, pose)
    }

    fn from_image(img: &DynamicImage, pose: Option<CameraPose>) -> Result<Self> {
        let rgba = img.to_luma_alpha8();
        let (w, h) = (rgba.width() as usize, rgba.height() as usize);
        let pose = match pose {
            Some(p) if p.width == w && p.height == h => p,
            Some(p) => {
                return Err(Error::InvalidArgument(format!(
                    "sketch is {w}x{h} but the pose expects {}x{}",
                    p.width, p.height
                )))
            }
            None => CameraPose::new(0.0, 0.0, w, h)?,
        };
        let ink = rgba.pixels().map(|p| p.0[1] >= 128 && p.0[0] < 128).collect();
        Self::from_ink(w, h, ink, pose)
    }
}
