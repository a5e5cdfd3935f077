//! Sketch-to-latent encoding by nearest-neighbour retrieval over a library of
//! rendered training sketches.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::decoder::LatentLibrary;
use crate::sampling::{read_u32, read_u64};
use crate::sketch::{CameraPose, SketchImage, SketchPair};
use crate::{Error, Result};

pub const DESCRIPTOR_SIZE: usize = 64;
pub const DEFAULT_TOP_K: usize = 8;

const MAGIC: &[u8; 4] = b"UDFL";
const VERSION: u32 = 1;

/// Average-pooled distance transform of a sketch, in units of the image diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: Vec<f32>,
    /// Set for blank sketches, whose cells all hold the maximum distance.
    pub degenerate: bool,
}

impl Descriptor {
    pub fn of(sketch: &SketchImage) -> Self {
        let n = DESCRIPTOR_SIZE;
        if sketch.is_blank() {
            return Self {
                values: vec![1.0; n * n],
                degenerate: true,
            };
        }
        let (w, h) = (sketch.width, sketch.height);
        let diag = ((w * w + h * h) as f64).sqrt();
        let dt = sketch.distance_transform();
        let mut sum = vec![0.0f64; n * n];
        let mut count = vec![0usize; n * n];
        for y in 0..h {
            let cy = y * n / h;
            for x in 0..w {
                let c = cy * n + x * n / w;
                sum[c] += dt.squared[y * w + x].sqrt() / diag;
                count[c] += 1;
            }
        }
        let values = sum
            .iter()
            .zip(&count)
            .map(|(s, c)| if *c > 0 { (s / *c as f64) as f32 } else { 1.0 })
            .collect();
        Self {
            values,
            degenerate: false,
        }
    }

    pub fn distance_squared(&self, other: &Descriptor) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let d = (*a - *b) as f64;
                d * d
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryEntry {
    pub shape_name: String,
    pub sketch: SketchImage,
    pub descriptor: Descriptor,
    pub latent: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SketchLibrary {
    pub entries: Vec<LibraryEntry>,
}

/// Result of encoding one sketch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encoding {
    pub latent: Vec<f64>,
    pub pose: CameraPose,
    /// Symmetric squared-distance chamfer to the winning entry, in pixels squared.
    pub score: f64,
    pub entry: usize,
    pub shape_name: String,
}

/// Symmetric sum of squared nearest-ink distances between two equally sized sketches.
pub fn sketch_chamfer(a: &SketchImage, b: &SketchImage) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::InvalidArgument(format!(
            "sketch sizes differ: {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if a.is_blank() || b.is_blank() {
        return Err(Error::EmptySketch);
    }
    let (da, db) = (a.distance_transform(), b.distance_transform());
    let one_way = |from: &SketchImage, dt: &crate::sketch::DistanceTransform| -> f64 {
        from.ink_mask()
            .iter()
            .enumerate()
            .filter(|(_, i)| **i)
            .map(|(l, _)| dt.squared[l])
            .sum()
    };
    Ok(one_way(a, &db) + one_way(b, &da))
}

impl SketchLibrary {
    /// One entry per sketch whose shape has a latent; the names of shapes
    /// without one are returned alongside.
    pub fn build(pairs: &[SketchPair], latents: &LatentLibrary) -> (Self, Vec<String>) {
        let mut missing = Vec::new();
        let mut entries = Vec::new();
        for pair in pairs {
            let Some(z) = latents.get(&pair.mesh_name) else {
                if !missing.contains(&pair.mesh_name) {
                    log::warn!("no latent for shape {}; its sketches are skipped", pair.mesh_name);
                    missing.push(pair.mesh_name.clone());
                }
                continue;
            };
            entries.push(LibraryEntry {
                shape_name: pair.mesh_name.clone(),
                descriptor: Descriptor::of(&pair.sketch),
                sketch: pair.sketch.clone(),
                latent: z.to_vec(),
            });
        }
        (Self { entries }, missing)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Image size shared by the library sketches.
    pub fn image_size(&self) -> Option<(usize, usize)> {
        self.entries.first().map(|e| (e.sketch.width, e.sketch.height))
    }

    /// Retrieves the entry with the smallest exact chamfer among the `k`
    /// nearest descriptors. Ties go to the earlier entry.
    pub fn encode(&self, sketch: &SketchImage, k: usize) -> Result<Encoding> {
        if sketch.is_blank() {
            return Err(Error::EmptySketch);
        }
        if self.entries.is_empty() {
            return Err(Error::EmptyLibrary);
        }
        let d = Descriptor::of(sketch);
        let mut ranked: Vec<(f64, usize)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (d.distance_squared(&e.descriptor), i))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut best: Option<(f64, usize)> = None;
        for &(_, i) in ranked.iter().take(k.max(1)) {
            let score = sketch_chamfer(sketch, &self.entries[i].sketch)?;
            if best.is_none_or(|(s, j)| score < s || (score == s && i < j)) {
                best = Some((score, i));
            }
        }
        let (score, i) = best.expect("at least one candidate");
        let e = &self.entries[i];
        Ok(Encoding {
            latent: e.latent.clone(),
            pose: e.sketch.pose,
            score,
            entry: i,
            shape_name: e.shape_name.clone(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for e in &self.entries {
            w.write_all(&(e.shape_name.len() as u32).to_le_bytes())?;
            w.write_all(e.shape_name.as_bytes())?;
            let p = e.sketch.pose;
            w.write_all(&p.azimuth.to_le_bytes())?;
            w.write_all(&p.elevation.to_le_bytes())?;
            w.write_all(&(p.width as u32).to_le_bytes())?;
            w.write_all(&(p.height as u32).to_le_bytes())?;
            w.write_all(&[u8::from(e.descriptor.degenerate)])?;
            for v in &e.descriptor.values {
                w.write_all(&v.to_le_bytes())?;
            }
            let mut bits = vec![0u8; e.sketch.ink_mask().len().div_ceil(8)];
            for (l, ink) in e.sketch.ink_mask().iter().enumerate() {
                if *ink {
                    bits[l / 8] |= 1 << (l % 8);
                }
            }
            w.write_all(&bits)?;
            w.write_all(&(e.latent.len() as u32).to_le_bytes())?;
            for v in &e.latent {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a UDFL sketch library".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported library version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        let mut entries = Vec::with_capacity(n.min(1 << 16));
        let mut f8 = [0u8; 8];
        let mut f4 = [0u8; 4];
        for _ in 0..n {
            let len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let shape_name = String::from_utf8(name).map_err(|_| Error::Format("shape name is not UTF-8".into()))?;
            r.read_exact(&mut f8)?;
            let azimuth = f64::from_le_bytes(f8);
            r.read_exact(&mut f8)?;
            let elevation = f64::from_le_bytes(f8);
            let width = read_u32(&mut r)? as usize;
            let height = read_u32(&mut r)? as usize;
            let pose = CameraPose::new(azimuth, elevation, width, height)?;
            let mut flag = [0u8; 1];
            r.read_exact(&mut flag)?;
            let mut values = Vec::with_capacity(DESCRIPTOR_SIZE * DESCRIPTOR_SIZE);
            for _ in 0..DESCRIPTOR_SIZE * DESCRIPTOR_SIZE {
                r.read_exact(&mut f4)?;
                values.push(f32::from_le_bytes(f4));
            }
            let mut bits = vec![0u8; (width * height).div_ceil(8)];
            r.read_exact(&mut bits)?;
            let ink = (0..width * height).map(|l| bits[l / 8] & (1 << (l % 8)) != 0).collect();
            let dim = read_u32(&mut r)? as usize;
            let mut latent = Vec::with_capacity(dim);
            for _ in 0..dim {
                r.read_exact(&mut f8)?;
                latent.push(f64::from_le_bytes(f8));
            }
            entries.push(LibraryEntry {
                shape_name,
                sketch: SketchImage::from_ink(width, height, ink, pose)?,
                descriptor: Descriptor {
                    values,
                    degenerate: flag[0] != 0,
                },
                latent,
            });
        }
        Ok(Self { entries })
    }
}
