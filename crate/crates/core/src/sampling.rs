//! Banded UDF training-set generation and regular evaluation grids.
//!
//! A sample set is laid out in four contiguous blocks, in this order:
//! near band, mid band, on-surface, bounding box. The block sizes are the
//! counts of the [`SamplingSpec`] that produced it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::mesh::{SurfaceIndex, TriMesh};
use crate::{Error, Result};

const SAMPLE_MAGIC: &[u8; 4] = b"UDFS";
const SAMPLE_VERSION: u32 = 1;
// Rejection draws per band sample before giving up on a pathological mesh.
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub n_total: usize,
    pub n_near: usize,
    pub n_mid: usize,
    pub n_surface: usize,
    pub n_box: usize,
    pub band_near: f64,
    pub band_mid: f64,
    pub box_half_extent: f64,
}

impl SamplingSpec {
    /// 120,000 samples: 48,000 within 0.05, 32,000 within 0.3, 24,000 on the
    /// surface and 16,000 in the `[-1, 1]^3` box.
    pub fn full() -> Self {
        Self {
            n_total: 120_000,
            n_near: 48_000,
            n_mid: 32_000,
            n_surface: 24_000,
            n_box: 16_000,
            band_near: 0.05,
            band_mid: 0.3,
            box_half_extent: 1.0,
        }
    }

    /// The full recipe with every count divided by 100.
    pub fn desk() -> Self {
        Self::full().scaled_down(100)
    }

    /// Denser sets used to train the bundled toy decoder.
    pub fn desk_training() -> Self {
        Self::full().scaled_down(20)
    }

    pub fn scaled_down(&self, divisor: usize) -> Self {
        let n_near = self.n_near / divisor;
        let n_mid = self.n_mid / divisor;
        let n_surface = self.n_surface / divisor;
        let n_box = self.n_box / divisor;
        Self {
            n_total: n_near + n_mid + n_surface + n_box,
            n_near,
            n_mid,
            n_surface,
            n_box,
            ..*self
        }
    }

    pub fn surface_only(n: usize) -> Self {
        Self {
            n_total: n,
            n_near: 0,
            n_mid: 0,
            n_surface: n,
            n_box: 0,
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_near + self.n_mid + self.n_surface + self.n_box != self.n_total {
            return Err(Error::InvalidArgument(format!(
                "sample counts do not add up to {}",
                self.n_total
            )));
        }
        if !(self.band_near > 0.0 && self.band_mid > 0.0 && self.box_half_extent > 0.0) {
            return Err(Error::InvalidArgument("bands and box extent must be positive".into()));
        }
        Ok(())
    }

    /// Index ranges of the near, mid, surface and box blocks.
    pub fn blocks(&self) -> [std::ops::Range<usize>; 4] {
        let a = self.n_near;
        let b = a + self.n_mid;
        let c = b + self.n_surface;
        [0..a, a..b, b..c, c..c + self.n_box]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UdfSampleSet {
    pub points: Vec<Vec3>,
    pub distances: Vec<f64>,
    pub mesh_name: String,
}

impl UdfSampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(SAMPLE_MAGIC)?;
        w.write_all(&SAMPLE_VERSION.to_le_bytes())?;
        w.write_all(&(self.points.len() as u64).to_le_bytes())?;
        for (p, d) in self.points.iter().zip(&self.distances) {
            for v in [p.x, p.y, p.z, *d] {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read, mesh_name: &str) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SAMPLE_MAGIC {
            return Err(Error::Format("not a UDFS sample file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != SAMPLE_VERSION {
            return Err(Error::Format(format!("unsupported UDFS version {version}")));
        }
        let count = read_u64(&mut r)? as usize;
        let mut points = Vec::with_capacity(count);
        let mut distances = Vec::with_capacity(count);
        let mut rec = [0u8; 16];
        for _ in 0..count {
            r.read_exact(&mut rec)?;
            let f = |i: usize| f32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().unwrap()) as f64;
            points.push(Vec3::new(f(0), f(1), f(2)));
            distances.push(f(3));
        }
        Ok(Self {
            points,
            distances,
            mesh_name: mesh_name.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::read_from(BufReader::new(File::open(path)?), &name)
    }
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Builds a training set from a normalized mesh. Every stored distance is
/// re-measured against `index`; band samples are redrawn until their exact
/// distance lies inside the band.
pub fn sample_udf_training_set<R: Rng + ?Sized>(
    mesh: &TriMesh,
    index: &SurfaceIndex,
    spec: &SamplingSpec,
    rng: &mut R,
) -> Result<UdfSampleSet> {
    spec.validate()?;
    let total_area = index.total_area();
    if !(total_area > 0.0) {
        return Err(Error::Degenerate(format!("mesh `{}` has zero area", mesh.name)));
    }

    let mut points = Vec::with_capacity(spec.n_total);
    let mut distances = Vec::with_capacity(spec.n_total);

    for (count, band) in [(spec.n_near, spec.band_near), (spec.n_mid, spec.band_mid)] {
        for _ in 0..count {
            let mut accepted = None;
            for _ in 0..MAX_REDRAWS {
                let base = index.sample_one(total_area, rng);
                let dir: [f64; 3] = UnitSphere.sample(rng);
                let p = base + Vec3::from(dir) * (rng.random::<f64>() * band);
                let d = index.distance(&p);
                if d <= band {
                    accepted = Some((p, d));
                    break;
                }
            }
            let (p, d) = accepted.ok_or_else(|| {
                Error::Degenerate(format!("could not place a sample within {band} of `{}`", mesh.name))
            })?;
            points.push(p);
            distances.push(d);
        }
    }

    for _ in 0..spec.n_surface {
        let p = index.sample_one(total_area, rng);
        distances.push(index.distance(&p));
        points.push(p);
    }

    let h = spec.box_half_extent;
    for _ in 0..spec.n_box {
        let p = Vec3::new(
            rng.random_range(-h..=h),
            rng.random_range(-h..=h),
            rng.random_range(-h..=h),
        );
        distances.push(index.distance(&p));
        points.push(p);
    }

    Ok(UdfSampleSet {
        points,
        distances,
        mesh_name: mesh.name.clone(),
    })
}

/// Regular grid over `[-1, 1]^3` with points ordered x-fastest, then y, then z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalGrid {
    resolution: usize,
}

impl EvalGrid {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution {resolution} is below 2"
            )));
        }
        Ok(Self { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.resolution - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / (self.resolution - 1) as f64
    }

    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution * (j + self.resolution * k)
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(self.coordinate(i), self.coordinate(j), self.coordinate(k))
    }

    pub fn point(&self, linear: usize) -> Vec3 {
        let r = self.resolution;
        self.node(linear % r, (linear / r) % r, linear / (r * r))
    }

    pub fn points(&self) -> Vec<Vec3> {
        (0..self.len()).map(|l| self.point(l)).collect()
    }
}
