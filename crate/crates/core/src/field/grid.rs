use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::FieldQuery;
use crate::geom::Vec3;
use crate::sampling::{read_u32, EvalGrid};
use crate::{Error, Result};

const GRID_MAGIC: &[u8; 4] = b"UDFG";
const GRID_VERSION: u32 = 1;

/// UDF values sampled on an [`EvalGrid`], queried by trilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct UdfGrid {
    grid: EvalGrid,
    values: Vec<f64>,
}

impl UdfGrid {
    pub fn new(grid: EvalGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NonFinite(format!("grid value {v}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `field` at every grid node.
    pub fn from_field<F: FieldQuery + ?Sized>(field: &F, grid: EvalGrid) -> Self {
        let values = field.values(&grid.points());
        Self { grid, values }
    }

    pub fn eval_grid(&self) -> &EvalGrid {
        &self.grid
    }

    pub fn resolution(&self) -> usize {
        self.grid.resolution()
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.linear_index(i, j, k)]
    }

    /// Central difference at a node, one-sided on the domain faces.
    pub fn node_gradient(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let r = self.resolution();
        let h = self.spacing();
        let idx = [i, j, k];
        let mut g = Vec3::zeros();
        for axis in 0..3 {
            let mut lo = idx;
            let mut hi = idx;
            lo[axis] = idx[axis].saturating_sub(1);
            hi[axis] = (idx[axis] + 1).min(r - 1);
            let span = (hi[axis] - lo[axis]) as f64 * h;
            g[axis] = (self.at(hi[0], hi[1], hi[2]) - self.at(lo[0], lo[1], lo[2])) / span;
        }
        g
    }

    /// Node gradients for the whole grid in [`EvalGrid`] order.
    pub fn node_gradients(&self) -> Vec<Vec3> {
        let r = self.resolution();
        (0..self.grid.len())
            .into_par_iter()
            .map(|l| self.node_gradient(l % r, (l / r) % r, l / (r * r)))
            .collect()
    }

    fn cell_coordinate(&self, x: f64) -> (usize, f64) {
        let r = self.resolution();
        let u = (x.clamp(-1.0, 1.0) + 1.0) * (r - 1) as f64 / 2.0;
        let snapped = u.round();
        let u = if (u - snapped).abs() < 1e-9 { snapped } else { u };
        let i = (u.floor() as usize).min(r - 2);
        (i, u - i as f64)
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
        w.write_all(GRID_MAGIC)?;
        w.write_all(&GRID_VERSION.to_le_bytes())?;
        w.write_all(&(self.resolution() as u32).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != GRID_MAGIC {
            return Err(Error::Format("not a UDFG grid file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != GRID_VERSION {
            return Err(Error::Format(format!("unsupported UDFG version {version}")));
        }
        let grid = EvalGrid::new(read_u32(&mut r)? as usize)?;
        let mut values = Vec::with_capacity(grid.len());
        let mut b = [0u8; 4];
        for _ in 0..grid.len() {
            r.read_exact(&mut b)?;
            values.push(f32::from_le_bytes(b) as f64);
        }
        Self::new(grid, values)
    }
}

impl FieldQuery for UdfGrid {
    fn value(&self, p: &Vec3) -> f64 {
        let (i, tx) = self.cell_coordinate(p.x);
        let (j, ty) = self.cell_coordinate(p.y);
        let (k, tz) = self.cell_coordinate(p.z);
        let lerp = |a: f64, b: f64, t: f64| (1.0 - t) * a + t * b;
        let x00 = lerp(self.at(i, j, k), self.at(i + 1, j, k), tx);
        let x10 = lerp(self.at(i, j + 1, k), self.at(i + 1, j + 1, k), tx);
        let x01 = lerp(self.at(i, j, k + 1), self.at(i + 1, j, k + 1), tx);
        let x11 = lerp(self.at(i, j + 1, k + 1), self.at(i + 1, j + 1, k + 1), tx);
        lerp(lerp(x00, x10, ty), lerp(x01, x11, ty), tz)
    }

    fn gradient_step(&self) -> f64 {
        0.5 * self.spacing()
    }
}
