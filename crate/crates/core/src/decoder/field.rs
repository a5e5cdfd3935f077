use super::network::Decoder;
use crate::field::{FieldQuery, UdfGrid};
use crate::geom::Vec3;
use crate::sampling::EvalGrid;
use crate::{Error, Result};

/// The decoder at a fixed latent, seen as a distance field.
#[derive(Debug, Clone)]
pub struct LatentField<'a> {
    decoder: &'a Decoder,
    z: Vec<f64>,
}

impl<'a> LatentField<'a> {
    pub fn new(decoder: &'a Decoder, z: &[f64]) -> Result<Self> {
        decoder.value(&Vec3::zeros(), z)?;
        Ok(Self {
            decoder,
            z: z.to_vec(),
        })
    }

    pub fn decoder(&self) -> &Decoder {
        self.decoder
    }

    pub fn latent(&self) -> &[f64] {
        &self.z
    }
}

impl FieldQuery for LatentField<'_> {
    fn value(&self, p: &Vec3) -> f64 {
        self.decoder.value(p, &self.z).expect("latent validated")
    }

    fn gradient(&self, p: &Vec3) -> Vec3 {
        self.value_and_gradient(p).1
    }

    fn value_and_gradient(&self, p: &Vec3) -> (f64, Vec3) {
        let e = self.decoder.evaluate(p, &self.z).expect("latent validated");
        (e.value, e.grad_p)
    }

    fn values(&self, points: &[Vec3]) -> Vec<f64> {
        self.decoder.values(points, &self.z).expect("latent validated")
    }
}

/// Skipping far-field cells while decoding a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CullConfig {
    /// Nodes whose value provably exceeds this may be interpolated instead of decoded.
    pub band: f64,
    /// Assumed Lipschitz constant of the decoded field.
    pub lipschitz: f64,
    /// Edge length in nodes of the coarsest blocks.
    pub block: usize,
}

impl CullConfig {
    pub fn for_band(band: f64) -> Self {
        Self {
            band,
            lipschitz: 1.5,
            block: 8,
        }
    }
}

/// Decodes `D(., z)` on a grid of resolution `r`.
///
/// With culling, blocks are refined only while the Lipschitz bound cannot rule
/// out values below the band; the inside of a ruled-out block is filled by
/// trilinear interpolation of its corners, which leaves those nodes above the band.
pub fn decode_grid(field: &LatentField<'_>, r: usize, cull: Option<CullConfig>) -> Result<UdfGrid> {
    let eg = EvalGrid::new(r)?;
    let Some(cull) = cull else {
        return UdfGrid::new(eg, field.values(&eg.points()));
    };
    if cull.block < 2 {
        return Err(Error::InvalidArgument("cull block must span at least 2 nodes".into()));
    }
    let mut values = vec![f64::NAN; eg.len()];
    let mut exact = vec![false; eg.len()];
    let mut boxes: Vec<[[usize; 2]; 3]> = Vec::new();
    let starts: Vec<usize> = (0..r - 1).step_by(cull.block).collect();
    for &k in &starts {
        for &j in &starts {
            for &i in &starts {
                boxes.push([i, j, k].map(|a| [a, (a + cull.block).min(r - 1)]));
            }
        }
    }
    let h = eg.spacing();
    while !boxes.is_empty() {
        let mut need: Vec<usize> = Vec::new();
        for b in &boxes {
            for c in box_corners(b) {
                let l = eg.linear_index(c[0], c[1], c[2]);
                if !exact[l] {
                    exact[l] = true;
                    need.push(l);
                }
            }
        }
        let pts: Vec<Vec3> = need.iter().map(|l| eg.point(*l)).collect();
        for (l, v) in need.iter().zip(field.values(&pts)) {
            values[*l] = v;
        }
        let mut next = Vec::new();
        for b in boxes {
            let corners: Vec<f64> = box_corners(&b)
                .iter()
                .map(|c| values[eg.linear_index(c[0], c[1], c[2])])
                .collect();
            let ext = b.map(|[a, c]| (c - a) as f64 * h);
            let half_diag = 0.5 * (ext[0] * ext[0] + ext[1] * ext[1] + ext[2] * ext[2]).sqrt();
            let min = corners.iter().cloned().fold(f64::INFINITY, f64::min);
            let small = b.iter().all(|[a, c]| c - a <= 1);
            if small {
                continue;
            }
            if min - cull.lipschitz * half_diag > cull.band {
                fill_box(&eg, &b, &corners, &mut values, &exact);
                continue;
            }
            next.extend(split_box(&b));
        }
        boxes = next;
    }
    for v in &mut values {
        if v.is_nan() {
            return Err(Error::NonFinite("culled grid left a node unset".into()));
        }
        *v = v.max(0.0);
    }
    UdfGrid::new(eg, values)
}

fn box_corners(b: &[[usize; 2]; 3]) -> [[usize; 3]; 8] {
    std::array::from_fn(|c| [b[0][c & 1], b[1][(c >> 1) & 1], b[2][(c >> 2) & 1]])
}

fn split_box(b: &[[usize; 2]; 3]) -> Vec<[[usize; 2]; 3]> {
    let halves = b.map(|[a, c]| {
        if c - a <= 1 {
            vec![[a, c]]
        } else {
            let m = a + (c - a) / 2;
            vec![[a, m], [m, c]]
        }
    });
    let mut out = Vec::new();
    for z in &halves[2] {
        for y in &halves[1] {
            for x in &halves[0] {
                out.push([*x, *y, *z]);
            }
        }
    }
    out
}

fn fill_box(eg: &EvalGrid, b: &[[usize; 2]; 3], corners: &[f64], values: &mut [f64], exact: &[bool]) {
    for k in b[2][0]..=b[2][1] {
        let tz = (k - b[2][0]) as f64 / (b[2][1] - b[2][0]) as f64;
        for j in b[1][0]..=b[1][1] {
            let ty = (j - b[1][0]) as f64 / (b[1][1] - b[1][0]) as f64;
            for i in b[0][0]..=b[0][1] {
                let l = eg.linear_index(i, j, k);
                if exact[l] || !values[l].is_nan() {
                    continue;
                }
                let tx = (i - b[0][0]) as f64 / (b[0][1] - b[0][0]) as f64;
                let lerp = |a: f64, c: f64, t: f64| (1.0 - t) * a + t * c;
                let x00 = lerp(corners[0], corners[1], tx);
                let x10 = lerp(corners[2], corners[3], tx);
                let x01 = lerp(corners[4], corners[5], tx);
                let x11 = lerp(corners[6], corners[7], tx);
                values[l] = lerp(lerp(x00, x10, ty), lerp(x01, x11, ty), tz);
            }
        }
    }
}
