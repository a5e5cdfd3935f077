/// Exact squared Euclidean distance transform of a binary raster, with the
/// nearest ink pixel of every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTransform {
    pub width: usize,
    pub height: usize,
    /// Squared pixel distance to the nearest ink pixel; infinite without ink.
    pub squared: Vec<f64>,
    /// Linear index of the nearest ink pixel, `usize::MAX` without ink.
    pub nearest: Vec<usize>,
}

impl DistanceTransform {
    /// Two separable passes of the lower-envelope-of-parabolas algorithm.
    pub fn compute(width: usize, height: usize, ink: &[bool]) -> Self {
        assert_eq!(ink.len(), width * height);
        let mut col_sq = vec![f64::INFINITY; width * height];
        let mut col_row = vec![usize::MAX; width * height];
        let mut f = vec![0.0; height.max(width)];
        let mut out_d = vec![0.0; height.max(width)];
        let mut out_i = vec![0usize; height.max(width)];
        for x in 0..width {
            for y in 0..height {
                f[y] = if ink[y * width + x] { 0.0 } else { f64::INFINITY };
            }
            lower_envelope(&f[..height], &mut out_d[..height], &mut out_i[..height]);
            for y in 0..height {
                col_sq[y * width + x] = out_d[y];
                col_row[y * width + x] = out_i[y];
            }
        }
        let mut squared = vec![f64::INFINITY; width * height];
        let mut nearest = vec![usize::MAX; width * height];
        for y in 0..height {
            let row = &col_sq[y * width..(y + 1) * width];
            lower_envelope(row, &mut out_d[..width], &mut out_i[..width]);
            for x in 0..width {
                let l = y * width + x;
                squared[l] = out_d[x];
                if out_d[x].is_finite() {
                    let sx = out_i[x];
                    nearest[l] = col_row[y * width + sx] * width + sx;
                }
            }
        }
        Self {
            width,
            height,
            squared,
            nearest,
        }
    }

    pub fn nearest_point(&self, x: usize, y: usize) -> Option<[f64; 2]> {
        let n = self.nearest[y * self.width + x];
        (n != usize::MAX).then(|| [(n % self.width) as f64 + 0.5, (n / self.width) as f64 + 0.5])
    }

    /// Nearest ink center for a continuous image position, via the pixel containing it.
    pub fn nearest_to(&self, u: f64, v: f64) -> Option<[f64; 2]> {
        let x = (u.floor().max(0.0) as usize).min(self.width - 1);
        let y = (v.floor().max(0.0) as usize).min(self.height - 1);
        self.nearest_point(x, y)
    }
}

/// 1D squared distance transform of sampled function `f`; writes values and argmin sites.
fn lower_envelope(f: &[f64], d: &mut [f64], site: &mut [usize]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k: isize = -1;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        d.fill(f64::INFINITY);
        site.fill(usize::MAX);
        return;
    }
    let mut j = 0usize;
    for q in 0..n {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let dq = q as f64 - p as f64;
        d[q] = dq * dq + f[p];
        site[q] = p;
    }
}
