//! Point-cloud distances between reconstructions and ground truth.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::kdtree::KdTree;
use crate::mesh::{sample_surface, TriMesh};
use crate::{Error, Result};

pub const CHAMFER_CONVENTION: &str = "mean_sq_a_to_b + mean_sq_b_to_a";
pub const EXACT_EMD_LIMIT: usize = 256;
pub const APPROX_EMD_LIMIT: usize = 2048;
pub const SINKHORN_EPSILON: f64 = 0.01;
pub const SINKHORN_ITERATIONS: usize = 500;
pub const DEFAULT_SURFACE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmdMode {
    Exact,
    Approximate,
}

/// Symmetric chamfer distance: mean squared nearest distance in both directions.
pub fn chamfer_3d(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("chamfer distance needs two non-empty clouds".into()));
    }
    Ok(mean_sq_to(a, b) + mean_sq_to(b, a))
}

fn mean_sq_to(from: &[Vec3], to: &[Vec3]) -> f64 {
    let tree = KdTree::build(to.iter().map(|p| [p.x, p.y, p.z]).collect());
    let sum: f64 = from
        .iter()
        .map(|p| tree.nearest(&[p.x, p.y, p.z]).map_or(0.0, |n| n.1))
        .sum();
    sum / from.len() as f64
}

/// Earth mover's distance as the mean matched Euclidean distance. Clouds up to
/// [`EXACT_EMD_LIMIT`] points are matched exactly; larger ones use entropic transport.
pub fn emd(a: &[Vec3], b: &[Vec3]) -> Result<(f64, EmdMode)> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "earth mover's distance needs equal sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("earth mover's distance needs non-empty clouds".into()));
    }
    if a.len() <= EXACT_EMD_LIMIT {
        Ok((emd_exact(a, b)?, EmdMode::Exact))
    } else {
        Ok((emd_sinkhorn(a, b, SINKHORN_EPSILON, SINKHORN_ITERATIONS)?, EmdMode::Approximate))
    }
}

fn cost_matrix(a: &[Vec3], b: &[Vec3]) -> Vec<f64> {
    a.iter().flat_map(|p| b.iter().map(move |q| (p - q).norm())).collect()
}

/// Optimal one-to-one matching by the Hungarian algorithm.
pub fn emd_exact(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument("exact matching needs equal non-empty clouds".into()));
    }
    let n = a.len();
    let cost = cost_matrix(a, b);
    let assignment = hungarian(n, &cost);
    Ok(assignment.iter().enumerate().map(|(i, j)| cost[i * n + j]).sum::<f64>() / n as f64)
}

/// Row-to-column assignment minimizing total cost of a square matrix.
pub fn hungarian(n: usize, cost: &[f64]) -> Vec<usize> {
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// Entropy-regularized transport cost with uniform marginals, iterated in the log domain.
pub fn emd_sinkhorn(a: &[Vec3], b: &[Vec3], epsilon: f64, iterations: usize) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument("transport needs equal non-empty clouds".into()));
    }
    if a.len() > APPROX_EMD_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "approximate transport supports at most {APPROX_EMD_LIMIT} points"
        )));
    }
    let n = a.len();
    let cost = cost_matrix(a, b);
    let log_w = -(n as f64).ln();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    let lse = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
        let v: Vec<f64> = vals.collect();
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    };
    for _ in 0..iterations {
        for i in 0..n {
            f[i] = -epsilon * lse(&mut (0..n).map(|j| (g[j] - cost[i * n + j]) / epsilon + log_w));
        }
        for j in 0..n {
            g[j] = -epsilon * lse(&mut (0..n).map(|i| (f[i] - cost[i * n + j]) / epsilon + log_w));
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let c = cost[i * n + j];
            total += ((f[i] + g[j] - c) / epsilon + 2.0 * log_w).exp() * c;
        }
    }
    Ok(total)
}

pub fn sample_pair<R: Rng + ?Sized>(pred: &TriMesh, gt: &TriMesh, n: usize, rng: &mut R) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    Ok((sample_surface(pred, n, rng)?, sample_surface(gt, n, rng)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cd: f64,
    pub cd_convention: String,
    pub emd: f64,
    pub emd_mode: EmdMode,
    pub n: usize,
    pub emd_n: usize,
    pub seed: u64,
}

/// Chamfer on `n` samples per surface and EMD on the first `emd_n` of them.
pub fn evaluate_meshes<R: Rng + ?Sized>(
    pred: &TriMesh,
    gt: &TriMesh,
    n: usize,
    emd_n: usize,
    seed: u64,
    rng: &mut R,
) -> Result<EvalReport> {
    let (a, b) = sample_pair(pred, gt, n, rng)?;
    let cd = chamfer_3d(&a, &b)?;
    let emd_n = emd_n.min(n).min(APPROX_EMD_LIMIT);
    let (emd, emd_mode) = emd(&a[..emd_n], &b[..emd_n])?;
    Ok(EvalReport {
        cd,
        cd_convention: CHAMFER_CONVENTION.to_string(),
        emd,
        emd_mode,
        n,
        emd_n,
        seed,
    })
}
