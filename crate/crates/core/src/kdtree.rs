//! Static k-d tree for nearest-neighbour queries in two or three dimensions.

/// Nearest-neighbour index over fixed-dimension points.
#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    /// Permutation of `points` laid out as an implicit balanced tree.
    order: Vec<usize>,
}

impl<const D: usize> KdTree<D> {
    pub fn build(points: Vec<[f64; D]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build_recursive(&points, &mut order, 0);
        Self { points, order }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64; D] {
        &self.points[i]
    }

    /// Index of the nearest point and its squared distance.
    pub fn nearest(&self, q: &[f64; D]) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, 0, self.order.len(), 0, &mut best);
        Some(best)
    }

    fn search(&self, q: &[f64; D], lo: usize, hi: usize, depth: usize, best: &mut (usize, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = dist2(p, q);
        if d2 < best.1 || (d2 == best.1 && idx < best.0) {
            *best = (idx, d2);
        }
        let axis = depth % D;
        let delta = q[axis] - p[axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, depth + 1, best);
        if delta * delta <= best.1 {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build_recursive<const D: usize>(points: &[[f64; D]], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % D;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |a, b| points[*a][axis].total_cmp(&points[*b][axis]));
    let (left, right) = order.split_at_mut(mid);
    build_recursive(points, left, depth + 1);
    build_recursive(points, &mut right[1..], depth + 1);
}

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
