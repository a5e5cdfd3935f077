use udfcloth::sketch::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (w, h) = (37, 29);
    let ink: Vec<bool> = (0..w * h).map(|_| rng.random::<f64>() < 0.02).collect();
    let dt = DistanceTransform::compute(w, h, &ink);
    for y in 0..h {
        for x in 0..w {
            let mut best = f64::INFINITY;
            for l in (0..w * h).filter(|l| ink[*l]) {
                let dx = (l % w) as f64 - x as f64;
                let dy = (l / w) as f64 - y as f64;
                best = best.min(dx * dx + dy * dy);
            }
            let l = y * w + x;
            assert_eq!(dt.squared[l], best);
            let n = dt.nearest[l];
            assert!(ink[n]);
            let dx = (n % w) as f64 - x as f64;
            let dy = (n / w) as f64 - y as f64;
            assert_eq!(dx * dx + dy * dy, best);
        }
    }
}

#[test]
fn blank_raster_is_infinite() {
    let dt = DistanceTransform::compute(4, 4, &[false; 16]);
    assert!(dt.squared.iter().all(|d| d.is_infinite()));
    assert!(dt.nearest_point(1, 1).is_none());
}
