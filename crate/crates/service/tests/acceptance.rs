//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use udfcloth::decoder::{
    loss_clamped_l1, loss_geo_reg, loss_latent_reg, lr_at_epoch, mean_clamped_l1, total_loss, Checkpoint, Decoder,
    DecoderConfig, TrainConfig,
};
use udfcloth::editor::{coarse_mesh, contour_samples, frozen_chamfer, latent_gradient, optimize_latent, EditConfig, EditSession};
use udfcloth::field::{project_point, AnalyticField, FieldQuery, MeshField, UdfGrid};
use udfcloth::geom::Vec3;
use udfcloth::mesh::{sample_surface, SurfaceIndex, TriMesh};
use udfcloth::mesher::{extract_mesh, MeshingConfig};
use udfcloth::metrics::{chamfer_3d, emd_exact, emd_sinkhorn, SINKHORN_EPSILON, SINKHORN_ITERATIONS};
use udfcloth::primitives::bundled;
use udfcloth::sampling::{sample_udf_training_set, EvalGrid, SamplingSpec};
use udfcloth::sketch::{contour_from_depth, render_depth, CameraPose, SketchImage};
use udfcloth::toy::{held_out_near_sets, train_toy};

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let t = Instant::now();
    let toy = toy_checkpoint();
    println!("setup: toy checkpoint ready in {:.1} s", t.elapsed().as_secs_f64());

    let criteria: Vec<(usize, &str, f64, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "distance oracle", 30.0, Box::new(distance_oracle)),
        (2, "sampling recipe", 120.0, Box::new(sampling_recipe)),
        (3, "projection step", 10.0, Box::new(projection_step)),
        (4, "meshing round-trip", 120.0, Box::new(meshing_round_trip)),
        (5, "gradient correctness", 120.0, Box::new({ let ck = toy.clone(); move || gradients(&ck) })),
        (6, "loss and schedule", 1.0, Box::new(loss_and_schedule)),
        (7, "desk-scale training", 900.0, Box::new(desk_training)),
        (8, "editing convergence", 120.0, Box::new({ let ck = toy.clone(); move || editing(&ck) })),
        (9, "metric oracles", 60.0, Box::new(metric_oracles)),
        (10, "service contract", 180.0, Box::new({ let ck = toy.clone(); move || service(&ck) })),
    ];

    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| check())).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        let result = match result {
            Ok(detail) if secs > limit => Err(format!("{detail}; took {secs:.1} s, limit {limit} s")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {n} {name} ({secs:.1} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n} {name} ({secs:.1} s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

/// Plane distance when the foot of the perpendicular is inside, else the nearest edge.
fn triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = (b - a).cross(&(c - a));
    if n.norm() > 0.0 {
        let n = n.normalize();
        let h = (p - a).dot(&n);
        let q = p - n * h;
        let inside = [(a, b), (b, c), (c, a)].iter().all(|(u, v)| (*v - *u).cross(&(q - *u)).dot(&n) >= 0.0);
        if inside {
            return h.abs();
        }
    }
    segment_distance(p, a, b).min(segment_distance(p, b, c)).min(segment_distance(p, c, a))
}

fn brute_distance(mesh: &TriMesh, p: &Vec3) -> f64 {
    (0..mesh.triangles.len())
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            triangle_distance(p, &a, &b, &c)
        })
        .fold(f64::INFINITY, f64::min)
}

fn uniform(rng: &mut ChaCha8Rng, h: f64) -> Vec3 {
    Vec3::new(rng.random_range(-h..h), rng.random_range(-h..h), rng.random_range(-h..h))
}

fn distance_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let meshes = bundled();
    for m in &meshes {
        let index = SurfaceIndex::build(m).map_err(|e| e.to_string())?;
        let near = sample_surface(m, 500, &mut rng).map_err(|e| e.to_string())?;
        let mut queries: Vec<Vec3> = (0..500).map(|_| uniform(&mut rng, 1.0)).collect();
        queries.extend(near.iter().map(|s| s + uniform(&mut rng, 0.05)));
        for p in &queries {
            let c = index.closest_point(p);
            let err = (c.distance - brute_distance(m, p)).abs().max(((c.point - p).norm() - c.distance).abs());
            worst = worst.max(err);
            ensure!(err <= 1e-9, "{}: error {err:e} at {p:?}", m.name);
        }
    }
    Ok(format!("1000 queries x {} meshes, worst error {worst:.1e}", meshes.len()))
}

fn check_sampling(spec: &SamplingSpec, counts: [usize; 4], exhaustive: bool) -> Result<(), String> {
    ensure!(
        [spec.n_near, spec.n_mid, spec.n_surface, spec.n_box] == counts && spec.n_total == counts.iter().sum::<usize>(),
        "block sizes {:?}",
        [spec.n_near, spec.n_mid, spec.n_surface, spec.n_box]
    );
    ensure!(spec.band_near == 0.05 && spec.band_mid == 0.3, "bands {} / {}", spec.band_near, spec.band_mid);
    for (i, m) in bundled().iter().enumerate() {
        let index = SurfaceIndex::build(m).map_err(|e| e.to_string())?;
        let set = sample_udf_training_set(m, &index, spec, &mut ChaCha8Rng::seed_from_u64(i as u64)).map_err(|e| e.to_string())?;
        ensure!(set.len() == spec.n_total, "{}: {} samples", m.name, set.len());
        let exact: Vec<f64> = if exhaustive {
            set.points.iter().map(|p| brute_distance(m, p)).collect()
        } else {
            set.points.iter().map(|p| index.distance(p)).collect()
        };
        let [near, mid, surf, boxed] = spec.blocks();
        ensure!(
            (near.len(), mid.len(), surf.len(), boxed.len()) == (counts[0], counts[1], counts[2], counts[3]),
            "{}: block lengths",
            m.name
        );
        ensure!(exact[near].iter().all(|d| *d <= 0.05), "{}: near sample beyond 0.05", m.name);
        ensure!(exact[mid].iter().all(|d| *d <= 0.3), "{}: mid sample beyond 0.3", m.name);
        ensure!(exact[surf].iter().all(|d| *d < 1e-9), "{}: surface sample off the surface", m.name);
        ensure!(set.points[boxed].iter().all(|p| p.amax() <= spec.box_half_extent), "{}: box sample outside", m.name);
        ensure!(
            set.distances.iter().zip(&exact).all(|(a, b)| (a - b).abs() <= 1e-9),
            "{}: stored distances disagree with recomputed ones",
            m.name
        );
    }
    Ok(())
}

fn sampling_recipe() -> Outcome {
    check_sampling(&SamplingSpec::full(), [48_000, 32_000, 24_000, 16_000], false)?;
    check_sampling(&SamplingSpec::desk(), [480, 320, 240, 160], true)?;
    Ok(format!("full and desk specs on {} meshes; desk distances checked by exhaustive scan", bundled().len()))
}

fn projection_step() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sphere = AnalyticField::sphere(Vec3::new(0.1, -0.05, 0.0), 0.5);
    let plane = AnalyticField::plane(Vec3::new(0.0, 0.1, 0.0), Vec3::new(0.3, 1.0, -0.2).normalize());
    let mut worst_ratio: f64 = 0.0;
    let mut tested = 0;
    for field in [&sphere, &plane] {
        while tested < 1000 {
            let p = uniform(&mut rng, 1.0);
            let d = field.value(&p);
            if !(0.01..0.3).contains(&d) {
                continue;
            }
            let q = project_point(field, &p, 1, 0.0).point;
            let ratio = field.value(&q) / d;
            worst_ratio = worst_ratio.max(ratio);
            ensure!(ratio <= 0.1, "one step left {:.1}% of d={d}", 100.0 * ratio);
            tested += 1;
        }
        tested = 0;
    }
    let mut worst_radial: f64 = 0.0;
    for _ in 0..200 {
        let dir: Vec3 = uniform(&mut rng, 1.0).normalize();
        let r = 0.5 + rng.random_range(-0.3..0.3);
        let p = Vec3::new(0.1, -0.05, 0.0) + dir * r;
        let q = project_point(&sphere, &p, 1, 0.0).point;
        let err = ((q - Vec3::new(0.1, -0.05, 0.0)).norm() - 0.5).abs();
        worst_radial = worst_radial.max(err);
        ensure!(err <= 1e-6, "radial projection off by {err:e}");
    }
    Ok(format!("worst remaining fraction {worst_ratio:.1e}, worst radial error {worst_radial:.1e}"))
}

fn meshing_round_trip() -> Outcome {
    let mut report = Vec::new();
    for m in bundled() {
        let index = SurfaceIndex::build(&m).map_err(|e| e.to_string())?;
        let grid = UdfGrid::from_field(&MeshField { index: &index }, EvalGrid::new(96).map_err(|e| e.to_string())?);
        let out = extract_mesh(&grid, &MeshingConfig::for_grid(&grid)).map_err(|e| e.to_string())?;
        ensure!(!out.is_empty(), "{}: empty extraction", m.name);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = sample_surface(&out, 10_000, &mut rng).map_err(|e| e.to_string())?;
        let b = sample_surface(&m, 10_000, &mut rng).map_err(|e| e.to_string())?;
        let cd = chamfer_3d(&a, &b).map_err(|e| e.to_string())?;
        ensure!(cd < 5e-3, "{}: chamfer {cd:e}", m.name);
        let (open_in, open_out) = (m.boundary_edge_count(), out.boundary_edge_count());
        if m.name == "sphere" {
            ensure!(open_out == 0, "sphere extraction has {open_out} boundary edges");
        } else if open_in > 0 {
            ensure!(open_out > 0, "{}: open input came back closed", m.name);
        }
        report.push(format!("{} {cd:.1e}/{open_out}", m.name));
    }
    Ok(format!("chamfer/boundary edges: {}", report.join(", ")))
}

fn relative(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    diff / b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-8)
}

fn decoder_fd(d: &Decoder, latent: Option<&[f64]>, h: f64, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = uniform(&mut rng, 0.9);
        let z: Vec<f64> = match latent {
            Some(l) => l.to_vec(),
            None => (0..d.config().latent_dim).map(|_| rng.random_range(-0.3..0.3)).collect(),
        };
        let e = d.evaluate(&p, &z).map_err(|e| e.to_string())?;
        let value = |p: &Vec3, z: &[f64]| d.value(p, z).expect("decoder value");
        let fd_p: Vec<f64> = (0..3)
            .map(|a| {
                let (mut hi, mut lo) = (p, p);
                hi[a] += h;
                lo[a] -= h;
                (value(&hi, &z) - value(&lo, &z)) / (2.0 * h)
            })
            .collect();
        let fd_z: Vec<f64> = (0..z.len())
            .map(|i| {
                let (mut hi, mut lo) = (z.clone(), z.clone());
                hi[i] += h;
                lo[i] -= h;
                (value(&p, &hi) - value(&p, &lo)) / (2.0 * h)
            })
            .collect();
        let err = relative(e.grad_p.as_slice(), &fd_p).max(relative(&e.grad_z, &fd_z));
        worst = worst.max(err);
        ensure!(err <= 1e-3, "relative error {err:e} at {p:?}");
    }
    Ok(worst)
}

fn decoded_sketch(ck: &Checkpoint, z: &[f64], pose: CameraPose, cfg: &EditConfig) -> Result<SketchImage, String> {
    let mesh = coarse_mesh(&ck.decoder, z, cfg.grid_resolution, cfg.max_surface_value).map_err(|e| e.to_string())?;
    Ok(contour_from_depth(&render_depth(&mesh, &pose), cfg.depth_edge_threshold, pose))
}

fn latent_of(ck: &Checkpoint, name: &str) -> Result<Vec<f64>, String> {
    ck.latents.get(name).map(|z| z.to_vec()).ok_or_else(|| format!("no latent {name}"))
}

fn gradients(ck: &Checkpoint) -> Outcome {
    let fresh = Decoder::new(DecoderConfig::desk(), &mut ChaCha8Rng::seed_from_u64(7)).map_err(|e| e.to_string())?;
    let w_fresh = decoder_fd(&fresh, None, 1e-4, 8)?;
    let mut w_trained: f64 = 0.0;
    for (i, (_, z)) in ck.latents.entries.iter().enumerate() {
        w_trained = w_trained.max(decoder_fd(&ck.decoder, Some(z), 1e-5, 9 + i as u64)?);
    }

    let cfg = EditConfig::default();
    let pose = CameraPose::from_degrees(30.0, 0.0, 256).map_err(|e| e.to_string())?;
    let z = latent_of(ck, "skirt")?;
    let target = decoded_sketch(ck, &latent_of(ck, "dress")?, pose, &cfg)?;
    let samples = contour_samples(&ck.decoder, &z, &pose, &cfg).map_err(|e| e.to_string())?;
    let g = latent_gradient(&ck.decoder, &z, &pose, &target, &samples, cfg.probe_offset).map_err(|e| e.to_string())?;
    let h = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let dir: Vec<f64> = (0..z.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let at = |s: f64| -> Result<f64, String> {
            let zs: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + s * d / n).collect();
            frozen_chamfer(&ck.decoder, &zs, &pose, &target, &samples, cfg.probe_offset).map_err(|e| e.to_string())
        };
        let fd = (at(h)? - at(-h)?) / (2.0 * h);
        let analytic: f64 = g.gradient.iter().zip(&dir).map(|(a, d)| a * d / n).sum();
        let err = (fd - analytic).abs() / fd.abs();
        worst = worst.max(err);
        ensure!(err <= 0.2, "directional derivative {analytic} vs finite difference {fd}");
    }
    Ok(format!(
        "decoder worst relative error {w_fresh:.1e} fresh (h=1e-4), {w_trained:.1e} trained (h=1e-5); pipeline worst {:.1}% over 10 directions",
        100.0 * worst
    ))
}

fn loss_and_schedule() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-15;
    ensure!(close(loss_clamped_l1(0.05, 0.02, 0.1), 0.03), "clamped L1 below threshold");
    ensure!(loss_clamped_l1(0.5, 0.3, 0.1) == 0.0, "clamped L1 both clipped");
    ensure!(close(loss_clamped_l1(0.05, 0.3, 0.1), 0.05), "clamped L1 one clipped");
    ensure!(loss_geo_reg(&[0.0, 0.0, 0.0], 60.0) == 1.0, "geometric term at zero");
    ensure!(loss_geo_reg(&[1e6], 60.0) < 1e-300, "geometric term at infinity");
    ensure!(close(loss_geo_reg(&[0.0, 2f64.ln() / 60.0], 60.0), 0.75), "geometric term at ln2/gamma");
    ensure!(loss_latent_reg(&[0.0; 8], 1e-4) == 0.0, "latent term at zero");
    ensure!((loss_latent_reg(&[3.0, 4.0, 0.0], 1e-4) - 5e-4).abs() <= 1e-18, "latent term at (3,4,0)");
    let z = [0.3, -0.1, 0.2];
    let scaled: Vec<f64> = z.iter().map(|v| v * 2.5).collect();
    ensure!((loss_latent_reg(&scaled, 1e-4) - 2.5 * loss_latent_reg(&z, 1e-4)).abs() <= 1e-18, "latent term homogeneity");
    let cfg = TrainConfig::desk();
    let l = total_loss(&[(&[0.0, 0.05, 0.2, 0.01], &[0.0, 0.02, 0.3, 0.04], &z)], &cfg);
    ensure!((l.udf + l.latent + l.geo - l.total).abs() <= 1e-12, "components do not sum to the total");
    let perfect = total_loss(&[(&[0.5, 0.7], &[0.5, 0.7], &[0.0, 0.0])], &cfg);
    ensure!(perfect.udf == 0.0 && perfect.latent == 0.0 && perfect.total == perfect.geo, "perfect batch keeps only the geometric term");
    let full = TrainConfig::full();
    let lrs = [lr_at_epoch(0, &full, 1.0), lr_at_epoch(500, &full, 1.0), lr_at_epoch(999, &full, 0.1)];
    ensure!((lrs[0] - 0.5e-3).abs() <= 1e-18, "lr(0) = {}", lrs[0]);
    ensure!((lrs[1] - 0.25e-3).abs() <= 1e-18, "lr(500) = {}", lrs[1]);
    ensure!((lrs[2] - 0.025e-3).abs() <= 1e-18, "lr(999, 0.1) = {}", lrs[2]);
    ensure!(lr_at_epoch(499, &full, 1.0) == lrs[0] && lr_at_epoch(1000, &full, 1.0) == 0.125e-3, "schedule breakpoints");
    Ok(format!("lr = {:e} / {:e} / {:e}", lrs[0], lrs[1], lrs[2]))
}

fn desk_training() -> Outcome {
    let (ck, history) = train_toy(0, &mut |_, _, _| Ok(())).map_err(|e| e.to_string())?;
    ensure!(history.len() <= 300, "{} epochs", history.len());
    let held = held_out_near_sets(0).map_err(|e| e.to_string())?;
    let zs: Vec<(&str, &Vec<f64>)> = ck.latents.entries.iter().map(|(n, z)| (n.as_str(), z)).collect();
    let mut own_losses = Vec::new();
    let mut min_margin = f64::INFINITY;
    for (i, set) in held.iter().enumerate() {
        let own = mean_clamped_l1(&ck.decoder, zs[i].1, set, 0.1).map_err(|e| e.to_string())?;
        ensure!(own < 0.01, "{}: held-out clamped L1 {own}", zs[i].0);
        own_losses.push(format!("{} {own:.4}", zs[i].0));
        for (j, (name, z)) in zs.iter().enumerate().filter(|(j, _)| *j != i) {
            let cross = mean_clamped_l1(&ck.decoder, z, set, 0.1).map_err(|e| e.to_string())?;
            ensure!(cross > own, "{} samples: latent {name} {cross} <= own {own} (shape {j})", zs[i].0);
            min_margin = min_margin.min(cross / own);
        }
    }
    Ok(format!("{} epochs; held-out L1 {}; smallest cross/own ratio {min_margin:.1}", history.len(), own_losses.join(", ")))
}

fn editing(ck: &Checkpoint) -> Outcome {
    let cfg = EditConfig::default().with_steps(50);
    let front = CameraPose::from_degrees(0.0, 0.0, 256).map_err(|e| e.to_string())?;
    let target = decoded_sketch(ck, &latent_of(ck, "skirt")?, front, &cfg)?;
    let session = EditSession::new(latent_of(ck, "dress")?, target, cfg.clone()).map_err(|e| e.to_string())?;
    let out = optimize_latent(session, &ck.decoder).map_err(|e| e.to_string())?;
    let (before, after) = (out.initial_chamfer().unwrap_or(f64::NAN), out.best_chamfer().unwrap_or(f64::NAN));
    ensure!(out.history.len() <= 51, "{} steps", out.history.len() - 1);
    ensure!(after <= 0.5 * before, "dress toward skirt: chamfer {before:.0} -> {after:.0} ({:.3})", after / before);

    let pose = CameraPose::from_degrees(45.0, 0.0, 256).map_err(|e| e.to_string())?;
    let z = latent_of(ck, "cape")?;
    let own = decoded_sketch(ck, &z, pose, &cfg)?;
    let fixed = optimize_latent(EditSession::new(z.clone(), own, cfg).map_err(|e| e.to_string())?, &ck.decoder).map_err(|e| e.to_string())?;
    let moved = z.iter().zip(&fixed.z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    ensure!(moved < 1e-3, "self-edit moved z by {moved:e}");
    Ok(format!(
        "dress toward skirt sketch: chamfer {before:.0} -> {after:.0} (ratio {:.3}) in {} steps; self-edit moved z by {moved:.1e}",
        after / before,
        out.history.len() - 1
    ))
}

fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n).map(|_| uniform(rng, 1.0)).collect()
}

fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
    let side = |x: &[Vec3], y: &[Vec3]| {
        x.iter().map(|p| y.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min)).sum::<f64>() / x.len() as f64
    };
    side(a, b) + side(b, a)
}

fn matching_cost(a: &[Vec3], b: &[Vec3], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, j)| (a[i] - b[*j]).norm()).sum::<f64>() / a.len() as f64
}

/// Minimum over all permutations of a small cloud.
fn brute_emd(a: &[Vec3], b: &[Vec3]) -> f64 {
    fn rec(a: &[Vec3], b: &[Vec3], i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if i == a.len() {
            *best = acc;
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                rec(a, b, i + 1, used, acc + (a[i] - b[j]).norm(), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(a, b, 0, &mut vec![false; b.len()], 0.0, &mut best);
    best / a.len() as f64
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_cd: f64 = 0.0;
    for n in [50, 200, 1000] {
        let (a, b) = (cloud(&mut rng, n), cloud(&mut rng, n + 37));
        let err = (chamfer_3d(&a, &b).map_err(|e| e.to_string())? - brute_chamfer(&a, &b)).abs();
        worst_cd = worst_cd.max(err);
        ensure!(err <= 1e-10, "chamfer differs from brute force by {err:e} at n={n}");
    }
    for _ in 0..5 {
        let (a, b) = (cloud(&mut rng, 7), cloud(&mut rng, 7));
        let (exact, brute) = (emd_exact(&a, &b).map_err(|e| e.to_string())?, brute_emd(&a, &b));
        ensure!((exact - brute).abs() <= 1e-12, "Hungarian {exact} vs enumeration {brute} on 7 points");
    }
    let mut worst_emd: f64 = 0.0;
    for _ in 0..3 {
        let a = cloud(&mut rng, 64);
        let b: Vec<Vec3> = cloud(&mut rng, 64).iter().map(|p| p * 0.5 + Vec3::new(0.2, 0.0, 0.0)).collect();
        let exact = emd_exact(&a, &b).map_err(|e| e.to_string())?;
        let mut perm: Vec<usize> = (0..64).collect();
        for _ in 0..100 {
            perm.shuffle(&mut rng);
            ensure!(exact <= matching_cost(&a, &b, &perm) + 1e-12, "a random matching beats the Hungarian one");
        }
        let approx = emd_sinkhorn(&a, &b, SINKHORN_EPSILON, SINKHORN_ITERATIONS).map_err(|e| e.to_string())?;
        let rel = (approx - exact).abs() / exact;
        worst_emd = worst_emd.max(rel);
        ensure!(rel <= 0.05, "approximate EMD {approx} vs exact {exact}");
    }
    Ok(format!("chamfer worst error {worst_cd:.1e}; approximate EMD worst {:.2}% off on 64 points", 100.0 * worst_emd))
}

fn service(ck: &Checkpoint) -> Outcome {
    let sketches = toy_sketches();
    let png = |name: &str| sketches.iter().find(|(n, _)| n == name).map(|s| s.1.clone()).ok_or(format!("no sketch {name}"));
    unavailable_without_model(&Api::new(spawn_server(None, quick_engine())), &png("skirt")?)?;
    let model = udfcloth_service::Model::with_bundled_library(ck.clone(), &udfcloth::sketch::PairConfig::default()).map_err(|e| e.to_string())?;
    let api = Api::new(spawn_server(Some(model), quick_engine()));
    bad_requests_are_rejected(&api)?;
    generate_is_deterministic(&api, &png("cape")?)?;
    sketches_reconstruct_their_shape(&api, &sketches)?;
    capture_is_a_fixed_point(&api, &png("dress")?)?;
    edit_and_reset_cycle(&api, &png("dress")?, &png("skirt")?)?;
    Ok(format!("state machine checks passed against {}", api.base))
}
