use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use udfcloth::decoder::{Checkpoint, LatentLibrary};
use udfcloth::editor::{coarse_mesh, EditConfig};
use udfcloth::encoder::{Descriptor, SketchLibrary, DEFAULT_TOP_K};
use udfcloth::mesh::sample_surface;
use udfcloth::metrics::chamfer_3d;
use udfcloth::primitives::toy_garments;
use udfcloth::sketch::{build_pair_dataset, CameraPose, PairConfig, SketchImage};
use udfcloth::toy::cached_toy;
use udfcloth::Error;

fn toy() -> Checkpoint {
    cached_toy(env!("CARGO_TARGET_TMPDIR"), 0).unwrap().0
}

fn library(ck: &Checkpoint) -> SketchLibrary {
    let pairs = build_pair_dataset(&toy_garments(), &PairConfig::default()).unwrap();
    let (lib, missing) = SketchLibrary::build(&pairs, &ck.latents);
    assert!(missing.is_empty());
    lib
}

fn fake_latents(names: &[&str]) -> LatentLibrary {
    LatentLibrary {
        entries: names.iter().enumerate().map(|(i, n)| (n.to_string(), vec![i as f64; 4])).collect(),
    }
}

#[test]
fn library_sizes_and_missing_latents() {
    let pairs = build_pair_dataset(&toy_garments(), &PairConfig { image_size: 64, ..PairConfig::default() }).unwrap();
    let (lib, missing) = SketchLibrary::build(&pairs, &fake_latents(&["skirt", "dress", "cape"]));
    assert_eq!(lib.len(), 108);
    assert!(missing.is_empty());
    let (lib, missing) = SketchLibrary::build(&pairs, &fake_latents(&["skirt", "cape"]));
    assert_eq!(lib.len(), 72);
    assert_eq!(missing, vec!["dress".to_string()]);
    let (empty, _) = SketchLibrary::build(&[], &fake_latents(&["skirt"]));
    let query = &pairs[0].sketch;
    assert!(matches!(empty.encode(query, DEFAULT_TOP_K), Err(Error::EmptyLibrary)));
}

#[test]
fn blank_sketches_are_degenerate_and_rejected() {
    let blank = SketchImage::blank(CameraPose::frontal(64).unwrap());
    let d = Descriptor::of(&blank);
    assert!(d.degenerate && d.values.iter().all(|v| *v == 1.0));
    let pairs = build_pair_dataset(&toy_garments(), &PairConfig { n_views: 2, image_size: 64, ..PairConfig::default() }).unwrap();
    let (lib, _) = SketchLibrary::build(&pairs, &fake_latents(&["skirt", "dress", "cape"]));
    assert!(matches!(lib.encode(&blank, DEFAULT_TOP_K), Err(Error::EmptySketch)));
}

#[test]
fn every_entry_retrieves_itself_and_survives_ink_dropout() {
    let ck = toy();
    let lib = library(&ck);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (i, e) in lib.entries.iter().enumerate() {
        // Views of surfaces of revolution repeat, so an identical earlier entry may win.
        let same = |j: usize| lib.entries[j].sketch.ink_mask() == e.sketch.ink_mask();
        let enc = lib.encode(&e.sketch, DEFAULT_TOP_K).unwrap();
        assert_eq!(enc.score, 0.0);
        assert!(enc.entry <= i && same(enc.entry));
        assert_eq!(enc.latent, e.latent);

        let mut noisy = e.sketch.clone();
        let mut ink: Vec<[f64; 2]> = noisy.ink_points();
        ink.shuffle(&mut rng);
        for [u, v] in ink.iter().take(ink.len() / 20) {
            noisy.set_ink(*u as usize, *v as usize, false);
        }
        assert!(same(lib.encode(&noisy, DEFAULT_TOP_K).unwrap().entry), "entry {i}");
    }
}

#[test]
fn retrieved_latent_reconstructs_its_own_shape_best() {
    let ck = toy();
    let lib = library(&ck);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let decoded: Vec<(String, Vec<_>)> = ck
        .latents
        .entries
        .iter()
        .map(|(n, z)| (n.clone(), sample_surface(&coarse_mesh(&ck.decoder, z, 48, EditConfig::default().max_surface_value).unwrap(), 4000, &mut rng).unwrap()))
        .collect();
    for gt in toy_garments() {
        let query = lib.entries.iter().find(|e| e.shape_name == gt.name).unwrap();
        let enc = lib.encode(&query.sketch, DEFAULT_TOP_K).unwrap();
        let truth = sample_surface(&gt, 4000, &mut rng).unwrap();
        let own = chamfer_3d(&decoded.iter().find(|d| d.0 == enc.shape_name).unwrap().1, &truth).unwrap();
        for (name, pts) in decoded.iter().filter(|d| d.0 != enc.shape_name) {
            let other = chamfer_3d(pts, &truth).unwrap();
            assert!(own < other, "{}: own {own} vs {name} {other}", gt.name);
        }
    }
}
