//! The bundled three-garment toy shape space used by tests and the demo service.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decoder::{train_auto_decoder, Checkpoint, DecoderConfig, EpochStats, LatentLibrary, TrainConfig, Decoder};
use crate::mesh::SurfaceIndex;
use crate::primitives::toy_garments;
use crate::sampling::{sample_udf_training_set, SamplingSpec, UdfSampleSet};
use crate::Result;

const HELD_OUT_SEED_OFFSET: u64 = 1000;

/// Training samples for every toy garment, one RNG stream per shape.
pub fn training_sets(seed: u64) -> Result<Vec<UdfSampleSet>> {
    sample_all(&SamplingSpec::desk_training(), seed)
}

/// Fresh near-surface samples drawn with a different seed than training.
pub fn held_out_near_sets(seed: u64) -> Result<Vec<UdfSampleSet>> {
    let spec = SamplingSpec::desk();
    let near = spec.blocks()[0].clone();
    Ok(sample_all(&spec, seed + HELD_OUT_SEED_OFFSET)?
        .into_iter()
        .map(|s| UdfSampleSet {
            points: s.points[near.clone()].to_vec(),
            distances: s.distances[near.clone()].to_vec(),
            mesh_name: s.mesh_name,
        })
        .collect())
}

fn sample_all(spec: &SamplingSpec, seed: u64) -> Result<Vec<UdfSampleSet>> {
    toy_garments()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let index = SurfaceIndex::build(m)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(i as u64));
            sample_udf_training_set(m, &index, spec, &mut rng)
        })
        .collect()
}

/// Trains the desk decoder on the toy garments.
pub fn train_toy(
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochStats, &Decoder, &LatentLibrary) -> Result<()>,
) -> Result<(Checkpoint, Vec<EpochStats>)> {
    let sets = training_sets(seed)?;
    let out = train_auto_decoder(&sets, DecoderConfig::desk(), &toy_train_config(seed), on_epoch)?;
    let checkpoint = Checkpoint {
        decoder: out.decoder,
        latents: out.latents,
    };
    Ok((checkpoint, out.history))
}

pub fn toy_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        ..TrainConfig::desk()
    }
}

/// Loads a toy checkpoint cached in `dir`, training and caching it first if
/// none exists for the current configuration.
pub fn cached_toy(dir: impl AsRef<Path>, seed: u64) -> Result<(Checkpoint, Vec<EpochStats>)> {
    let key = serde_json::to_string(&(
        toy_train_config(seed),
        DecoderConfig::desk(),
        SamplingSpec::desk_training(),
        toy_garments().iter().map(|m| (m.name.clone(), m.vertices.len(), m.triangles.len())).collect::<Vec<_>>(),
    ))?;
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    let stem = dir.as_ref().join(format!("toy-{:016x}", h.finish()));
    let ck_path = stem.with_extension("udfd");
    let hist_path = stem.with_extension("json");
    if let (Ok(ck), Ok(text)) = (Checkpoint::load(&ck_path), fs::read_to_string(&hist_path)) {
        if let Ok(history) = serde_json::from_str(&text) {
            return Ok((ck, history));
        }
    }
    let (ck, history) = train_toy(seed, &mut |_, _, _| Ok(()))?;
    fs::create_dir_all(dir.as_ref())?;
    let tmp = stem.with_extension(format!("tmp{}", std::process::id()));
    ck.save(&tmp)?;
    fs::rename(&tmp, &ck_path)?;
    fs::write(&tmp, serde_json::to_string(&history)?)?;
    fs::rename(&tmp, &hist_path)?;
    Ok((ck, history))
}
