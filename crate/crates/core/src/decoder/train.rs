use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::loss::{loss_clamped_l1, loss_clamped_l1_grad, lr_at_epoch, LossBreakdown, TrainConfig};
use super::network::{Decoder, DecoderConfig, ParamGradients};
use crate::geom::Vec3;
use crate::sampling::UdfSampleSet;
use crate::{Error, Result};

/// Named per-shape latent codes in training order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatentLibrary {
    pub entries: Vec<(String, Vec<f64>)>,
}

impl LatentLibrary {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, z)| z.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr_decoder: f64,
    pub lr_latent: f64,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub decoder: Decoder,
    pub latents: LatentLibrary,
    pub history: Vec<EpochStats>,
}

/// First and second moment estimates for one parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    beta1: f64,
    beta2: f64,
}

impl Adam {
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, beta1: f64, beta2: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1,
            beta2,
        }
    }

    /// Applies one bias-corrected step to `params` given `grads`.
    pub fn step<'a>(&mut self, params: impl Iterator<Item = &'a mut f64>, grads: impl Iterator<Item = f64>, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

fn decoder_params_mut(d: &mut Decoder) -> impl Iterator<Item = &mut f64> {
    d.layers.iter_mut().flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
}

fn grad_values(g: &ParamGradients) -> impl Iterator<Item = f64> + '_ {
    g.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
}

/// Mean clamped distance loss of `(decoder, z)` on a sample set.
pub fn mean_clamped_l1(decoder: &Decoder, z: &[f64], samples: &UdfSampleSet, delta: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to evaluate".into()));
    }
    let preds = decoder.values(&samples.points, z)?;
    Ok(preds
        .iter()
        .zip(&samples.distances)
        .map(|(p, g)| loss_clamped_l1(*p, *g, delta))
        .sum::<f64>()
        / samples.len() as f64)
}

/// Jointly fits a shared decoder and one latent per sample set.
///
/// `on_epoch` runs after every epoch and may write checkpoints; an error from
/// it stops training.
pub fn train_auto_decoder(
    sets: &[UdfSampleSet],
    decoder_cfg: DecoderConfig,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochStats, &Decoder, &LatentLibrary) -> Result<()>,
) -> Result<TrainOutput> {
    cfg.validate()?;
    if sets.is_empty() || sets.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidArgument("training needs at least one non-empty sample set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut decoder = Decoder::new(decoder_cfg, &mut rng)?;
    let l = decoder_cfg.latent_dim;
    let normal = Normal::new(0.0, cfg.latent_init_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut latents: Vec<Vec<f64>> = sets.iter().map(|_| (0..l).map(|_| normal.sample(&mut rng)).collect()).collect();

    let mut dec_adam = Adam::new(decoder_cfg.parameter_count(), cfg.beta1, cfg.beta2);
    let mut lat_adam: Vec<Adam> = sets.iter().map(|_| Adam::new(l, cfg.beta1, cfg.beta2)).collect();
    let mut perms: Vec<Vec<usize>> = sets.iter().map(|s| (0..s.len()).collect()).collect();
    let max_len = sets.iter().map(|s| s.len()).max().unwrap_or(0);
    let steps_per_epoch = max_len.div_ceil(cfg.points_per_shape);
    let mut history = Vec::with_capacity(cfg.epochs);
    let library = |latents: &[Vec<f64>]| LatentLibrary {
        entries: sets.iter().zip(latents).map(|(s, z)| (s.mesh_name.clone(), z.clone())).collect(),
    };

    for epoch in 0..cfg.epochs {
        let lr_d = lr_at_epoch(epoch, cfg, cfg.alpha_decoder);
        let lr_z = lr_at_epoch(epoch, cfg, cfg.alpha_encoder);
        let mut order: Vec<usize> = (0..sets.len()).collect();
        order.shuffle(&mut rng);
        for p in &mut perms {
            p.shuffle(&mut rng);
        }
        let mut sum = LossBreakdown::default();
        let mut steps = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            for step in 0..steps_per_epoch {
                let mut points: Vec<Vec3> = Vec::new();
                let mut gts: Vec<f64> = Vec::new();
                let mut owners: Vec<usize> = Vec::new();
                for &s in batch {
                    let perm = &perms[s];
                    for k in 0..cfg.points_per_shape.min(perm.len()) {
                        let i = perm[(step * cfg.points_per_shape + k) % perm.len()];
                        points.push(sets[s].points[i]);
                        gts.push(sets[s].distances[i]);
                        owners.push(s);
                    }
                }
                let zs: Vec<&[f64]> = owners.iter().map(|o| latents[*o].as_slice()).collect();
                let cache = decoder.forward(decoder.input_matrix(&points, &zs));
                let n = points.len() as f64;
                let geo_w = cfg.geo_factor();
                let mut udf = 0.0;
                let mut geo = 0.0;
                let upstream: Vec<f64> = cache
                    .values
                    .iter()
                    .zip(&gts)
                    .map(|(p, g)| {
                        udf += loss_clamped_l1(*p, *g, cfg.delta);
                        let e = (-cfg.gamma_geo * p).exp();
                        geo += e;
                        (loss_clamped_l1_grad(*p, *g, cfg.delta) - geo_w * cfg.gamma_geo * e) / n
                    })
                    .collect();
                let mut latent_loss = 0.0;
                for &s in batch {
                    latent_loss += super::loss::loss_latent_reg(&latents[s], cfg.lambda);
                }
                let loss = LossBreakdown::new(udf / n, latent_loss / batch.len() as f64, geo_w * geo / n);
                if !loss.total.is_finite() {
                    return Err(Error::TrainingDiverged {
                        epoch,
                        lr_decoder: lr_d,
                        lr_latent: lr_z,
                        udf: loss.udf,
                        latent: loss.latent,
                        geo: loss.geo,
                    });
                }

                let (dx, grads) = decoder.backward(&cache, &upstream, true);
                let grads = grads.expect("requested");
                let enc = decoder_cfg.encoding_dim();
                let mut dz: Vec<Vec<f64>> = batch.iter().map(|_| vec![0.0; l]).collect();
                for (r, o) in owners.iter().enumerate() {
                    let slot = batch.iter().position(|s| s == o).expect("owner in batch");
                    let row = dx.row(r);
                    for (acc, g) in dz[slot].iter_mut().zip(row.iter().skip(enc)) {
                        *acc += g;
                    }
                }
                for (slot, &s) in batch.iter().enumerate() {
                    let norm = latents[s].iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        let scale = cfg.lambda / (norm * batch.len() as f64);
                        for (g, v) in dz[slot].iter_mut().zip(&latents[s]) {
                            *g += scale * v;
                        }
                    }
                    lat_adam[s].step(latents[s].iter_mut(), dz[slot].iter().copied(), lr_z);
                }
                dec_adam.step(decoder_params_mut(&mut decoder), grad_values(&grads), lr_d);

                sum.udf += loss.udf;
                sum.latent += loss.latent;
                sum.geo += loss.geo;
                steps += 1;
            }
        }
        let k = steps.max(1) as f64;
        let stats = EpochStats {
            epoch,
            lr_decoder: lr_d,
            lr_latent: lr_z,
            loss: LossBreakdown::new(sum.udf / k, sum.latent / k, sum.geo / k),
        };
        log::debug!("epoch {epoch}: {:?}", stats.loss);
        history.push(stats);
        on_epoch(&stats, &decoder, &library(&latents))?;
    }
    decoder.round_to_f32();
    for z in &mut latents {
        for v in z.iter_mut() {
            *v = *v as f32 as f64;
        }
    }
    decoder.check_finite()?;
    Ok(TrainOutput {
        decoder,
        latents: library(&latents),
        history,
    })
}
