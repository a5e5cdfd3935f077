use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hyper-parameters of auto-decoder training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Clamp threshold of the distance loss.
    pub delta: f64,
    /// Weight of the latent norm penalty.
    pub lambda: f64,
    /// Sharpness of the geometric regularizer.
    pub gamma_geo: f64,
    pub geo_weight: f64,
    pub geo_enabled: bool,
    pub lr_init: f64,
    /// Learning-rate decay factor applied every `gamma_step` epochs.
    pub omega: f64,
    pub gamma_step: usize,
    pub alpha_encoder: f64,
    pub alpha_decoder: f64,
    /// Shapes per optimizer step.
    pub batch_size: usize,
    /// Samples drawn from each shape per optimizer step.
    pub points_per_shape: usize,
    pub epochs: usize,
    pub seed: u64,
    pub latent_init_std: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl TrainConfig {
    pub fn full() -> Self {
        Self {
            delta: 0.1,
            lambda: 1e-4,
            gamma_geo: 60.0,
            geo_weight: 1.0,
            geo_enabled: true,
            lr_init: 0.5e-3,
            omega: 0.5,
            gamma_step: 500,
            alpha_encoder: 1.0,
            alpha_decoder: 0.1,
            batch_size: 16,
            points_per_shape: 16_384,
            epochs: 2000,
            seed: 0,
            latent_init_std: 0.1,
            beta1: 0.9,
            beta2: 0.999,
        }
    }

    pub fn desk() -> Self {
        Self {
            geo_weight: 0.01,
            lr_init: 5e-2,
            gamma_step: 50,
            batch_size: 4,
            points_per_shape: 512,
            epochs: 150,
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.lambda >= 0.0
            && self.gamma_geo > 0.0
            && self.geo_weight >= 0.0
            && self.lr_init > 0.0
            && self.omega > 0.0
            && self.omega < 1.0
            && self.gamma_step >= 1
            && self.batch_size >= 1
            && self.points_per_shape >= 1
            && self.latent_init_std >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid training configuration {self:?}")))
        }
    }

    /// Effective weight of the geometric regularizer.
    pub fn geo_factor(&self) -> f64 {
        if self.geo_enabled {
            self.geo_weight
        } else {
            0.0
        }
    }
}

/// `|min(pred, delta) - min(gt, delta)|`.
pub fn loss_clamped_l1(pred: f64, gt: f64, delta: f64) -> f64 {
    (pred.min(delta) - gt.min(delta)).abs()
}

/// Derivative of [`loss_clamped_l1`] in `pred`.
pub fn loss_clamped_l1_grad(pred: f64, gt: f64, delta: f64) -> f64 {
    if pred >= delta {
        0.0
    } else {
        let d = pred - gt.min(delta);
        if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// Mean of `exp(-gamma * pred)`.
pub fn loss_geo_reg(preds: &[f64], gamma: f64) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    preds.iter().map(|p| (-gamma * p).exp()).sum::<f64>() / preds.len() as f64
}

/// `lambda * |z|`.
pub fn loss_latent_reg(z: &[f64], lambda: f64) -> f64 {
    lambda * z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Step-decayed learning rate `alpha * lr_init * omega^floor(epoch / gamma_step)`.
pub fn lr_at_epoch(epoch: usize, cfg: &TrainConfig, alpha: f64) -> f64 {
    alpha * cfg.lr_init * cfg.omega.powi((epoch / cfg.gamma_step) as i32)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub udf: f64,
    pub latent: f64,
    pub geo: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(udf: f64, latent: f64, geo: f64) -> Self {
        Self {
            udf,
            latent,
            geo,
            total: udf + latent + geo,
        }
    }
}

/// Full objective over one batch. `groups` holds, per shape, predictions,
/// ground-truth distances and its latent.
pub fn total_loss(groups: &[(&[f64], &[f64], &[f64])], cfg: &TrainConfig) -> LossBreakdown {
    let n: usize = groups.iter().map(|g| g.0.len()).sum();
    if n == 0 {
        return LossBreakdown::default();
    }
    let udf = groups
        .iter()
        .flat_map(|(pred, gt, _)| pred.iter().zip(gt.iter()))
        .map(|(p, g)| loss_clamped_l1(*p, *g, cfg.delta))
        .sum::<f64>()
        / n as f64;
    let latent = groups.iter().map(|g| loss_latent_reg(g.2, cfg.lambda)).sum::<f64>() / groups.len() as f64;
    let all: Vec<f64> = groups.iter().flat_map(|g| g.0.iter().copied()).collect();
    let geo = cfg.geo_factor() * loss_geo_reg(&all, cfg.gamma_geo);
    LossBreakdown::new(udf, latent, geo)
}
