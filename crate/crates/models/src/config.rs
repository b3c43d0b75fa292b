use serde::{Deserialize, Serialize};
use xad_core::preprocess::PolicyName;

use crate::arch::{ArchConfig, ModelKind};
use crate::error::{Error, Result};

/// Seeds of the four published training runs per model.
pub const PAPER_SEEDS: [u64; 4] = [42, 4242, 424242, 42424242];

/// Everything that determines a training run apart from the data.
///
/// `lr` drives the autoencoder, or the generator (and encoder) of a GAN;
/// `lr_disc` drives the discriminator(s) and is required for GANs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub arch: ArchConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub lr_disc: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
    pub soft_label_delta: Option<f64>,
    pub hinge_loss: bool,
    /// Restrict reconstruction losses to the foreground mask.
    pub masked_loss: bool,
    /// Use the unsquared norm in the masked loss.
    pub unsquared_masked_loss: bool,
    /// Weight of the reconstruction term in the αGAN generator objective.
    pub recon_weight: f64,
    /// Standard deviation of the normal weight initialisation.
    pub init_std: f64,
    pub policy: PolicyName,
    pub equalize: bool,
}

impl TrainConfig {
    /// Published full-scale settings.
    pub fn paper(kind: ModelKind) -> Self {
        let base = TrainConfig {
            arch: ArchConfig::paper(kind),
            batch_size: 32,
            epochs: 500,
            lr: 1e-4,
            lr_disc: None,
            beta1: 0.9,
            beta2: 0.999,
            seed: PAPER_SEEDS[0],
            soft_label_delta: None,
            hinge_loss: false,
            masked_loss: true,
            unsquared_masked_loss: false,
            recon_weight: 10.0,
            init_std: 0.02,
            policy: PolicyName::Default,
            equalize: true,
        };
        match kind {
            ModelKind::Cae => TrainConfig { epochs: 1000, policy: PolicyName::Advanced, ..base },
            ModelKind::Vae => base,
            ModelKind::Dcgan => TrainConfig {
                batch_size: 80,
                lr: 1e-3,
                lr_disc: Some(1e-5),
                beta1: 0.5,
                soft_label_delta: Some(0.01),
                ..base
            },
            ModelKind::Bigan | ModelKind::AlphaGan => TrainConfig {
                batch_size: 16,
                lr: 1e-3,
                lr_disc: Some(5e-6),
                beta1: 0.5,
                hinge_loss: true,
                ..base
            },
        }
    }

    /// The "BAE" settings: the CAE architecture trained for 500 epochs.
    pub fn paper_bae() -> Self {
        TrainConfig { epochs: 500, ..TrainConfig::paper(ModelKind::Cae) }
    }

    /// 64×64 settings that finish on a CPU in minutes.
    pub fn desk(kind: ModelKind) -> Self {
        let paper = TrainConfig::paper(kind);
        let base = TrainConfig { arch: ArchConfig::desk(kind), epochs: 30, policy: PolicyName::None, ..paper };
        match kind {
            ModelKind::Cae => TrainConfig { batch_size: 8, epochs: 12, lr: 2e-3, ..base },
            ModelKind::Vae => TrainConfig { batch_size: 16, lr: 2e-3, ..base },
            ModelKind::Dcgan => TrainConfig { batch_size: 16, lr: 2e-4, lr_disc: Some(2e-4), ..base },
            ModelKind::Bigan | ModelKind::AlphaGan => {
                TrainConfig { batch_size: 16, lr: 2e-4, lr_disc: Some(1e-4), ..base }
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.arch.kind
    }

    pub fn resolution(&self) -> usize {
        self.arch.resolution
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind();
        let bad = |msg: String| Err(Error::Config(msg));
        if self.batch_size == 0 || self.epochs == 0 || self.arch.resolution == 0 {
            return bad("batch size, epochs and resolution must be positive".into());
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.lr) || !positive(self.init_std) {
            return bad("learning rate and init std must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.recon_weight.is_finite() && self.recon_weight >= 0.0) {
            return bad("reconstruction weight must be non-negative".into());
        }
        match (kind.is_gan(), self.lr_disc) {
            (true, Some(lr)) if positive(lr) => {}
            (true, _) => return bad(format!("{kind} needs a positive discriminator learning rate")),
            (false, Some(_)) => return bad(format!("{kind} has no discriminator")),
            (false, None) => {}
        }
        if self.hinge_loss && !matches!(kind, ModelKind::Bigan | ModelKind::AlphaGan) {
            return bad(format!("hinge loss is only used by BiGAN and αGAN, not {kind}"));
        }
        if let Some(delta) = self.soft_label_delta {
            if kind != ModelKind::Dcgan {
                return bad(format!("soft labels apply to the DCGAN discriminator only, not {kind}"));
            }
            if !(0.0..0.5).contains(&delta) {
                return bad(format!("soft-label delta {delta} outside [0, 0.5)"));
            }
        }
        if self.arch.minibatch.is_some() && !matches!(kind, ModelKind::Dcgan | ModelKind::AlphaGan) {
            return bad(format!("minibatch discrimination is only used by DCGAN and αGAN, not {kind}"));
        }
        if self.arch.spectral_norm && !kind.is_gan() {
            return bad(format!("spectral normalization needs a discriminator, {kind} has none"));
        }
        if self.arch.attention && !matches!(kind, ModelKind::Bigan | ModelKind::AlphaGan) {
            return bad(format!("self-attention is only used by BiGAN and αGAN, not {kind}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for kind in ModelKind::ALL {
            TrainConfig::paper(kind).validate().unwrap();
            TrainConfig::desk(kind).validate().unwrap();
        }
        TrainConfig::paper_bae().validate().unwrap();
    }

    #[test]
    fn paper_values() {
        let cae = TrainConfig::paper(ModelKind::Cae);
        assert_eq!((cae.batch_size, cae.arch.resolution, cae.epochs, cae.lr), (32, 512, 1000, 1e-4));
        let dcgan = TrainConfig::paper(ModelKind::Dcgan);
        assert_eq!((dcgan.batch_size, dcgan.lr, dcgan.lr_disc, dcgan.soft_label_delta), (80, 1e-3, Some(1e-5), Some(0.01)));
        let bigan = TrainConfig::paper(ModelKind::Bigan);
        assert_eq!((bigan.batch_size, bigan.arch.resolution, bigan.arch.z_dim, bigan.lr_disc), (16, 128, 100, Some(5e-6)));
        assert!(bigan.hinge_loss);
    }

    #[test]
    fn inconsistent_flags_are_rejected() {
        let mut c = TrainConfig::desk(ModelKind::Cae);
        c.hinge_loss = true;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::desk(ModelKind::Bigan);
        c.soft_label_delta = Some(0.01);
        assert!(c.validate().is_err());
        let mut c = TrainConfig::desk(ModelKind::Dcgan);
        c.lr_disc = None;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::desk(ModelKind::Vae);
        c.lr = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = TrainConfig::paper(ModelKind::AlphaGan);
        let back: TrainConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
