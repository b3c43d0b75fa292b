//! Training loops for all model families.

use std::path::Path;

use candle_core::Tensor;
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use xad_core::preprocess::{online_pipeline, stream_rng, AugmentationPolicy, OfflineRecord, OnlineOptions};

use crate::arch::ModelKind;
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::losses::{bce_with_logits, hinge_adversarial_loss, kld_diag_gaussian, masked_reconstruction_loss, reconstruction_loss, soften_labels};
use crate::model::Model;

/// Stream indices reserved for shuffling and noise; image loads use their index.
const SHUFFLE_STREAM: u64 = u64::MAX;
const NOISE_STREAM: u64 = u64::MAX - 1;

/// Per-epoch means of each loss component.
#[derive(Debug, Clone, PartialEq)]
pub struct LossHistory {
    pub components: Vec<String>,
    pub epochs: Vec<Vec<f64>>,
}

impl LossHistory {
    pub fn new(components: &[&str]) -> Self {
        Self { components: components.iter().map(|s| s.to_string()).collect(), epochs: Vec::new() }
    }

    /// Values of one component across epochs.
    pub fn series(&self, component: &str) -> Option<Vec<f64>> {
        let i = self.components.iter().position(|c| c == component)?;
        Some(self.epochs.iter().map(|e| e[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["epoch".to_string()];
        header.extend(self.components.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.epochs.iter().enumerate() {
            let mut rec = vec![(i + 1).to_string()];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let components = r.headers()?.iter().skip(1).map(String::from).collect();
        let mut epochs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>().map_err(|e| Error::Checkpoint(format!("bad loss value {v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            epochs.push(row);
        }
        Ok(Self { components, epochs })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

pub struct TrainOutput {
    pub model: Model,
    pub history: LossHistory,
}

/// Online options used while training: the config's resolution,
/// equalization flag and augmentation policy.
pub fn training_options(config: &TrainConfig) -> OnlineOptions {
    let r = config.resolution();
    OnlineOptions {
        target: (r, r),
        equalize: config.equalize,
        equalize_masked: false,
        policy: AugmentationPolicy::named(config.policy),
    }
}

fn components(kind: ModelKind) -> &'static [&'static str] {
    match kind {
        ModelKind::Cae => &["recon"],
        ModelKind::Vae => &["total", "recon", "kld"],
        ModelKind::Dcgan | ModelKind::Bigan => &["disc", "gen"],
        ModelKind::AlphaGan => &["disc", "code_disc", "gen", "recon"],
    }
}

struct Trainer<'a> {
    model: &'a Model,
    config: &'a TrainConfig,
    optimizers: Vec<AdamW>,
}

impl Trainer<'_> {
    fn step(&mut self, group: usize, loss: &Tensor) -> Result<()> {
        let grads = loss.backward()?;
        self.optimizers[group].step(&grads)?;
        Ok(())
    }

    fn recon(&self, x: &Tensor, x_hat: &Tensor, m: &Tensor) -> Result<Tensor> {
        if self.config.masked_loss {
            masked_reconstruction_loss(x, x_hat, m, !self.config.unsquared_masked_loss)
        } else {
            reconstruction_loss(x, x_hat)
        }
    }

    fn adversarial(&self, real: &Tensor, fake: &Tensor) -> Result<(Tensor, Tensor)> {
        if self.config.hinge_loss {
            return hinge_adversarial_loss(real, fake);
        }
        let ones = real.ones_like()?;
        let zeros = fake.zeros_like()?;
        let d = (bce_with_logits(real, &ones)? + bce_with_logits(fake, &zeros)?)?;
        let g = bce_with_logits(fake, &fake.ones_like()?)?;
        Ok((d, g))
    }

    fn scalar(t: &Tensor) -> Result<f64> {
        Ok(t.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?)
    }

    /// One update on a batch; returns the loss components.
    fn batch<R: Rng>(&mut self, x: &Tensor, m: &Tensor, rng: &mut R) -> Result<Vec<f64>> {
        let model = self.model;
        let n = x.dim(0)?;
        match model.kind() {
            ModelKind::Cae => {
                let loss = self.recon(x, &model.reconstruct(x, true)?, m)?;
                self.step(0, &loss)?;
                Ok(vec![Self::scalar(&loss)?])
            }
            ModelKind::Vae => {
                let code = model.encode(x, true)?;
                let z = code.sample(&model.noise(n, rng)?)?;
                let recon = self.recon(x, &model.decode(&z, true)?, m)?;
                let kld = kld_diag_gaussian(&code.mu, &code.sigma)?;
                // KLD is per sample while the reconstruction is per pixel.
                let pixels = (model.resolution() * model.resolution()) as f64;
                let total = (&recon + (&kld / pixels)?)?;
                self.step(0, &total)?;
                Ok(vec![Self::scalar(&total)?, Self::scalar(&recon)?, Self::scalar(&kld)?])
            }
            ModelKind::Dcgan => {
                let fake = model.decode(&model.noise(n, rng)?, true)?.detach();
                let (real_t, fake_t) = match self.config.soft_label_delta {
                    Some(delta) => {
                        let mut draw = |hard| (0..n).map(|_| soften_labels(hard, delta, rng)).collect::<Result<Vec<_>>>();
                        let (a, b) = (draw(true)?, draw(false)?);
                        (Tensor::new(a, model.device())?, Tensor::new(b, model.device())?)
                    }
                    None => (Tensor::ones(n, candle_core::DType::F64, model.device())?, Tensor::zeros(n, candle_core::DType::F64, model.device())?),
                };
                let dt = model.dtype();
                let real_logits = model.discriminate(x, None, true)?;
                let fake_logits = model.discriminate(&fake, None, true)?;
                let d_loss = (bce_with_logits(&real_logits, &real_t.to_dtype(dt)?)?
                    + bce_with_logits(&fake_logits, &fake_t.to_dtype(dt)?)?)?;
                self.step(1, &d_loss)?;

                let fake = model.decode(&model.noise(n, rng)?, true)?;
                let logits = model.discriminate(&fake, None, true)?;
                let g_loss = bce_with_logits(&logits, &logits.ones_like()?)?;
                self.step(0, &g_loss)?;
                Ok(vec![Self::scalar(&d_loss)?, Self::scalar(&g_loss)?])
            }
            ModelKind::Bigan => {
                let code = model.encode(x, true)?;
                let z_hat = code.sample(&model.noise(n, rng)?)?;
                let z = model.noise(n, rng)?;
                let fake = model.decode(&z, true)?;

                let real_logits = model.discriminate(x, Some(&z_hat.detach()), true)?;
                let fake_logits = model.discriminate(&fake.detach(), Some(&z), true)?;
                let (d_loss, _) = self.adversarial(&real_logits, &fake_logits)?;
                self.step(1, &d_loss)?;

                // Generator and encoder both try to swap the discriminator's verdicts.
                let real_logits = model.discriminate(x, Some(&z_hat), true)?;
                let fake_logits = model.discriminate(&fake, Some(&z), true)?;
                let ge_loss = if self.config.hinge_loss {
                    (real_logits.mean_all()? - fake_logits.mean_all()?)?
                } else {
                    (bce_with_logits(&fake_logits, &fake_logits.ones_like()?)?
                        + bce_with_logits(&real_logits, &real_logits.zeros_like()?)?)?
                };
                self.step(0, &ge_loss)?;
                Ok(vec![Self::scalar(&d_loss)?, Self::scalar(&ge_loss)?])
            }
            ModelKind::AlphaGan => {
                let code = model.encode(x, true)?;
                let z_hat = code.sample(&model.noise(n, rng)?)?;
                let z = model.noise(n, rng)?;
                let fake = model.decode(&z, true)?;
                let recon_img = model.decode(&z_hat, true)?;

                let real_logits = model.discriminate(x, None, true)?;
                let fake_logits = Tensor::cat(
                    &[&model.discriminate(&fake.detach(), None, true)?, &model.discriminate(&recon_img.detach(), None, true)?],
                    0,
                )?;
                let (d_loss, _) = self.adversarial(&real_logits, &fake_logits)?;
                let (c_loss, _) =
                    self.adversarial(&model.code_discriminate(&z, true)?, &model.code_discriminate(&z_hat.detach(), true)?)?;
                self.step(1, &(&d_loss + &c_loss)?)?;

                let fake_logits = Tensor::cat(
                    &[&model.discriminate(&fake, None, true)?, &model.discriminate(&recon_img, None, true)?],
                    0,
                )?;
                let (_, g_img) = self.adversarial(&real_logits.detach(), &fake_logits)?;
                let prior_logits = model.code_discriminate(&z, true)?.detach();
                let (_, g_code) = self.adversarial(&prior_logits, &model.code_discriminate(&z_hat, true)?)?;
                let recon = self.recon(x, &recon_img, m)?;
                let ge_loss = ((g_img + g_code)? + (&recon * self.config.recon_weight)?)?;
                self.step(0, &ge_loss)?;
                Ok(vec![Self::scalar(&d_loss)?, Self::scalar(&c_loss)?, Self::scalar(&ge_loss)?, Self::scalar(&recon)?])
            }
        }
    }
}

/// Trains a fresh model on `records` (negative images only).
pub fn train_model(records: &[OfflineRecord], config: &TrainConfig) -> Result<TrainOutput> {
    train_model_with(records, config, |_, _| {})
}

/// Like [`train_model`], calling `on_epoch(epoch, losses)` after every epoch.
pub fn train_model_with(
    records: &[OfflineRecord],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &[f64]),
) -> Result<TrainOutput> {
    if let Some(r) = records.iter().find(|r| r.meta.label.is_positive()) {
        return Err(Error::Leakage(r.meta.image_id.clone()));
    }
    if records.is_empty() {
        return Err(Error::NoData);
    }
    let model = Model::new(config)?;
    let options = training_options(config);
    let mut history = LossHistory::new(components(model.kind()));

    let optimizers = model
        .optimizer_groups()
        .into_iter()
        .map(|(_, nets, disc)| {
            let lr = if disc { config.lr_disc.expect("validated") } else { config.lr };
            let params = ParamsAdamW { lr, beta1: config.beta1, beta2: config.beta2, eps: 1e-8, weight_decay: 0.0 };
            AdamW::new(model.store().params_with_prefix(&nets), params)
        })
        .collect::<candle_core::Result<Vec<_>>>()?;
    let mut trainer = Trainer { model: &model, config, optimizers };

    for epoch in 0..config.epochs as u64 {
        let prepared = records
            .par_iter()
            .enumerate()
            .map(|(i, rec)| online_pipeline(rec, &options, &mut stream_rng(config.seed, epoch, i as u64)))
            .collect::<xad_core::Result<Vec<_>>>()?;
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        order.shuffle(&mut stream_rng(config.seed, epoch, SHUFFLE_STREAM));
        let mut noise = stream_rng(config.seed, epoch, NOISE_STREAM);

        let mut sums = vec![0.0; history.components.len()];
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            // A lone trailing sample would give degenerate batch statistics.
            if chunk.len() < 2 && order.len() >= 2 {
                continue;
            }
            let imgs: Vec<_> = chunk.iter().map(|&i| &prepared[i].pixels).collect();
            let masks: Vec<_> = chunk.iter().map(|&i| prepared[i].mask.to_f32()).collect();
            let x = model.batch_tensor(&imgs)?;
            let m = model.batch_tensor(&masks.iter().collect::<Vec<_>>())?;
            let losses = trainer.batch(&x, &m, &mut noise)?;
            for (s, l) in sums.iter_mut().zip(&losses) {
                *s += l * chunk.len() as f64;
            }
            seen += chunk.len();
        }
        let means: Vec<f64> = sums.iter().map(|s| s / seen.max(1) as f64).collect();
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("loss diverged in epoch {}", epoch + 1)));
        }
        log::info!("{} epoch {}: {:?}", model.kind(), epoch + 1, means);
        on_epoch(epoch as usize + 1, &means);
        history.epochs.push(means);
    }
    drop(trainer);
    recalibrate_batch_norm(&model, records, config)?;
    Ok(TrainOutput { model, history })
}

/// Re-estimates batch-norm statistics at the final weights from un-augmented
/// training images, so eval-mode passes match what the weights were trained on.
fn recalibrate_batch_norm(model: &Model, records: &[OfflineRecord], config: &TrainConfig) -> Result<()> {
    if !config.arch.batch_norm {
        return Ok(());
    }
    let r = config.resolution();
    let options = OnlineOptions::eval((r, r), config.equalize);
    let images = records
        .par_iter()
        .enumerate()
        .map(|(i, rec)| online_pipeline(rec, &options, &mut stream_rng(config.seed, u64::MAX, i as u64)))
        .collect::<xad_core::Result<Vec<_>>>()?;
    let mut noise = stream_rng(config.seed, u64::MAX, NOISE_STREAM);
    model.store().reset_batch_stats()?;
    for chunk in images.chunks(config.batch_size) {
        if chunk.len() < 2 && images.len() >= 2 {
            continue;
        }
        let x = model.batch_tensor(&chunk.iter().map(|p| &p.pixels).collect::<Vec<_>>())?;
        let n = chunk.len();
        match model.kind() {
            ModelKind::Cae => {
                model.reconstruct(&x, true)?;
            }
            ModelKind::Vae => {
                let code = model.encode(&x, true)?;
                model.decode(&code.mu, true)?;
            }
            ModelKind::Dcgan => {
                model.decode(&model.noise(n, &mut noise)?, true)?;
                model.discriminate(&x, None, true)?;
            }
            ModelKind::Bigan => {
                let code = model.encode(&x, true)?;
                model.decode(&code.mu, true)?;
                model.discriminate(&x, Some(&code.mu), true)?;
            }
            ModelKind::AlphaGan => {
                let code = model.encode(&x, true)?;
                model.decode(&code.mu, true)?;
                model.discriminate(&x, None, true)?;
                model.code_discriminate(&code.mu, true)?;
            }
        }
    }
    Ok(())
}
