//! Image-level scores and pixel heatmaps from trained models.

use ndarray::Array2;
use xad_core::preprocess::PreprocessedRecord;
use xad_core::scoring::{
    aggregate_mean, aggregate_topk, combine_code_and_disc, fake_probability, kld, pixel_heatmap, ErrorKind, Heatmap,
    ScoreMetric, ScoreRow, ScoreTable,
};

use crate::arch::ModelKind;
use crate::error::{Error, Result};
use crate::model::{tensor_to_images, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Images per forward pass. Models with minibatch discrimination see the
    /// same fixed batches in dataset order, so this is part of the result.
    pub batch_size: usize,
    /// Score discriminators by the "real" probability instead of "fake".
    pub flip_discriminator: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self { batch_size: 16, flip_discriminator: false }
    }
}

/// Metrics a model family can produce.
pub fn supports(kind: ModelKind, metric: ScoreMetric) -> bool {
    match metric {
        ScoreMetric::Mse | ScoreMetric::MseTopK(_) | ScoreMetric::L1 | ScoreMetric::L1TopK(_) => kind.has_encoder(),
        ScoreMetric::Kld | ScoreMetric::L1PlusKld | ScoreMetric::MsePlusKld => kind == ModelKind::Vae,
        ScoreMetric::DiscriminatorProb => kind.is_gan(),
        ScoreMetric::CodeDiscriminatorProb | ScoreMetric::CPlusD => kind == ModelKind::AlphaGan,
    }
}

pub fn check_metric(kind: ModelKind, metric: ScoreMetric) -> Result<()> {
    metric.validate()?;
    if !supports(kind, metric) {
        return Err(Error::IncompatibleMetric { metric: metric.to_string(), model: kind.to_string() });
    }
    Ok(())
}

/// Everything the metrics need for one image.
#[derive(Debug, Clone, Default)]
pub struct Inference {
    pub reconstruction: Option<Array2<f32>>,
    pub mu: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
    pub disc_logit: Option<f64>,
    pub code_logit: Option<f64>,
}

fn rows_f64(t: &candle_core::Tensor) -> Result<Vec<Vec<f64>>> {
    Ok(t.to_dtype(candle_core::DType::F64)?.to_vec2::<f64>()?)
}

fn vec_f64(t: &candle_core::Tensor) -> Result<Vec<f64>> {
    Ok(t.to_dtype(candle_core::DType::F64)?.to_vec1::<f64>()?)
}

/// Eval-mode forward passes for a batch of images.
pub fn infer(model: &Model, images: &[&Array2<f32>], metrics: &[ScoreMetric]) -> Result<Vec<Inference>> {
    let n = images.len();
    let mut out = vec![Inference::default(); n];
    if n == 0 {
        return Ok(out);
    }
    let x = model.batch_tensor(images)?;
    let kind = model.kind();
    let needs_recon = metrics.iter().any(|m| m.error_kind().is_some());
    let needs_disc = metrics.iter().any(|m| matches!(m, ScoreMetric::DiscriminatorProb | ScoreMetric::CPlusD));
    let needs_code = metrics.iter().any(|m| matches!(m, ScoreMetric::CodeDiscriminatorProb | ScoreMetric::CPlusD));

    let code = match kind {
        ModelKind::Vae | ModelKind::Bigan | ModelKind::AlphaGan => Some(model.encode(&x, false)?),
        _ => None,
    };
    if needs_recon {
        let x_hat = match (&code, kind) {
            (Some(c), _) => model.decode(&c.mu, false)?,
            (None, _) => model.reconstruct(&x, false)?,
        };
        for (o, img) in out.iter_mut().zip(tensor_to_images(&x_hat)?) {
            o.reconstruction = Some(img);
        }
    }
    if let Some(c) = &code {
        for ((o, mu), sigma) in out.iter_mut().zip(rows_f64(&c.mu)?).zip(rows_f64(&c.sigma)?) {
            o.mu = Some(mu);
            o.sigma = Some(sigma);
        }
    }
    if needs_disc {
        let mu = code.as_ref().map(|c| &c.mu);
        let logits = vec_f64(&model.discriminate(&x, mu, false)?)?;
        for (o, l) in out.iter_mut().zip(logits) {
            o.disc_logit = Some(l);
        }
    }
    if needs_code {
        let mu = &code.as_ref().expect("αGAN has an encoder").mu;
        let logits = vec_f64(&model.code_discriminate(mu, false)?)?;
        for (o, l) in out.iter_mut().zip(logits) {
            o.code_logit = Some(l);
        }
    }
    Ok(out)
}

fn missing(what: &str) -> Error {
    Error::Config(format!("inference lacks {what}"))
}

/// Score of one image from its inference outputs.
pub fn metric_score(
    inf: &Inference,
    record: &PreprocessedRecord,
    metric: ScoreMetric,
    flip_discriminator: bool,
) -> Result<f64> {
    let disc = |logit: Option<f64>, what| -> Result<f64> {
        let p = fake_probability(logit.ok_or_else(|| missing(what))?);
        Ok(if flip_discriminator { 1.0 - p } else { p })
    };
    let latent_kld = || -> Result<f64> {
        match (&inf.mu, &inf.sigma) {
            (Some(m), Some(s)) => Ok(kld(m, s)),
            _ => Err(missing("latent code")),
        }
    };
    let recon_term = |kind: ErrorKind, topk: Option<usize>| -> Result<f64> {
        let x_hat = inf.reconstruction.as_ref().ok_or_else(|| missing("reconstruction"))?;
        let h = pixel_heatmap(&record.pixels, x_hat, &record.mask, kind)?;
        Ok(match topk {
            Some(k) => aggregate_topk(&h, &record.mask, k)?,
            None => aggregate_mean(&h, &record.mask)?,
        })
    };
    let score = match metric {
        ScoreMetric::Mse | ScoreMetric::MseTopK(_) | ScoreMetric::L1 | ScoreMetric::L1TopK(_) => {
            recon_term(metric.error_kind().expect("reconstruction metric"), metric.topk())?
        }
        ScoreMetric::Kld => latent_kld()?,
        ScoreMetric::L1PlusKld => recon_term(ErrorKind::Absolute, None)? + latent_kld()?,
        ScoreMetric::MsePlusKld => recon_term(ErrorKind::Squared, None)? + latent_kld()?,
        ScoreMetric::DiscriminatorProb => disc(inf.disc_logit, "discriminator output")?,
        ScoreMetric::CodeDiscriminatorProb => disc(inf.code_logit, "code discriminator output")?,
        ScoreMetric::CPlusD => combine_code_and_disc(
            disc(inf.code_logit, "code discriminator output")?,
            disc(inf.disc_logit, "discriminator output")?,
        ),
    };
    if !score.is_finite() {
        return Err(Error::Core(xad_core::Error::NonFinite(record.meta.image_id.clone())));
    }
    Ok(score)
}

/// Scores a single image. Minibatch-discriminating models see a batch of one.
pub fn score_image(model: &Model, record: &PreprocessedRecord, metric: ScoreMetric) -> Result<f64> {
    check_metric(model.kind(), metric)?;
    let inf = infer(model, &[&record.pixels], &[metric])?.remove(0);
    metric_score(&inf, record, metric, false)
}

/// One row per (image, metric), in record order then metric order.
pub fn score_dataset(
    model: &Model,
    records: &[PreprocessedRecord],
    metrics: &[ScoreMetric],
    options: ScoreOptions,
) -> Result<ScoreTable> {
    for &m in metrics {
        check_metric(model.kind(), m)?;
    }
    let mut table = ScoreTable::default();
    for chunk in records.chunks(options.batch_size.max(1)) {
        let images: Vec<_> = chunk.iter().map(|r| &r.pixels).collect();
        let infs = infer(model, &images, metrics)?;
        for (rec, inf) in chunk.iter().zip(&infs) {
            for &metric in metrics {
                table.rows.push(ScoreRow {
                    image_id: rec.meta.image_id.clone(),
                    patient_id: rec.meta.patient_id.clone(),
                    label: rec.meta.label,
                    metric,
                    score: metric_score(inf, rec, metric, options.flip_discriminator)?,
                });
            }
        }
    }
    Ok(table)
}

/// Per-pixel reconstruction error of one image under its mask.
pub fn reconstruction_heatmap(model: &Model, record: &PreprocessedRecord, kind: ErrorKind) -> Result<Heatmap> {
    if !model.kind().has_encoder() {
        return Err(Error::IncompatibleMetric { metric: "heatmap".into(), model: model.kind().to_string() });
    }
    let x_hat = tensor_to_images(&model.reconstruct(&model.batch_tensor(&[&record.pixels])?, false)?)?.remove(0);
    Ok(pixel_heatmap(&record.pixels, &x_hat, &record.mask, kind)?)
}
