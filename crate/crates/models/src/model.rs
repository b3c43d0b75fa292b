//! A built network: parameters plus the forward passes each model family
//! needs for training and scoring.

use candle_core::{DType, Device, Tensor};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::arch::{ArchitectureSpec, ModelKind};
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::{ParamStore, Sequential};

/// Log-variances are clamped to this range before exponentiation.
const LOGVAR_CLAMP: f64 = 10.0;

/// Gaussian code of an encoder: mean and standard deviation, both `(n, z)`.
#[derive(Debug, Clone)]
pub struct LatentCode {
    pub mu: Tensor,
    pub sigma: Tensor,
}

impl LatentCode {
    fn from_logvar(mu: Tensor, logvar: &Tensor) -> Result<Self> {
        let sigma = (logvar.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP)? * 0.5)?.exp()?;
        Ok(Self { mu, sigma })
    }

    /// `z = σ·ε + μ`.
    pub fn sample(&self, eps: &Tensor) -> Result<Tensor> {
        crate::losses::reparameterize(&self.mu, &self.sigma, eps)
    }
}

pub struct Model {
    pub arch: ArchitectureSpec,
    pub config: TrainConfig,
    store: ParamStore,
    nets: Vec<Sequential>,
}

impl Model {
    /// Fresh parameters, initialised from `config.seed`.
    pub fn new(config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let arch = config.arch.build()?;
        let mut store = ParamStore::new(config.seed, config.init_std);
        let nets = arch.subnets.iter().map(|s| Sequential::new(s, &mut store)).collect::<Result<_>>()?;
        Ok(Self { arch, config: config.clone(), store, nets })
    }

    pub fn kind(&self) -> ModelKind {
        self.arch.kind
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn device(&self) -> &Device {
        self.store.device()
    }

    pub fn resolution(&self) -> usize {
        self.arch.resolution
    }

    fn net(&self, name: &str) -> Result<&Sequential> {
        self.nets
            .iter()
            .find(|n| n.spec.name == name)
            .ok_or_else(|| Error::Shape(format!("{} has no sub-network {name}", self.kind())))
    }

    /// `(n, 1, h, w)` batch from images.
    pub fn batch_tensor(&self, images: &[&Array2<f32>]) -> Result<Tensor> {
        let r = self.resolution();
        let mut data = Vec::with_capacity(images.len() * r * r);
        for img in images {
            if img.dim() != (r, r) {
                return Err(Error::Shape(format!("image {:?}, model expects ({r}, {r})", img.dim())));
            }
            data.extend(img.iter().copied());
        }
        Ok(Tensor::from_vec(data, (images.len(), 1, r, r), self.device())?.to_dtype(self.store.dtype())?)
    }

    /// Standard normal `(n, z)` tensor.
    pub fn noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Tensor> {
        let z = self.arch.z_dim;
        let values: Vec<f32> = (0..n * z).map(|_| StandardNormal.sample(rng)).collect();
        Ok(Tensor::from_vec(values, (n, z), self.device())?.to_dtype(self.store.dtype())?)
    }

    pub fn encode(&self, x: &Tensor, train: bool) -> Result<LatentCode> {
        match self.kind() {
            ModelKind::Vae => {
                let h = self.net("encoder")?.forward(x, train)?;
                let mu = self.net("mu")?.forward(&h, train)?;
                let logvar = self.net("sigma")?.forward(&h, train)?;
                LatentCode::from_logvar(mu, &logvar)
            }
            ModelKind::Bigan | ModelKind::AlphaGan => {
                let z = self.arch.z_dim;
                let h = self.net("encoder")?.forward(x, train)?.flatten_from(1)?;
                LatentCode::from_logvar(h.narrow(1, 0, z)?, &h.narrow(1, z, z)?)
            }
            kind => Err(Error::Config(format!("{kind} has no probabilistic encoder"))),
        }
    }

    /// Maps codes `(n, z)` to images `(n, 1, r, r)`.
    pub fn decode(&self, z: &Tensor, train: bool) -> Result<Tensor> {
        match self.kind() {
            ModelKind::Vae => self.net("decoder")?.forward(z, train),
            ModelKind::Cae => Err(Error::Config("CAE decodes its own feature maps".into())),
            _ => {
                let (n, d) = z.dims2()?;
                self.net("generator")?.forward(&z.reshape((n, d, 1, 1))?, train)
            }
        }
    }

    /// Deterministic reconstruction, using the code mean where there is one.
    pub fn reconstruct(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        match self.kind() {
            ModelKind::Cae => {
                let h = self.net("encoder")?.forward(x, train)?;
                self.net("decoder")?.forward(&h, train)
            }
            ModelKind::Dcgan => Err(Error::Config("DCGAN has no encoder".into())),
            _ => {
                let code = self.encode(x, train)?;
                self.decode(&code.mu, train)
            }
        }
    }

    /// Image discriminator logits `(n,)`. BiGAN scores the pair `(x, z)`.
    pub fn discriminate(&self, x: &Tensor, z: Option<&Tensor>, train: bool) -> Result<Tensor> {
        let logits = match self.kind() {
            ModelKind::Dcgan | ModelKind::AlphaGan => self.net("discriminator")?.forward(x, train)?,
            ModelKind::Bigan => {
                let z = z.ok_or_else(|| Error::Config("BiGAN discriminator needs a code".into()))?;
                let (n, d) = z.dims2()?;
                let fx = self.net("disc_image")?.forward(x, train)?;
                let fz = self.net("disc_code")?.forward(&z.reshape((n, d, 1, 1))?, train)?;
                self.net("disc_joint")?.forward(&Tensor::cat(&[&fx, &fz], 1)?, train)?
            }
            kind => return Err(Error::Config(format!("{kind} has no discriminator"))),
        };
        Ok(logits.flatten_all()?)
    }

    /// Code discriminator logits `(n,)`; αGAN only.
    pub fn code_discriminate(&self, z: &Tensor, train: bool) -> Result<Tensor> {
        if self.kind() != ModelKind::AlphaGan {
            return Err(Error::Config(format!("{} has no code discriminator", self.kind())));
        }
        let (n, d) = z.dims2()?;
        Ok(self.net("code_discriminator")?.forward(&z.reshape((n, d, 1, 1))?, train)?.flatten_all()?)
    }

    /// Sub-network names grouped by optimizer: `(group, names, uses lr_disc)`.
    pub(crate) fn optimizer_groups(&self) -> Vec<(&'static str, Vec<&'static str>, bool)> {
        match self.kind() {
            ModelKind::Cae => vec![("autoencoder", vec!["encoder", "decoder"], false)],
            ModelKind::Vae => vec![("autoencoder", vec!["encoder", "mu", "sigma", "decoder"], false)],
            ModelKind::Dcgan => {
                vec![("generator", vec!["generator"], false), ("discriminator", vec!["discriminator"], true)]
            }
            ModelKind::Bigan => vec![
                ("generator", vec!["generator", "encoder"], false),
                ("discriminator", vec!["disc_image", "disc_code", "disc_joint"], true),
            ],
            ModelKind::AlphaGan => vec![
                ("generator", vec!["generator", "encoder"], false),
                ("discriminator", vec!["discriminator", "code_discriminator"], true),
            ],
        }
    }

    pub(crate) fn dtype(&self) -> DType {
        self.store.dtype()
    }
}

/// `(n, 1, h, w)` tensor back to `n` images.
pub fn tensor_to_images(t: &Tensor) -> Result<Vec<Array2<f32>>> {
    let (n, c, h, w) = t.dims4()?;
    if c != 1 {
        return Err(Error::Shape(format!("expected one channel, got {c}")));
    }
    let flat = t.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
    Ok((0..n)
        .map(|i| Array2::from_shape_vec((h, w), flat[i * h * w..(i + 1) * h * w].to_vec()).expect("sized"))
        .collect())
}
