//! Declarative layer lists with shape propagation.
//!
//! Shapes are written `(h, w, c)` for feature maps and `(n,)` for vectors;
//! tensors are laid out NCHW at run time.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Spatial { h: usize, w: usize, c: usize },
    Flat(usize),
}

impl Shape {
    pub const fn spatial(h: usize, w: usize, c: usize) -> Self {
        Shape::Spatial { h, w, c }
    }

    pub fn len(&self) -> usize {
        match *self {
            Shape::Spatial { h, w, c } => h * w * c,
            Shape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-sample tensor dims: `[c, h, w]` or `[n]`.
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Spatial { h, w, c } => vec![c, h, w],
            Shape::Flat(n) => vec![n],
        }
    }

    pub fn channels(&self) -> usize {
        match *self {
            Shape::Spatial { c, .. } => c,
            Shape::Flat(n) => n,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Spatial { h, w, c } => write!(f, "({h}, {w}, {c})"),
            Shape::Flat(n) => write!(f, "({n},)"),
        }
    }
}

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Conv { kernel: usize, stride: usize, padding: usize, out_channels: usize, spectral_norm: bool },
    TransposedConv { kernel: usize, stride: usize, padding: usize, out_channels: usize },
    FullyConnected { out_features: usize, spectral_norm: bool },
    BatchNorm,
    Activation { function: Activation },
    MinibatchDiscrimination { kernels: usize, kernel_dim: usize },
    SelfAttention,
    Reshape { to: Shape },
    Upsample { factor: usize },
    Pool { factor: usize },
}

impl LayerKind {
    pub fn conv(kernel: usize, stride: usize, padding: usize, out_channels: usize) -> Self {
        LayerKind::Conv { kernel, stride, padding, out_channels, spectral_norm: false }
    }

    pub fn tconv(kernel: usize, stride: usize, padding: usize, out_channels: usize) -> Self {
        LayerKind::TransposedConv { kernel, stride, padding, out_channels }
    }

    pub fn act(function: Activation) -> Self {
        LayerKind::Activation { function }
    }

    /// Output shape for `input`, or an error when the layer cannot apply.
    pub fn propagate(&self, input: Shape) -> Result<Shape> {
        let bad = || Error::Shape(format!("{self:?} cannot follow {input}"));
        match (*self, input) {
            (LayerKind::Conv { kernel, stride, padding, out_channels, .. }, Shape::Spatial { h, w, .. }) => {
                if stride == 0 || h + 2 * padding < kernel || w + 2 * padding < kernel {
                    return Err(bad());
                }
                let out = |n: usize| (n + 2 * padding - kernel) / stride + 1;
                Ok(Shape::spatial(out(h), out(w), out_channels))
            }
            (LayerKind::TransposedConv { kernel, stride, padding, out_channels }, Shape::Spatial { h, w, .. }) => {
                if h == 0 || w == 0 || stride == 0 {
                    return Err(bad());
                }
                let out = |n: usize| ((n - 1) * stride + kernel).checked_sub(2 * padding).filter(|&v| v > 0);
                match (out(h), out(w)) {
                    (Some(oh), Some(ow)) => Ok(Shape::spatial(oh, ow, out_channels)),
                    _ => Err(bad()),
                }
            }
            (LayerKind::FullyConnected { out_features, .. }, Shape::Flat(_)) => Ok(Shape::Flat(out_features)),
            (LayerKind::BatchNorm | LayerKind::Activation { .. }, s) => Ok(s),
            (LayerKind::SelfAttention, s @ Shape::Spatial { .. }) => Ok(s),
            (LayerKind::MinibatchDiscrimination { kernels, .. }, Shape::Spatial { h, w, c }) => {
                Ok(Shape::spatial(h, w, c + kernels))
            }
            (LayerKind::MinibatchDiscrimination { kernels, .. }, Shape::Flat(n)) => Ok(Shape::Flat(n + kernels)),
            (LayerKind::Reshape { to }, s) if to.len() == s.len() => Ok(to),
            (LayerKind::Upsample { factor }, Shape::Spatial { h, w, c }) if factor > 0 => {
                Ok(Shape::spatial(h * factor, w * factor, c))
            }
            (LayerKind::Pool { factor }, Shape::Spatial { h, w, c }) if factor > 0 && h % factor == 0 && w % factor == 0 => {
                Ok(Shape::spatial(h / factor, w / factor, c))
            }
            _ => Err(bad()),
        }
    }

    fn table_label(&self) -> Option<String> {
        match self {
            LayerKind::Conv { kernel, .. } | LayerKind::TransposedConv { kernel, .. } => {
                Some(format!("({kernel}, {kernel})"))
            }
            LayerKind::FullyConnected { .. } => Some("FC".into()),
            LayerKind::MinibatchDiscrimination { .. } => Some("minibatch discrimination".into()),
            LayerKind::Reshape { .. } => Some("reshape".into()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(flatten)]
    pub kind: LayerKind,
    pub output: Shape,
}

/// One printed table row: kernel label (with `†` when followed by
/// self-attention) and output shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub layer: String,
    pub output: Shape,
}

impl fmt::Display for TableRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.layer, self.output)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubNetwork {
    pub name: String,
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
}

impl SubNetwork {
    pub fn output(&self) -> Shape {
        self.layers.last().map_or(self.input, |l| l.output)
    }

    /// Re-runs shape propagation and compares against the stored outputs.
    pub fn validate(&self) -> Result<()> {
        let mut shape = self.input;
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer.kind.propagate(shape)?;
            if shape != layer.output {
                return Err(Error::Shape(format!(
                    "{}: layer {i} propagates to {shape}, listed as {}",
                    self.name, layer.output
                )));
            }
        }
        Ok(())
    }

    pub fn table_rows(&self) -> Vec<TableRow> {
        let mut rows: Vec<TableRow> = Vec::new();
        for layer in &self.layers {
            if let Some(label) = layer.kind.table_label() {
                rows.push(TableRow { layer: label, output: layer.output });
            } else if layer.kind == LayerKind::SelfAttention {
                if let Some(last) = rows.last_mut() {
                    last.layer.push('†');
                }
            }
        }
        rows
    }
}

/// Builds a sub-network one layer at a time, propagating shapes as it goes.
pub(crate) struct NetBuilder {
    net: SubNetwork,
}

impl NetBuilder {
    pub(crate) fn new(name: &str, input: Shape) -> Self {
        Self { net: SubNetwork { name: name.into(), input, layers: Vec::new() } }
    }

    pub(crate) fn push(&mut self, kind: LayerKind) -> Result<&mut Self> {
        let output = kind.propagate(self.net.output())?;
        self.net.layers.push(LayerSpec { kind, output });
        Ok(self)
    }

    pub(crate) fn shape(&self) -> Shape {
        self.net.output()
    }

    pub(crate) fn finish(self) -> SubNetwork {
        self.net
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "cae")]
    Cae,
    #[serde(rename = "vae")]
    Vae,
    #[serde(rename = "dcgan")]
    Dcgan,
    #[serde(rename = "bigan")]
    Bigan,
    #[serde(rename = "alphagan")]
    AlphaGan,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Cae, ModelKind::Vae, ModelKind::Dcgan, ModelKind::Bigan, ModelKind::AlphaGan];

    /// Name used in reports.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cae => "CAE",
            ModelKind::Vae => "VAE",
            ModelKind::Dcgan => "DCGAN",
            ModelKind::Bigan => "BiGAN",
            ModelKind::AlphaGan => "αGAN",
        }
    }

    /// Lowercase ASCII name used in file names and configs.
    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::Cae => "cae",
            ModelKind::Vae => "vae",
            ModelKind::Dcgan => "dcgan",
            ModelKind::Bigan => "bigan",
            ModelKind::AlphaGan => "alphagan",
        }
    }

    pub fn is_gan(self) -> bool {
        matches!(self, ModelKind::Dcgan | ModelKind::Bigan | ModelKind::AlphaGan)
    }

    pub fn has_encoder(self) -> bool {
        self != ModelKind::Dcgan
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        Ok(match key.as_str() {
            "cae" => ModelKind::Cae,
            "vae" => ModelKind::Vae,
            "dcgan" => ModelKind::Dcgan,
            "bigan" => ModelKind::Bigan,
            "alphagan" | "αgan" | "agan" => ModelKind::AlphaGan,
            _ => return Err(Error::UnknownModel(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinibatchConfig {
    pub kernels: usize,
    pub kernel_dim: usize,
}

/// Width and depth knobs from which every architecture is derived.
///
/// `base_channels` is the first encoder (or discriminator) width,
/// `top_channels` the generator width at 4×4. `depth` counts stride-2
/// stages for the CAE and encoder convolutions for the VAE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub kind: ModelKind,
    pub resolution: usize,
    pub base_channels: usize,
    pub top_channels: usize,
    pub depth: usize,
    pub z_dim: usize,
    pub batch_norm: bool,
    pub spectral_norm: bool,
    pub minibatch: Option<MinibatchConfig>,
    pub attention: bool,
}

impl ArchConfig {
    /// Full-size configuration matching the published layer tables.
    pub fn paper(kind: ModelKind) -> Self {
        let base = ArchConfig {
            kind,
            resolution: 512,
            base_channels: 16,
            top_channels: 0,
            depth: 5,
            z_dim: 0,
            batch_norm: true,
            spectral_norm: false,
            minibatch: None,
            attention: false,
        };
        match kind {
            ModelKind::Cae => base,
            ModelKind::Vae => ArchConfig { base_channels: 8, depth: 7, z_dim: 1024, ..base },
            ModelKind::Dcgan => ArchConfig {
                base_channels: 4,
                top_channels: 1024,
                z_dim: 2048,
                batch_norm: false,
                spectral_norm: true,
                minibatch: Some(MinibatchConfig { kernels: 16, kernel_dim: 8 }),
                ..base
            },
            ModelKind::Bigan => ArchConfig {
                resolution: 128,
                base_channels: 64,
                top_channels: 1024,
                z_dim: 100,
                attention: true,
                ..base
            },
            ModelKind::AlphaGan => ArchConfig {
                kind,
                minibatch: Some(MinibatchConfig { kernels: 4, kernel_dim: 8 }),
                ..ArchConfig::paper(ModelKind::Bigan)
            },
        }
    }

    /// Small 64×64 configuration that trains on a CPU in minutes.
    pub fn desk(kind: ModelKind) -> Self {
        let paper = ArchConfig::paper(kind);
        let small = ArchConfig { resolution: 64, ..paper };
        match kind {
            ModelKind::Cae => ArchConfig { base_channels: 8, depth: 4, ..small },
            ModelKind::Vae => ArchConfig { base_channels: 8, depth: 4, z_dim: 64, ..small },
            ModelKind::Dcgan => ArchConfig { base_channels: 8, top_channels: 256, z_dim: 64, ..small },
            ModelKind::Bigan | ModelKind::AlphaGan => {
                ArchConfig { base_channels: 32, top_channels: 256, z_dim: 32, ..small }
            }
        }
    }

    pub fn build(&self) -> Result<ArchitectureSpec> {
        if self.resolution == 0 || self.base_channels == 0 {
            return Err(Error::Config("resolution and widths must be positive".into()));
        }
        let subnets = match self.kind {
            ModelKind::Cae => cae(self)?,
            ModelKind::Vae => vae(self)?,
            ModelKind::Dcgan => dcgan(self)?,
            ModelKind::Bigan => bigan(self)?,
            ModelKind::AlphaGan => alphagan(self)?,
        };
        let spec = ArchitectureSpec { kind: self.kind, resolution: self.resolution, z_dim: self.z_dim, subnets };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub kind: ModelKind,
    pub resolution: usize,
    pub z_dim: usize,
    pub subnets: Vec<SubNetwork>,
}

impl ArchitectureSpec {
    pub fn get(&self, name: &str) -> Result<&SubNetwork> {
        self.subnets
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Shape(format!("{} has no sub-network {name}", self.kind)))
    }

    pub fn validate(&self) -> Result<()> {
        self.subnets.iter().try_for_each(SubNetwork::validate)
    }
}

/// Paper-width architecture for a model name at the given resolution.
pub fn build_architecture(name: &str, resolution: usize) -> Result<ArchitectureSpec> {
    let kind: ModelKind = name.parse()?;
    ArchConfig { resolution, ..ArchConfig::paper(kind) }.build()
}

fn doublings(from: usize, to: usize) -> Result<usize> {
    let mut n = 0;
    let mut s = from;
    while s < to {
        s *= 2;
        n += 1;
    }
    if s != to {
        return Err(Error::Config(format!("resolution {to} is not {from}·2^k")));
    }
    Ok(n)
}

fn norm_act(b: &mut NetBuilder, cfg: &ArchConfig, act: Activation) -> Result<()> {
    if cfg.batch_norm {
        b.push(LayerKind::BatchNorm)?;
    }
    b.push(LayerKind::act(act))?;
    Ok(())
}

fn cae(cfg: &ArchConfig) -> Result<Vec<SubNetwork>> {
    let r = cfg.resolution;
    if cfg.depth == 0 || r % (1 << cfg.depth) != 0 {
        return Err(Error::Config(format!("CAE resolution {r} not divisible by 2^{}", cfg.depth)));
    }
    let width = |i: usize| cfg.base_channels << i;
    let mut enc = NetBuilder::new("encoder", Shape::spatial(r, r, 1));
    enc.push(LayerKind::conv(3, 1, 1, width(0)))?;
    norm_act(&mut enc, cfg, Activation::LeakyRelu)?;
    for i in 1..=cfg.depth {
        enc.push(LayerKind::conv(4, 2, 1, width(i)))?;
        norm_act(&mut enc, cfg, Activation::LeakyRelu)?;
        if i < cfg.depth {
            enc.push(LayerKind::conv(3, 1, 1, width(i)))?;
            norm_act(&mut enc, cfg, Activation::LeakyRelu)?;
        }
    }
    let mut dec = NetBuilder::new("decoder", enc.shape());
    for i in (0..cfg.depth).rev() {
        dec.push(LayerKind::tconv(4, 2, 1, width(i)))?;
        norm_act(&mut dec, cfg, Activation::Relu)?;
    }
    dec.push(LayerKind::conv(3, 1, 1, 1))?;
    dec.push(LayerKind::act(Activation::Sigmoid))?;
    Ok(vec![enc.finish(), dec.finish()])
}

fn vae(cfg: &ArchConfig) -> Result<Vec<SubNetwork>> {
    let r = cfg.resolution;
    if cfg.depth < 2 || cfg.z_dim == 0 {
        return Err(Error::Config("VAE needs depth >= 2 and z_dim > 0".into()));
    }
    let width = |i: usize| cfg.base_channels << i;
    let mut enc = NetBuilder::new("encoder", Shape::spatial(r, r, 1));
    for i in 0..cfg.depth {
        enc.push(LayerKind::conv(4, 2, 0, width(i)))?;
        norm_act(&mut enc, cfg, Activation::LeakyRelu)?;
    }
    let code = enc.shape();
    enc.push(LayerKind::Reshape { to: Shape::Flat(code.len()) })?;
    let flat = enc.shape();

    let head = |name: &str| -> Result<SubNetwork> {
        let mut h = NetBuilder::new(name, flat);
        h.push(LayerKind::FullyConnected { out_features: cfg.z_dim, spectral_norm: false })?;
        Ok(h.finish())
    };

    let mut dec = NetBuilder::new("decoder", Shape::Flat(cfg.z_dim));
    dec.push(LayerKind::FullyConnected { out_features: code.len(), spectral_norm: false })?;
    dec.push(LayerKind::act(Activation::Relu))?;
    dec.push(LayerKind::Reshape { to: code })?;
    for i in (0..cfg.depth - 1).rev() {
        dec.push(LayerKind::tconv(4, 2, 0, width(i)))?;
        norm_act(&mut dec, cfg, Activation::Relu)?;
    }
    let t = match dec.shape() {
        Shape::Spatial { h, .. } => h,
        Shape::Flat(_) => unreachable!("decoder ends spatial"),
    };
    let kernel = r
        .checked_sub(2 * (t - 1))
        .filter(|&k| k >= 2)
        .ok_or_else(|| Error::Config(format!("VAE decoder cannot reach {r} from {t}")))?;
    dec.push(LayerKind::tconv(kernel, 2, 0, 1))?;
    dec.push(LayerKind::act(Activation::Sigmoid))?;
    Ok(vec![enc.finish(), head("mu")?, head("sigma")?, dec.finish()])
}

/// Upsampling stack from a `(1, 1, z)` code to a one-channel image.
fn generator(cfg: &ArchConfig, batch_norm: bool) -> Result<SubNetwork> {
    let ups = doublings(4, cfg.resolution)?;
    let mut g = NetBuilder::new("generator", Shape::spatial(1, 1, cfg.z_dim));
    let bn = ArchConfig { batch_norm, ..*cfg };
    g.push(LayerKind::tconv(4, 1, 0, cfg.top_channels))?;
    norm_act(&mut g, &bn, Activation::Relu)?;
    for i in 1..=ups {
        let last = i == ups;
        let c = if last { 1 } else { cfg.top_channels >> i };
        if c == 0 {
            return Err(Error::Config("generator width underflows".into()));
        }
        g.push(LayerKind::tconv(4, 2, 1, c))?;
        if last {
            g.push(LayerKind::act(Activation::Sigmoid))?;
        } else {
            norm_act(&mut g, &bn, Activation::Relu)?;
            if cfg.attention && i + 2 >= ups {
                g.push(LayerKind::SelfAttention)?;
            }
        }
    }
    Ok(g.finish())
}

/// Stride-2 stack from the image down to 4×4; attention on the last two
/// stages when enabled.
fn downsampler(name: &str, cfg: &ArchConfig, batch_norm: bool) -> Result<NetBuilder> {
    let downs = doublings(4, cfg.resolution)?;
    let mut b = NetBuilder::new(name, Shape::spatial(cfg.resolution, cfg.resolution, 1));
    let bn = ArchConfig { batch_norm, ..*cfg };
    for i in 0..downs {
        b.push(LayerKind::Conv {
            kernel: 4,
            stride: 2,
            padding: 1,
            out_channels: cfg.base_channels << i,
            spectral_norm: cfg.spectral_norm,
        })?;
        norm_act(&mut b, &bn, Activation::LeakyRelu)?;
        if cfg.attention && i + 2 >= downs {
            b.push(LayerKind::SelfAttention)?;
        }
    }
    Ok(b)
}

fn dcgan(cfg: &ArchConfig) -> Result<Vec<SubNetwork>> {
    let g = generator(cfg, cfg.batch_norm)?;
    let mut d = downsampler("discriminator", cfg, false)?;
    let c = d.shape().channels();
    d.push(LayerKind::Conv { kernel: 4, stride: 1, padding: 0, out_channels: 2 * c, spectral_norm: cfg.spectral_norm })?;
    d.push(LayerKind::act(Activation::LeakyRelu))?;
    if let Some(mb) = cfg.minibatch {
        d.push(LayerKind::MinibatchDiscrimination { kernels: mb.kernels, kernel_dim: mb.kernel_dim })?;
    }
    d.push(LayerKind::Reshape { to: Shape::Flat(d.shape().len()) })?;
    d.push(LayerKind::FullyConnected { out_features: 1, spectral_norm: cfg.spectral_norm })?;
    Ok(vec![g, d.finish()])
}

fn encoder(cfg: &ArchConfig) -> Result<SubNetwork> {
    let mut e = downsampler("encoder", cfg, cfg.batch_norm)?;
    e.push(LayerKind::conv(4, 1, 0, 2 * cfg.z_dim))?;
    Ok(e.finish())
}

fn pointwise(b: &mut NetBuilder, widths: &[usize]) -> Result<()> {
    for (i, &c) in widths.iter().enumerate() {
        b.push(LayerKind::conv(1, 1, 0, c))?;
        if i + 1 < widths.len() {
            b.push(LayerKind::act(Activation::LeakyRelu))?;
        }
    }
    Ok(())
}

fn bigan(cfg: &ArchConfig) -> Result<Vec<SubNetwork>> {
    let g = generator(cfg, cfg.batch_norm)?;
    let e = encoder(cfg)?;
    let mut img = downsampler("disc_image", cfg, false)?;
    let c = img.shape().channels();
    img.push(LayerKind::conv(4, 1, 0, c))?;
    img.push(LayerKind::act(Activation::LeakyRelu))?;

    let mut code = NetBuilder::new("disc_code", Shape::spatial(1, 1, cfg.z_dim));
    pointwise(&mut code, &[c / 2, c / 2])?;
    code.push(LayerKind::act(Activation::LeakyRelu))?;

    let mut joint = NetBuilder::new("disc_joint", Shape::spatial(1, 1, c + c / 2));
    pointwise(&mut joint, &[c, c, 1])?;
    Ok(vec![g, e, img.finish(), code.finish(), joint.finish()])
}

fn alphagan(cfg: &ArchConfig) -> Result<Vec<SubNetwork>> {
    let g = generator(cfg, cfg.batch_norm)?;
    let e = encoder(cfg)?;
    let mut d = downsampler("discriminator", cfg, false)?;
    if let Some(mb) = cfg.minibatch {
        d.push(LayerKind::MinibatchDiscrimination { kernels: mb.kernels, kernel_dim: mb.kernel_dim })?;
    }
    d.push(LayerKind::conv(4, 1, 0, 1))?;

    let z = cfg.z_dim;
    let mut cd = NetBuilder::new("code_discriminator", Shape::spatial(1, 1, z));
    pointwise(&mut cd, &[z, (z / 2).max(1), (z / 4).max(1), 1])?;
    Ok(vec![g, e, d.finish(), cd.finish()])
}
