//! Layers on candle tensors, instantiated from [`SubNetwork`] specs.

use std::collections::HashMap;

use candle_core::{DType, Device, Tensor, Var, D};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::arch::{Activation, LayerKind, Shape, SubNetwork, LEAKY_SLOPE};
use crate::error::{Error, Result};

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;
const SN_EPS: f64 = 1e-12;

/// Named trainable parameters and non-trainable buffers, in creation order.
pub struct ParamStore {
    device: Device,
    dtype: DType,
    rng: ChaCha8Rng,
    init_std: f64,
    params: Vec<(String, Var)>,
    buffers: Vec<(String, Var)>,
}

impl ParamStore {
    pub fn new(seed: u64, init_std: f64) -> Self {
        Self::with_device(seed, init_std, Device::Cpu, DType::F32)
    }

    pub fn with_device(seed: u64, init_std: f64, device: Device, dtype: DType) -> Self {
        Self {
            device,
            dtype,
            rng: ChaCha8Rng::seed_from_u64(seed),
            init_std,
            params: Vec::new(),
            buffers: Vec::new(),
        }
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    fn normal(&mut self, name: String, dims: &[usize], std: f64) -> Result<Var> {
        let n: usize = dims.iter().product();
        let dist = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
        let values: Vec<f64> = (0..n).map(|_| dist.sample(&mut self.rng)).collect();
        let t = Tensor::from_vec(values, dims, &self.device)?.to_dtype(self.dtype)?;
        let v = Var::from_tensor(&t)?;
        self.params.push((name, v.clone()));
        Ok(v)
    }

    fn constant(&mut self, name: String, dims: &[usize], value: f64, trainable: bool) -> Result<Var> {
        let t = (Tensor::ones(dims, self.dtype, &self.device)? * value)?;
        let v = Var::from_tensor(&t)?;
        if trainable {
            self.params.push((name, v.clone()));
        } else {
            self.buffers.push((name, v.clone()));
        }
        Ok(v)
    }

    fn buffer_normal(&mut self, name: String, dims: &[usize]) -> Result<Var> {
        let v = self.normal(name, dims, 1.0)?;
        let entry = self.params.pop().expect("just pushed");
        self.buffers.push(entry);
        Ok(v)
    }

    /// Trainable parameters whose name starts with any of `prefixes`.
    pub fn params_with_prefix(&self, prefixes: &[&str]) -> Vec<Var> {
        self.params
            .iter()
            .filter(|(n, _)| prefixes.iter().any(|p| n.starts_with(&format!("{p}."))))
            .map(|(_, v)| v.clone())
            .collect()
    }

    pub fn all_params(&self) -> Vec<Var> {
        self.params.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(|(_, v)| v.elem_count()).sum()
    }

    /// Parameters followed by buffers.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        self.params.iter().chain(&self.buffers).map(|(n, v)| (n.clone(), v.as_detached_tensor())).collect()
    }

    /// Forgets batch-norm running statistics; the next training-mode
    /// batches are averaged in from scratch.
    pub fn reset_batch_stats(&self) -> Result<()> {
        for (name, var) in &self.buffers {
            let fill = if name.ends_with(".running_var") {
                1.0
            } else if name.ends_with(".running_mean") || name.ends_with(".updates") {
                0.0
            } else {
                continue;
            };
            var.set(&(var.as_tensor().ones_like()? * fill)?)?;
        }
        Ok(())
    }

    /// Overwrites every parameter and buffer from `values`; all names must be present.
    pub fn load(&self, values: &HashMap<String, Tensor>) -> Result<()> {
        for (name, var) in self.params.iter().chain(&self.buffers) {
            let t = values.get(name).ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            if t.dims() != var.dims() {
                return Err(Error::Checkpoint(format!("{name}: shape {:?}, expected {:?}", t.dims(), var.dims())));
            }
            var.set(&t.to_dtype(self.dtype)?.to_device(&self.device)?)?;
        }
        Ok(())
    }
}

pub fn leaky_relu(x: &Tensor) -> Result<Tensor> {
    Ok((x.relu()? - (x.neg()?.relu()? * LEAKY_SLOPE)?)?)
}

/// Logistic function written via tanh so the gradient stays finite for large inputs.
pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(((x * 0.5)?.tanh()? * 0.5)?.affine(1.0, 0.5)?)
}

fn l2_normalize(x: &Tensor) -> Result<Tensor> {
    let norm = x.sqr()?.sum_all()?.sqrt()?;
    Ok(x.broadcast_div(&(norm + SN_EPS)?)?)
}

/// Divides `weight` by an estimate of its largest singular value. In training
/// mode one power-iteration step refines the persistent vector `u` first.
fn spectral_weight(weight: &Tensor, u: &Var, train: bool) -> Result<Tensor> {
    let rows = weight.dim(0)?;
    let mat = weight.reshape((rows, ()))?;
    let fixed = mat.detach();
    let mut uu = u.as_detached_tensor().unsqueeze(1)?;
    let v = l2_normalize(&fixed.t()?.matmul(&uu)?)?;
    if train {
        uu = l2_normalize(&fixed.matmul(&v)?)?;
        u.set(&uu.squeeze(1)?)?;
    }
    let sigma = uu.t()?.matmul(&mat.matmul(&v)?)?.reshape(())?;
    let sigma = sigma.maximum(SN_EPS)?;
    Ok(weight.broadcast_div(&sigma)?)
}

struct Conv {
    weight: Var,
    bias: Var,
    stride: usize,
    padding: usize,
    sn: Option<Var>,
}

impl Conv {
    fn new(store: &mut ParamStore, name: &str, cin: usize, kind: LayerKind) -> Result<Self> {
        let LayerKind::Conv { kernel, stride, padding, out_channels, spectral_norm } = kind else {
            unreachable!("conv layer expected")
        };
        let std = store.init_std;
        let weight = store.normal(format!("{name}.weight"), &[out_channels, cin, kernel, kernel], std)?;
        let bias = store.constant(format!("{name}.bias"), &[out_channels], 0.0, true)?;
        let sn = spectral_norm.then(|| store.buffer_normal(format!("{name}.u"), &[out_channels])).transpose()?;
        Ok(Self { weight, bias, stride, padding, sn })
    }

    fn forward(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        let w = match &self.sn {
            Some(u) => spectral_weight(self.weight.as_tensor(), u, train)?,
            None => self.weight.as_tensor().clone(),
        };
        let y = x.conv2d(&w, self.padding, self.stride, 1, 1)?;
        Ok(y.broadcast_add(&self.bias.as_tensor().reshape((1, (), 1, 1))?)?)
    }
}

struct TransposedConv {
    weight: Var,
    bias: Var,
    stride: usize,
    padding: usize,
}

impl TransposedConv {
    fn new(store: &mut ParamStore, name: &str, cin: usize, kind: LayerKind) -> Result<Self> {
        let LayerKind::TransposedConv { kernel, stride, padding, out_channels } = kind else {
            unreachable!("transposed conv layer expected")
        };
        let std = store.init_std;
        let weight = store.normal(format!("{name}.weight"), &[cin, out_channels, kernel, kernel], std)?;
        let bias = store.constant(format!("{name}.bias"), &[out_channels], 0.0, true)?;
        Ok(Self { weight, bias, stride, padding })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv_transpose2d(self.weight.as_tensor(), self.padding, 0, self.stride, 1)?;
        Ok(y.broadcast_add(&self.bias.as_tensor().reshape((1, (), 1, 1))?)?)
    }
}

struct Linear {
    weight: Var,
    bias: Var,
    sn: Option<Var>,
}

impl Linear {
    fn new(store: &mut ParamStore, name: &str, fin: usize, fout: usize, spectral_norm: bool) -> Result<Self> {
        let std = store.init_std;
        let weight = store.normal(format!("{name}.weight"), &[fout, fin], std)?;
        let bias = store.constant(format!("{name}.bias"), &[fout], 0.0, true)?;
        let sn = spectral_norm.then(|| store.buffer_normal(format!("{name}.u"), &[fout])).transpose()?;
        Ok(Self { weight, bias, sn })
    }

    fn forward(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        let w = match &self.sn {
            Some(u) => spectral_weight(self.weight.as_tensor(), u, train)?,
            None => self.weight.as_tensor().clone(),
        };
        Ok(x.matmul(&w.t()?)?.broadcast_add(self.bias.as_tensor())?)
    }
}

struct BatchNorm {
    gamma: Var,
    beta: Var,
    running_mean: Var,
    running_var: Var,
    updates: Var,
}

impl BatchNorm {
    fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(Self {
            gamma: store.constant(format!("{name}.gamma"), &[channels], 1.0, true)?,
            beta: store.constant(format!("{name}.beta"), &[channels], 0.0, true)?,
            running_mean: store.constant(format!("{name}.running_mean"), &[channels], 0.0, false)?,
            running_var: store.constant(format!("{name}.running_var"), &[channels], 1.0, false)?,
            updates: store.constant(format!("{name}.updates"), &[1], 0.0, false)?,
        })
    }

    fn forward(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        let rank = x.rank();
        // Statistics per channel (dim 1) over every other dim.
        let bshape: Vec<usize> = (0..rank).map(|d| if d == 1 { x.dim(1).unwrap_or(1) } else { 1 }).collect();
        let (mean, var) = if train {
            let mut mean = x.clone();
            for d in (0..rank).filter(|&d| d != 1) {
                mean = mean.mean_keepdim(d)?;
            }
            let mut var = x.broadcast_sub(&mean)?.sqr()?;
            for d in (0..rank).filter(|&d| d != 1) {
                var = var.mean_keepdim(d)?;
            }
            let n = x.elem_count() / x.dim(1)?;
            let unbiased = if n > 1 { n as f64 / (n - 1) as f64 } else { 1.0 };
            let m = mean.detach().flatten_all()?;
            let v = (var.detach().flatten_all()? * unbiased)?;
            // Plain average over the first 1/momentum batches, exponential after.
            let t = self.updates.as_tensor().to_dtype(DType::F64)?.to_vec1::<f64>()?[0] + 1.0;
            let k = BN_MOMENTUM.max(1.0 / t);
            let rm = ((self.running_mean.as_tensor() * (1.0 - k))? + (m * k)?)?;
            let rv = ((self.running_var.as_tensor() * (1.0 - k))? + (v * k)?)?;
            self.running_mean.set(&rm)?;
            self.running_var.set(&rv)?;
            self.updates.set(&self.updates.as_tensor().affine(1.0, 1.0)?)?;
            (mean, var)
        } else {
            (
                self.running_mean.as_detached_tensor().reshape(bshape.as_slice())?,
                self.running_var.as_detached_tensor().reshape(bshape.as_slice())?,
            )
        };
        let xhat = x.broadcast_sub(&mean)?.broadcast_div(&(var + BN_EPS)?.sqrt()?)?;
        let g = self.gamma.as_tensor().reshape(bshape.as_slice())?;
        let b = self.beta.as_tensor().reshape(bshape.as_slice())?;
        Ok(xhat.broadcast_mul(&g)?.broadcast_add(&b)?)
    }
}

/// Non-local attention over spatial positions with a zero-initialised
/// residual gate.
struct SelfAttention {
    query: Conv,
    key: Conv,
    value: Conv,
    gamma: Var,
}

impl SelfAttention {
    fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        let inner = (channels / 8).max(1);
        Ok(Self {
            query: Conv::new(store, &format!("{name}.query"), channels, LayerKind::conv(1, 1, 0, inner))?,
            key: Conv::new(store, &format!("{name}.key"), channels, LayerKind::conv(1, 1, 0, inner))?,
            value: Conv::new(store, &format!("{name}.value"), channels, LayerKind::conv(1, 1, 0, channels))?,
            gamma: store.constant(format!("{name}.gamma"), &[1], 0.0, true)?,
        })
    }

    fn forward(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        let (n, c, h, w) = x.dims4()?;
        let q = self.query.forward(x, train)?.reshape((n, (), h * w))?;
        let k = self.key.forward(x, train)?.reshape((n, (), h * w))?;
        let v = self.value.forward(x, train)?.reshape((n, c, h * w))?;
        let energy = q.transpose(1, 2)?.contiguous()?.matmul(&k)?;
        let attn = candle_nn::ops::softmax(&energy, D::Minus1)?;
        let out = v.matmul(&attn.transpose(1, 2)?.contiguous()?)?.reshape((n, c, h, w))?;
        Ok((x + out.broadcast_mul(self.gamma.as_tensor())?)?)
    }
}

/// Similarity features of each sample to the rest of its group.
///
/// `x` is `(groups, n, f)`, `t` is `(f, b·c)`; returns `(groups, n, b)` with
/// `o[g, i, k] = Σ_{j≠i} exp(−‖M[g,i,k,:] − M[g,j,k,:]‖₁)`.
pub fn minibatch_similarity(x: &Tensor, t: &Tensor, kernels: usize, kernel_dim: usize) -> Result<Tensor> {
    let (g, n, f) = x.dims3()?;
    let m = x.reshape((g * n, f))?.matmul(t)?.reshape((g, n, kernels, kernel_dim))?;
    let diff = m.unsqueeze(2)?.broadcast_sub(&m.unsqueeze(1)?)?;
    let dist = diff.abs()?.sum(D::Minus1)?;
    let sim = dist.neg()?.exp()?.sum(2)?;
    Ok((sim - 1.0)?)
}

/// Appends `b` minibatch-similarity features to a `(n, f)` batch.
pub fn minibatch_discrimination(features: &Tensor, params: &Tensor) -> Result<Tensor> {
    let (f, b, c) = params.dims3()?;
    let (n, f2) = features.dims2()?;
    if f != f2 || n == 0 {
        return Err(Error::Shape(format!("features {:?} vs params {:?}", features.dims(), params.dims())));
    }
    let o = minibatch_similarity(&features.unsqueeze(0)?, &params.reshape((f, b * c))?, b, c)?.squeeze(0)?;
    Ok(Tensor::cat(&[features, &o], 1)?)
}

struct Minibatch {
    t: Var,
    kernels: usize,
    kernel_dim: usize,
}

impl Minibatch {
    fn new(store: &mut ParamStore, name: &str, features: usize, kernels: usize, kernel_dim: usize) -> Result<Self> {
        let std = store.init_std;
        let t = store.normal(format!("{name}.t"), &[features, kernels * kernel_dim], std)?;
        Ok(Self { t, kernels, kernel_dim })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let t = self.t.as_tensor();
        match x.rank() {
            2 => {
                let o = minibatch_similarity(&x.unsqueeze(0)?, t, self.kernels, self.kernel_dim)?.squeeze(0)?;
                Ok(Tensor::cat(&[x, &o], 1)?)
            }
            _ => {
                // Each spatial position compares against the same position in other samples.
                let (n, c, h, w) = x.dims4()?;
                let groups = x.permute((2, 3, 0, 1))?.contiguous()?.reshape((h * w, n, c))?;
                let o = minibatch_similarity(&groups, t, self.kernels, self.kernel_dim)?;
                let o = o.reshape((h, w, n, self.kernels))?.permute((2, 3, 0, 1))?.contiguous()?;
                Ok(Tensor::cat(&[x, &o], 1)?)
            }
        }
    }
}

enum Layer {
    Conv(Conv),
    TransposedConv(TransposedConv),
    Linear(Linear),
    BatchNorm(BatchNorm),
    Activation(Activation),
    Minibatch(Minibatch),
    Attention(SelfAttention),
    Reshape(Shape),
    Upsample(usize),
    Pool(usize),
}

/// A built sub-network.
pub struct Sequential {
    pub spec: SubNetwork,
    layers: Vec<Layer>,
}

impl Sequential {
    pub fn new(spec: &SubNetwork, store: &mut ParamStore) -> Result<Self> {
        spec.validate()?;
        let mut shape = spec.input;
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (i, l) in spec.layers.iter().enumerate() {
            let name = format!("{}.{i}", spec.name);
            let layer = match l.kind {
                k @ LayerKind::Conv { .. } => Layer::Conv(Conv::new(store, &name, shape.channels(), k)?),
                k @ LayerKind::TransposedConv { .. } => {
                    Layer::TransposedConv(TransposedConv::new(store, &name, shape.channels(), k)?)
                }
                LayerKind::FullyConnected { out_features, spectral_norm } => {
                    Layer::Linear(Linear::new(store, &name, shape.len(), out_features, spectral_norm)?)
                }
                LayerKind::BatchNorm => Layer::BatchNorm(BatchNorm::new(store, &name, shape.channels())?),
                LayerKind::Activation { function } => Layer::Activation(function),
                LayerKind::MinibatchDiscrimination { kernels, kernel_dim } => {
                    Layer::Minibatch(Minibatch::new(store, &name, shape.channels(), kernels, kernel_dim)?)
                }
                LayerKind::SelfAttention => Layer::Attention(SelfAttention::new(store, &name, shape.channels())?),
                LayerKind::Reshape { to } => Layer::Reshape(to),
                LayerKind::Upsample { factor } => Layer::Upsample(factor),
                LayerKind::Pool { factor } => Layer::Pool(factor),
            };
            layers.push(layer);
            shape = l.output;
        }
        Ok(Self { spec: spec.clone(), layers })
    }

    pub fn forward(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        let expected = self.spec.input.dims();
        if x.rank() != expected.len() + 1 || x.dims()[1..] != expected[..] {
            return Err(Error::Shape(format!("{} expects (n, {:?}), got {:?}", self.spec.name, expected, x.dims())));
        }
        let mut x = x.clone();
        for layer in &self.layers {
            x = match layer {
                Layer::Conv(l) => l.forward(&x, train)?,
                Layer::TransposedConv(l) => l.forward(&x)?,
                Layer::Linear(l) => l.forward(&x, train)?,
                Layer::BatchNorm(l) => l.forward(&x, train)?,
                Layer::Activation(Activation::Relu) => x.relu()?,
                Layer::Activation(Activation::LeakyRelu) => leaky_relu(&x)?,
                Layer::Activation(Activation::Sigmoid) => sigmoid(&x)?,
                Layer::Minibatch(l) => l.forward(&x)?,
                Layer::Attention(l) => l.forward(&x, train)?,
                Layer::Reshape(to) => {
                    let mut dims = vec![x.dim(0)?];
                    dims.extend(to.dims());
                    x.reshape(dims)?
                }
                Layer::Upsample(f) => {
                    let (_, _, h, w) = x.dims4()?;
                    x.upsample_nearest2d(h * f, w * f)?
                }
                Layer::Pool(f) => x.max_pool2d(*f)?,
            };
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ArchConfig, ModelKind};

    fn t(values: &[f64], dims: &[usize]) -> Tensor {
        Tensor::from_vec(values.to_vec(), dims, &Device::Cpu).unwrap()
    }

    #[test]
    fn minibatch_of_one_adds_zeros() {
        let x = t(&[0.3, -1.0, 2.0], &[1, 3]);
        let p = t(&(0..12).map(|i| i as f64 * 0.1).collect::<Vec<_>>(), &[3, 2, 2]);
        let y = minibatch_discrimination(&x, &p).unwrap();
        assert_eq!(y.dims(), &[1, 5]);
        let v = y.flatten_all().unwrap().to_vec1::<f64>().unwrap();
        assert_eq!(&v[3..], &[0.0, 0.0]);
    }

    #[test]
    fn identical_samples_add_ones() {
        let x = t(&[0.3, -1.0, 0.3, -1.0], &[2, 2]);
        let p = t(&[0.5, -0.2, 0.1, 0.7, 0.3, 0.9], &[2, 3, 1]);
        let y = minibatch_discrimination(&x, &p).unwrap().to_vec2::<f64>().unwrap();
        for row in y {
            assert_eq!(&row[2..], &[1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        let x = t(&[-1000.0, 0.0, 1000.0], &[3]);
        let v = sigmoid(&x).unwrap().to_vec1::<f64>().unwrap();
        assert_eq!(v, vec![0.0, 0.5, 1.0]);
        let var = Var::from_tensor(&x).unwrap();
        let g = sigmoid(var.as_tensor()).unwrap().sum_all().unwrap().backward().unwrap();
        let gv = g.get(var.as_tensor()).unwrap().to_vec1::<f64>().unwrap();
        assert!(gv.iter().all(|v| v.is_finite()));
        assert!((gv[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn leaky_relu_values() {
        let v = leaky_relu(&t(&[-2.0, 0.0, 3.0], &[3])).unwrap().to_vec1::<f64>().unwrap();
        assert_eq!(v, vec![-0.4, 0.0, 3.0]);
    }

    #[test]
    fn spectral_weight_has_unit_norm_after_iterations() {
        let w = t(&[3.0, 0.0, 0.0, 1.0], &[2, 2]);
        let u = Var::from_tensor(&t(&[0.6, 0.8], &[2])).unwrap();
        let mut out = w.clone();
        for _ in 0..30 {
            out = spectral_weight(&w, &u, true).unwrap();
        }
        let v = out.flatten_all().unwrap().to_vec1::<f64>().unwrap();
        assert!((v[0] - 1.0).abs() < 1e-6 && (v[3] - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn batch_norm_normalizes_in_training() {
        let mut store = ParamStore::with_device(0, 0.02, Device::Cpu, DType::F64);
        let bn = BatchNorm::new(&mut store, "bn", 2).unwrap();
        let x = t(&[1.0, 10.0, 3.0, 20.0, 5.0, 30.0], &[3, 2]);
        let y = bn.forward(&x, true).unwrap().to_vec2::<f64>().unwrap();
        let col0: Vec<f64> = y.iter().map(|r| r[0]).collect();
        assert!(col0.iter().sum::<f64>().abs() < 1e-9);
        // The first update adopts the batch statistics outright.
        let rm = bn.running_mean.as_tensor().to_vec1::<f64>().unwrap();
        assert!((rm[0] - 3.0).abs() < 1e-12 && (rm[1] - 20.0).abs() < 1e-12);
        let rv = bn.running_var.as_tensor().to_vec1::<f64>().unwrap();
        assert!((rv[0] - 4.0).abs() < 1e-12);
        let again = bn.forward(&x, false).unwrap().to_vec2::<f64>().unwrap();
        assert!((again[0][0] - -2.0 / (4.0f64 + BN_EPS).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn desk_networks_produce_listed_shapes() {
        for kind in ModelKind::ALL {
            let spec = ArchConfig::desk(kind).build().unwrap();
            let mut store = ParamStore::new(1, 0.02);
            for sub in &spec.subnets {
                let net = Sequential::new(sub, &mut store).unwrap();
                let mut dims = vec![3];
                dims.extend(sub.input.dims());
                let x = Tensor::randn(0f32, 1.0, dims, &Device::Cpu).unwrap();
                let y = net.forward(&x, true).unwrap();
                let mut want = vec![3];
                want.extend(sub.output().dims());
                assert_eq!(y.dims(), want.as_slice(), "{kind} {}", sub.name);
            }
        }
    }

    #[test]
    fn store_is_seeded() {
        let spec = ArchConfig::desk(ModelKind::Cae).build().unwrap();
        let build = |seed| {
            let mut s = ParamStore::new(seed, 0.02);
            Sequential::new(&spec.subnets[0], &mut s).unwrap();
            s.named_tensors()[0].1.flatten_all().unwrap().to_vec1::<f32>().unwrap()
        };
        assert_eq!(build(4), build(4));
        assert_ne!(build(4), build(5));
    }
}
