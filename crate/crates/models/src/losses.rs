//! Training objectives and the weight/label transforms used by the GANs.

use candle_core::Tensor;
use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};

fn same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Mean squared difference over all elements.
pub fn reconstruction_loss(x: &Tensor, x_hat: &Tensor) -> Result<Tensor> {
    same_shape(x, x_hat)?;
    // Same reduction as the masked loss so that a full mask reproduces it bit for bit.
    let count = Tensor::new(x.elem_count() as f64, x.device())?.to_dtype(x.dtype())?;
    Ok((x - x_hat)?.sqr()?.sum_all()?.broadcast_div(&count)?)
}

/// Squared error summed over mask pixels and divided by the mask size.
/// `squared = false` gives the unsquared norm `‖m ⊙ (x − x̂)‖₂ / ‖m‖₁`.
pub fn masked_reconstruction_loss(x: &Tensor, x_hat: &Tensor, mask: &Tensor, squared: bool) -> Result<Tensor> {
    same_shape(x, x_hat)?;
    same_shape(x, mask)?;
    let count = mask.sum_all()?;
    if count.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()? <= 0.0 {
        return Err(Error::EmptyMask);
    }
    let diff = ((x - x_hat)? * mask)?;
    let mut energy = diff.sqr()?.sum_all()?;
    if !squared {
        energy = energy.sqrt()?;
    }
    Ok(energy.broadcast_div(&count)?)
}

/// `½ Σ (σ² + μ² − 1 − ln σ²)` over the last dim, averaged over any leading
/// batch dim.
pub fn kld_diag_gaussian(mu: &Tensor, sigma: &Tensor) -> Result<Tensor> {
    same_shape(mu, sigma)?;
    let min = sigma.min_all()?.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
    if min.is_nan() || min <= 0.0 {
        return Err(Error::NonPositiveSigma);
    }
    let var = sigma.sqr()?;
    let terms = ((&var + mu.sqr()?)? - var.log()?)?.affine(0.5, -0.5)?;
    let per_sample = terms.sum(candle_core::D::Minus1)?;
    Ok(if per_sample.rank() == 0 { per_sample } else { per_sample.mean_all()? })
}

pub fn reparameterize(mu: &Tensor, sigma: &Tensor, eps: &Tensor) -> Result<Tensor> {
    same_shape(mu, sigma)?;
    same_shape(mu, eps)?;
    Ok(((sigma * eps)? + mu)?)
}

/// Returns `(d_loss, g_loss)`.
pub fn hinge_adversarial_loss(real_logits: &Tensor, fake_logits: &Tensor) -> Result<(Tensor, Tensor)> {
    let d_real = real_logits.affine(-1.0, 1.0)?.relu()?.mean_all()?;
    let d_fake = fake_logits.affine(1.0, 1.0)?.relu()?.mean_all()?;
    let g = fake_logits.mean_all()?.neg()?;
    Ok(((d_real + d_fake)?, g))
}

/// Numerically stable binary cross-entropy on logits, averaged.
pub fn bce_with_logits(logits: &Tensor, targets: &Tensor) -> Result<Tensor> {
    same_shape(logits, targets)?;
    let softplus_neg_abs = logits.abs()?.neg()?.exp()?.affine(1.0, 1.0)?.log()?;
    let loss = ((logits.relu()? - (logits * targets)?)? + softplus_neg_abs)?;
    Ok(loss.mean_all()?)
}

/// Replaces a hard label by a uniform draw from `[1 − δ, 1]` or `[0, δ]`.
pub fn soften_labels<R: Rng + ?Sized>(hard: bool, delta: f64, rng: &mut R) -> Result<f64> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::Config(format!("soft-label delta {delta} outside [0, 0.5)")));
    }
    let jitter = if delta > 0.0 { rng.random_range(0.0..=delta) } else { 0.0 };
    Ok(if hard { 1.0 - jitter } else { jitter })
}

/// One power-iteration step on the persistent vector `u` (length = rows),
/// then `w / σ̂` with `σ̂ = uᵀ W v`. A zero matrix is returned unchanged.
pub fn spectral_normalize(w: &Array2<f64>, u: &mut Array1<f64>) -> Array2<f64> {
    let normalize = |a: Array1<f64>| {
        let n = a.dot(&a).sqrt();
        if n > 0.0 {
            a / n
        } else {
            a
        }
    };
    let v = normalize(w.t().dot(u));
    let next = normalize(w.dot(&v));
    let sigma = next.dot(&w.dot(&v));
    *u = next;
    if sigma > 0.0 {
        w / sigma
    } else {
        w.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Device;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(values: &[f64]) -> Tensor {
        Tensor::from_vec(values.to_vec(), values.len(), &Device::Cpu).unwrap()
    }

    fn scalar(x: Tensor) -> f64 {
        x.to_scalar::<f64>().unwrap()
    }

    #[test]
    fn reconstruction_examples() {
        assert_eq!(scalar(reconstruction_loss(&t(&[1.0, 0.0]), &t(&[0.0, 0.0])).unwrap()), 0.5);
        assert_eq!(scalar(reconstruction_loss(&t(&[1.0; 4]), &t(&[0.0; 4])).unwrap()), 1.0);
        assert!(reconstruction_loss(&t(&[1.0]), &t(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn masked_examples() {
        let x = t(&[1.0, 0.0, 0.0, 1.0]);
        let z = t(&[0.0; 4]);
        let m = t(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(scalar(masked_reconstruction_loss(&x, &z, &m, true).unwrap()), 1.0);
        assert!((scalar(masked_reconstruction_loss(&x, &z, &m, false).unwrap()) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(matches!(masked_reconstruction_loss(&x, &z, &z, true), Err(Error::EmptyMask)));
    }

    #[test]
    fn kld_examples() {
        assert_eq!(scalar(kld_diag_gaussian(&t(&[0.0, 0.0]), &t(&[1.0, 1.0])).unwrap()), 0.0);
        assert_eq!(scalar(kld_diag_gaussian(&t(&[1.0]), &t(&[1.0])).unwrap()), 0.5);
        let v = scalar(kld_diag_gaussian(&t(&[0.0]), &t(&[2.0])).unwrap());
        assert!((v - 0.5 * (3.0 - 4f64.ln())).abs() < 1e-12);
        assert!(kld_diag_gaussian(&t(&[0.0]), &t(&[0.0])).is_err());
    }

    #[test]
    fn reparameterize_example() {
        let z = reparameterize(&t(&[1.0]), &t(&[2.0]), &t(&[0.5])).unwrap();
        assert_eq!(z.to_vec1::<f64>().unwrap(), vec![2.0]);
    }

    #[test]
    fn hinge_examples() {
        let (d, _) = hinge_adversarial_loss(&t(&[2.0]), &t(&[-2.0])).unwrap();
        assert_eq!(scalar(d), 0.0);
        let (d, g) = hinge_adversarial_loss(&t(&[0.0]), &t(&[0.0])).unwrap();
        assert_eq!((scalar(d), scalar(g)), (2.0, 0.0));
        let (_, g) = hinge_adversarial_loss(&t(&[0.0]), &t(&[3.0])).unwrap();
        assert_eq!(scalar(g), -3.0);
    }

    #[test]
    fn bce_matches_direct_formula() {
        let logits = [-3.0, -0.2, 0.0, 1.5];
        let targets = [0.0, 1.0, 0.3, 0.99];
        let direct: f64 = logits
            .iter()
            .zip(targets)
            .map(|(&x, y)| {
                let p = 1.0 / (1.0 + (-x as f64).exp());
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 4.0;
        let v = scalar(bce_with_logits(&t(&logits), &t(&targets)).unwrap());
        assert!((v - direct).abs() < 1e-12);
    }

    #[test]
    fn soft_labels_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let one = soften_labels(true, 0.01, &mut rng).unwrap();
            let zero = soften_labels(false, 0.01, &mut rng).unwrap();
            assert!((0.99..=1.0).contains(&one) && (0.0..=0.01).contains(&zero));
        }
        assert_eq!(soften_labels(true, 0.0, &mut rng).unwrap(), 1.0);
        assert_eq!(soften_labels(false, 0.0, &mut rng).unwrap(), 0.0);
        assert!(soften_labels(true, 0.5, &mut rng).is_err());
    }

    #[test]
    fn spectral_examples() {
        let w = array![[3.0, 0.0], [0.0, 1.0]];
        let mut u = array![0.6, 0.8];
        let mut out = w.clone();
        for _ in 0..40 {
            out = spectral_normalize(&w, &mut u);
        }
        assert!((out[[0, 0]] - 1.0).abs() < 1e-9 && (out[[1, 1]] - 1.0 / 3.0).abs() < 1e-9);

        let mut u1 = array![1.0];
        assert_eq!(spectral_normalize(&array![[5.0]], &mut u1), array![[1.0]]);

        let zero = Array2::<f64>::zeros((2, 3));
        let mut u0 = array![1.0, 0.0];
        assert_eq!(spectral_normalize(&zero, &mut u0), zero);

        let (s, c) = (0.6, 0.8);
        let rot = array![[c, -s], [s, c]];
        let mut ur = array![1.0, 0.0];
        let r = spectral_normalize(&rot, &mut ur);
        assert!((&r - &rot).iter().all(|d| d.abs() < 1e-12));
    }
}
