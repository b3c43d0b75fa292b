use candle_core::{Device, Tensor, Var};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xad_models::losses::*;
use xad_models::nn::minibatch_discrimination;

fn t(v: &[f64]) -> Tensor {
    Tensor::from_vec(v.to_vec(), v.len(), &Device::Cpu).unwrap()
}

fn scalar(t: &Tensor) -> f64 {
    t.to_scalar::<f64>().unwrap()
}

// Scalar-loop references.

fn mse_ref(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += (x[i] - y[i]) * (x[i] - y[i]);
    }
    s / x.len() as f64
}

fn masked_ref(x: &[f64], y: &[f64], m: &[f64]) -> f64 {
    let (mut s, mut n) = (0.0, 0.0);
    for i in 0..x.len() {
        s += m[i] * m[i] * (x[i] - y[i]) * (x[i] - y[i]);
        n += m[i];
    }
    s / n
}

fn kld_ref(mu: &[f64], sigma: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..mu.len() {
        s += sigma[i] * sigma[i] + mu[i] * mu[i] - 1.0 - (sigma[i] * sigma[i]).ln();
    }
    0.5 * s
}

fn mbd_ref(x: &[Vec<f64>], p: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let (f, b, c) = (p.len(), p[0].len(), p[0][0].len());
    let m: Vec<Vec<Vec<f64>>> = x
        .iter()
        .map(|row| (0..b).map(|bb| (0..c).map(|cc| (0..f).map(|ff| row[ff] * p[ff][bb][cc]).sum()).collect()).collect())
        .collect();
    (0..x.len())
        .map(|i| {
            (0..b)
                .map(|bb| {
                    (0..x.len())
                        .filter(|&j| j != i)
                        .map(|j| (-(0..c).map(|cc| (m[i][bb][cc] - m[j][bb][cc]).abs()).sum::<f64>()).exp())
                        .sum()
                })
                .collect()
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn reconstruction_examples() {
    for (x, y) in [(vec![0.3, 0.7], vec![0.3, 0.7]), (vec![1.0, 0.0], vec![0.0, 0.0]), (vec![1.0; 4], vec![0.0; 4])] {
        assert!(close(scalar(&reconstruction_loss(&t(&x), &t(&y)).unwrap()), mse_ref(&x, &y), 1e-15));
    }
    assert_eq!(scalar(&reconstruction_loss(&t(&[1.0, 0.0]), &t(&[0.0, 0.0])).unwrap()), 0.5);
    assert!(reconstruction_loss(&t(&[1.0, 0.0]), &t(&[0.0; 3])).is_err());
}

#[test]
fn masked_examples() {
    let (x, y, m) = ([1.0, 0.0, 0.0, 1.0], [0.0; 4], [1.0, 0.0, 0.0, 1.0]);
    let got = scalar(&masked_reconstruction_loss(&t(&x), &t(&y), &t(&m), true).unwrap());
    assert_eq!(got, masked_ref(&x, &y, &m));
    assert_eq!(got, 1.0);
    assert_eq!(scalar(&masked_reconstruction_loss(&t(&x), &t(&x), &t(&m), true).unwrap()), 0.0);
    assert!(matches!(
        masked_reconstruction_loss(&t(&x), &t(&y), &t(&[0.0; 4]), true),
        Err(xad_models::Error::EmptyMask)
    ));
    // Unsquared norm: sqrt(2) / 2.
    let unsq = scalar(&masked_reconstruction_loss(&t(&x), &t(&y), &t(&m), false).unwrap());
    assert!(close(unsq, 2f64.sqrt() / 2.0, 1e-15));
}

#[test]
fn kld_examples() {
    assert_eq!(scalar(&kld_diag_gaussian(&t(&[0.0, 0.0]), &t(&[1.0, 1.0])).unwrap()), 0.0);
    assert!(close(scalar(&kld_diag_gaussian(&t(&[1.0]), &t(&[1.0])).unwrap()), 0.5, 1e-15));
    let v = scalar(&kld_diag_gaussian(&t(&[0.0]), &t(&[2.0])).unwrap());
    assert!(close(v, kld_ref(&[0.0], &[2.0]), 1e-14));
    assert!((v - 0.8069).abs() < 1e-4);
    assert!(kld_diag_gaussian(&t(&[0.0]), &t(&[0.0])).is_err());
    assert!(kld_diag_gaussian(&t(&[0.0]), &t(&[-1.0])).is_err());
}

#[test]
fn reparameterize_examples() {
    let z = reparameterize(&t(&[1.0]), &t(&[2.0]), &t(&[0.5])).unwrap();
    assert_eq!(z.to_vec1::<f64>().unwrap(), vec![2.0]);
    let mu = [0.3, -0.2];
    assert_eq!(reparameterize(&t(&mu), &t(&[1.0, 4.0]), &t(&[0.0, 0.0])).unwrap().to_vec1::<f64>().unwrap(), mu);
}

#[test]
fn hinge_examples() {
    let (d, _) = hinge_adversarial_loss(&t(&[2.0]), &t(&[-2.0])).unwrap();
    assert_eq!(scalar(&d), 0.0);
    let (d, g) = hinge_adversarial_loss(&t(&[0.0]), &t(&[0.0])).unwrap();
    assert_eq!((scalar(&d), scalar(&g)), (2.0, 0.0));
    let (_, g) = hinge_adversarial_loss(&t(&[0.0]), &t(&[3.0])).unwrap();
    assert_eq!(scalar(&g), -3.0);
}

#[test]
fn soft_labels_stay_in_their_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
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
    let mut u = Array1::from_vec(vec![1.0, 1.0]);
    let d = Array2::from_shape_vec((2, 2), vec![3.0, 0.0, 0.0, 1.0]).unwrap();
    let mut w = d.clone();
    for _ in 0..50 {
        w = spectral_normalize(&d, &mut u);
    }
    assert!((w[[0, 0]] - 1.0).abs() < 1e-9 && (w[[1, 1]] - 1.0 / 3.0).abs() < 1e-9);

    let (s, c) = (0.6f64, 0.8f64);
    let rot = Array2::from_shape_vec((2, 2), vec![c, -s, s, c]).unwrap();
    let out = spectral_normalize(&rot, &mut Array1::from_vec(vec![0.3, 0.9]));
    assert!(out.iter().zip(rot.iter()).all(|(a, b)| (a - b).abs() < 1e-12));

    let one = spectral_normalize(&Array2::from_elem((1, 1), 5.0), &mut Array1::from_vec(vec![1.0]));
    assert!((one[[0, 0]] - 1.0).abs() < 1e-15);

    let zero = Array2::<f64>::zeros((3, 2));
    assert_eq!(spectral_normalize(&zero, &mut Array1::from_vec(vec![1.0, 0.0, 0.0])), zero);
}

#[test]
fn spectral_norm_converges_to_unit_singular_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let (r, c) = (rng.random_range(2..7), rng.random_range(2..7));
        let w = Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0));
        let mut u = Array1::from_shape_fn(r, |_| rng.random_range(-1.0..1.0));
        let mut out = w.clone();
        for _ in 0..500 {
            out = spectral_normalize(&w, &mut u);
        }
        let m = DMatrix::from_row_slice(r, c, out.as_slice().unwrap());
        let top = m.singular_values().max();
        assert!((top - 1.0).abs() < 1e-3, "largest singular value {top}");
    }
}

#[test]
fn minibatch_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, f, b, c) = (4, 3, 2, 3);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..f).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let p: Vec<Vec<Vec<f64>>> =
        (0..f).map(|_| (0..b).map(|_| (0..c).map(|_| rng.random_range(-0.5..0.5)).collect()).collect()).collect();
    let xt = Tensor::from_vec(x.concat(), (n, f), &Device::Cpu).unwrap();
    let pt = Tensor::from_vec(p.iter().flatten().flatten().copied().collect::<Vec<_>>(), (f, b, c), &Device::Cpu).unwrap();
    let got = minibatch_discrimination(&xt, &pt).unwrap().to_vec2::<f64>().unwrap();
    let want = mbd_ref(&x, &p);
    for i in 0..n {
        assert_eq!(&got[i][..f], &x[i][..]);
        for bb in 0..b {
            assert!(close(got[i][f + bb], want[i][bb], 1e-12));
        }
    }
}

/// Relative error of analytic against central-difference gradients.
fn grad_error(analytic: &[f64], f: impl Fn(&[f64]) -> f64, at: &[f64]) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..at.len() {
        let (mut a, mut b) = (at.to_vec(), at.to_vec());
        a[i] += h;
        b[i] -= h;
        let fd = (f(&a) - f(&b)) / (2.0 * h);
        let err = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

fn grad_of(v: &Var, loss: &Tensor) -> Vec<f64> {
    loss.backward().unwrap().get(v.as_tensor()).unwrap().to_vec1::<f64>().unwrap()
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = rng.random_range(2..9);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut m: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.6) as u8)).collect();
        m[0] = 1.0;

        let yv = Var::from_tensor(&t(&y)).unwrap();
        let g = grad_of(&yv, &reconstruction_loss(&t(&x), yv.as_tensor()).unwrap());
        assert!(grad_error(&g, |yy| mse_ref(&x, yy), &y) < 1e-4);

        let g = grad_of(&yv, &masked_reconstruction_loss(&t(&x), yv.as_tensor(), &t(&m), true).unwrap());
        assert!(grad_error(&g, |yy| masked_ref(&x, yy, &m), &y) < 1e-4);

        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
        let mv = Var::from_tensor(&t(&mu)).unwrap();
        let sv = Var::from_tensor(&t(&sigma)).unwrap();
        let loss = kld_diag_gaussian(mv.as_tensor(), sv.as_tensor()).unwrap();
        let grads = loss.backward().unwrap();
        let gm = grads.get(mv.as_tensor()).unwrap().to_vec1::<f64>().unwrap();
        let gs = grads.get(sv.as_tensor()).unwrap().to_vec1::<f64>().unwrap();
        assert!(grad_error(&gm, |mm| kld_ref(mm, &sigma), &mu) < 1e-4);
        assert!(grad_error(&gs, |ss| kld_ref(&mu, ss), &sigma) < 1e-4);
    }
}

fn vecs(len: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    len.prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_mask_equals_unmasked((x, y, _) in vecs(1..20)) {
        let ones = vec![1.0; x.len()];
        let masked = scalar(&masked_reconstruction_loss(&t(&x), &t(&y), &t(&ones), true).unwrap());
        let plain = scalar(&reconstruction_loss(&t(&x), &t(&y)).unwrap());
        prop_assert_eq!(masked, plain);
    }

    #[test]
    fn outside_the_mask_does_not_matter((x, y, noise) in vecs(2..20), bits in prop::collection::vec(any::<bool>(), 20)) {
        let mut m: Vec<f64> = bits[..x.len()].iter().map(|&b| f64::from(b as u8)).collect();
        m[0] = 1.0;
        let y2: Vec<f64> = y.iter().zip(&m).zip(&noise).map(|((v, mm), d)| if *mm == 1.0 { *v } else { v + d }).collect();
        for squared in [true, false] {
            let a = scalar(&masked_reconstruction_loss(&t(&x), &t(&y), &t(&m), squared).unwrap());
            let b = scalar(&masked_reconstruction_loss(&t(&x), &t(&y2), &t(&m), squared).unwrap());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn kld_is_non_negative(mu in prop::collection::vec(-4.0f64..4.0, 1..10), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma: Vec<f64> = mu.iter().map(|_| rng.random_range(0.05..5.0)).collect();
        let v = scalar(&kld_diag_gaussian(&t(&mu), &t(&sigma)).unwrap());
        prop_assert!(v >= 0.0);
        prop_assert!(close(v, kld_ref(&mu, &sigma), 1e-12));
        let zero = scalar(&kld_diag_gaussian(&t(&vec![0.0; mu.len()]), &t(&vec![1.0; mu.len()])).unwrap());
        prop_assert_eq!(zero, 0.0);
        if mu.iter().any(|m| m.abs() > 1e-3) {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn minibatch_is_permutation_equivariant(n in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, b, c) = (4, 3, 2);
        let x: Vec<f64> = (0..n * f).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p: Vec<f64> = (0..f * b * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng);
        let xp: Vec<f64> = perm.iter().flat_map(|&i| x[i * f..(i + 1) * f].to_vec()).collect();
        let pt = Tensor::from_vec(p, (f, b, c), &Device::Cpu).unwrap();
        let run = |v: Vec<f64>| minibatch_discrimination(&Tensor::from_vec(v, (n, f), &Device::Cpu).unwrap(), &pt)
            .unwrap().to_vec2::<f64>().unwrap();
        let (out, outp) = (run(x), run(xp));
        for (k, &i) in perm.iter().enumerate() {
            for (a, b) in outp[k].iter().zip(&out[i]) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
