//! Stateless forward/backward kernels.

use rand::Rng;

use super::tensor::{matmul, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// `y = x W + b` for `x: [N, d_in]`, `W: [d_in, d_out]`, `b: [d_out]`.
pub fn linear(x: &Tensor, w: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
    if x.cols() != w.rows() {
        return Err(Error::contract(format!(
            "linear: input width {} does not match weight rows {}",
            x.cols(),
            w.rows()
        )));
    }
    if let Some(b) = b {
        if b.len() != w.cols() {
            return Err(Error::contract(format!(
                "linear: bias has {} entries, expected {}",
                b.len(),
                w.cols()
            )));
        }
    }
    let mut y = matmul(x, false, w, false);
    if let Some(b) = b {
        for i in 0..y.rows() {
            for (v, bj) in y.row_mut(i).iter_mut().zip(b.data()) {
                *v += bj;
            }
        }
    }
    Ok(y)
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn linear_backward(x: &Tensor, w: &Tensor, dy: &Tensor) -> LinearGrads {
    let dx = matmul(dy, false, w, true);
    let dw = matmul(x, true, dy, false);
    let mut db = Tensor::zeros(&[w.cols()]);
    for i in 0..dy.rows() {
        for (a, g) in db.data_mut().iter_mut().zip(dy.row(i)) {
            *a += g;
        }
    }
    LinearGrads { dx, dw, db }
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    pub xhat: Tensor,
    pub inv_std: Vec<f64>,
}

/// Row-wise standardization with population variance, then `gain * xhat + bias`.
pub fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor, eps: f64) -> (Tensor, LayerNormCache) {
    let (n, d) = (x.rows(), x.cols());
    assert_eq!(gain.len(), d, "layer_norm gain width");
    let mut xhat = Tensor::zeros(&[n, d]);
    let mut y = Tensor::zeros(&[n, d]);
    let mut inv_std = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let s = 1.0 / (var + eps).sqrt();
        inv_std.push(s);
        let xr = xhat.row_mut(i);
        for j in 0..d {
            xr[j] = (row[j] - mean) * s;
        }
        let yr = y.row_mut(i);
        for j in 0..d {
            yr[j] = gain.data()[j] * xhat.row(i)[j] + bias.data()[j];
        }
    }
    (y, LayerNormCache { xhat, inv_std })
}

/// Returns `(dx, dgain, dbias)`.
pub fn layer_norm_backward(cache: &LayerNormCache, gain: &Tensor, dy: &Tensor) -> (Tensor, Tensor, Tensor) {
    let (n, d) = (dy.rows(), dy.cols());
    let mut dx = Tensor::zeros(&[n, d]);
    let mut dgain = Tensor::zeros(&[d]);
    let mut dbias = Tensor::zeros(&[d]);
    let mut dxhat = vec![0.0; d];
    for i in 0..n {
        let g = dy.row(i);
        let xh = cache.xhat.row(i);
        for j in 0..d {
            dgain.data_mut()[j] += g[j] * xh[j];
            dbias.data_mut()[j] += g[j];
            dxhat[j] = g[j] * gain.data()[j];
        }
        let mean_d = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dx = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        let s = cache.inv_std[i];
        for (j, out) in dx.row_mut(i).iter_mut().enumerate() {
            *out = s * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
    }
    (dx, dgain, dbias)
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Gradient through ReLU given its input.
pub fn relu_backward(x: &Tensor, dy: &Tensor) -> Tensor {
    let mut dx = dy.clone();
    for (g, v) in dx.data_mut().iter_mut().zip(x.data()) {
        if *v <= 0.0 {
            *g = 0.0;
        }
    }
    dx
}

pub fn tanh(x: &Tensor) -> Tensor {
    x.map(f64::tanh)
}

/// Gradient through tanh given its output.
pub fn tanh_backward(y: &Tensor, dy: &Tensor) -> Tensor {
    let mut dx = dy.clone();
    for (g, v) in dx.data_mut().iter_mut().zip(y.data()) {
        *g *= 1.0 - v * v;
    }
    dx
}

/// Inverted dropout. Returns the output and, in train mode, the per-element
/// multiplier (0 or `1 / (1 - p)`) needed by the backward pass.
pub fn dropout<R: Rng + ?Sized>(x: &Tensor, p: f64, mode: Mode, rng: &mut R) -> (Tensor, Option<Vec<f64>>) {
    assert!((0.0..1.0).contains(&p), "dropout probability must be in [0, 1)");
    if mode == Mode::Eval || p == 0.0 {
        return (x.clone(), None);
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect();
    let mut y = x.clone();
    for (v, m) in y.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    (y, Some(mask))
}

pub fn dropout_backward(mask: Option<&[f64]>, dy: &Tensor) -> Tensor {
    let mut dx = dy.clone();
    if let Some(mask) = mask {
        for (g, m) in dx.data_mut().iter_mut().zip(mask) {
            *g *= m;
        }
    }
    dx
}

/// Cross-entropy of `softmax(logits)` against `label`, with its gradient
/// with respect to the logits.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if logits.len() < 2 {
        return Err(Error::contract("softmax classifier needs at least two classes"));
    }
    if label >= logits.len() {
        return Err(Error::contract(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let probs = softmax(logits);
    let loss = -(probs[label].max(f64::MIN_POSITIVE)).ln();
    let mut grad = probs;
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Max-subtracted softmax. Entries equal to `-inf` get exactly zero weight.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// `lambda * sum |w|` and its subgradient `lambda * sign(w)` with `sign(0) = 0`.
pub fn l1_penalty(w: &Tensor, lambda: f64) -> (f64, Tensor) {
    let penalty = lambda * w.data().iter().map(|v| v.abs()).sum::<f64>();
    let grad = w.map(|v| {
        if v > 0.0 {
            lambda
        } else if v < 0.0 {
            -lambda
        } else {
            0.0
        }
    });
    (penalty, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_identity() {
        let x = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        let w = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = Tensor::vector(vec![0.0, 0.0]);
        assert_eq!(linear(&x, &w, Some(&b)).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn linear_bias_broadcast() {
        let x = Tensor::zeros(&[3, 2]);
        let w = Tensor::matrix(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let b = Tensor::vector(vec![0.5, -1.5]);
        let y = linear(&x, &w, Some(&b)).unwrap();
        for i in 0..3 {
            assert_eq!(y.row(i), &[0.5, -1.5]);
        }
    }

    #[test]
    fn linear_shape_mismatch() {
        let x = Tensor::zeros(&[1, 3]);
        let w = Tensor::zeros(&[2, 2]);
        assert!(linear(&x, &w, None).is_err());
    }

    #[test]
    fn layer_norm_constant_row_is_zero() {
        let x = Tensor::matrix(1, 4, vec![3.0; 4]).unwrap();
        let (y, _) = layer_norm(&x, &Tensor::vector(vec![1.0; 4]), &Tensor::zeros(&[4]), 1e-5);
        assert_eq!(y.data(), &[0.0; 4]);
    }

    #[test]
    fn layer_norm_two_values() {
        let x = Tensor::matrix(1, 2, vec![1.0, 3.0]).unwrap();
        let (y, _) = layer_norm(&x, &Tensor::vector(vec![1.0; 2]), &Tensor::zeros(&[2]), 0.0);
        assert_eq!(y.data(), &[-1.0, 1.0]);
    }

    #[test]
    fn relu_values() {
        let y = relu(&Tensor::vector(vec![-1.0, 0.0, 2.0]));
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn dropout_eval_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::vector((0..100).map(|v| v as f64).collect());
        let (y, mask) = dropout(&x, 0.125, Mode::Eval, &mut rng);
        assert_eq!(y, x);
        assert!(mask.is_none());
    }

    #[test]
    fn uniform_logits_loss_is_log_c() {
        let (loss, grad) = softmax_cross_entropy(&[0.3; 4], 2).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((grad.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn confident_logits_loss_is_zero() {
        let (loss, _) = softmax_cross_entropy(&[100.0, 0.0], 0).unwrap();
        assert!(loss < 1e-40);
    }

    #[test]
    fn invalid_label() {
        assert!(softmax_cross_entropy(&[0.0, 1.0], 2).is_err());
        assert!(softmax_cross_entropy(&[0.0], 0).is_err());
    }

    #[test]
    fn softmax_masks_negative_infinity() {
        let p = softmax(&[1.0, f64::NEG_INFINITY, 1.0]);
        assert_eq!(p, vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn l1_arithmetic() {
        let (p, g) = l1_penalty(&Tensor::vector(vec![1.0, -2.0, 3.0]), 0.002);
        assert!((p - 0.012).abs() < 1e-15);
        assert_eq!(g.data(), &[0.002, -0.002, 0.002]);
        let (p, g) = l1_penalty(&Tensor::zeros(&[3]), 0.002);
        assert_eq!(p, 0.0);
        assert_eq!(g.data(), &[0.0; 3]);
    }
}
