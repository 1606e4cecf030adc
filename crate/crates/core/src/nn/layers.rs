//! Parameterized layers built on the kernels in [`super::ops`].

use rand::Rng;

use super::ops;
use super::param::{Module, Param};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Option<Param>,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(prefix: &str, d_in: usize, d_out: usize, bias: bool, rng: &mut R) -> Self {
        Self {
            weight: Param::xavier(format!("{prefix}.weight"), d_in, d_out, rng),
            bias: bias.then(|| Param::zeros(format!("{prefix}.bias"), &[d_out])),
        }
    }

    pub fn d_in(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn d_out(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        ops::linear(x, &self.weight.value, self.bias.as_ref().map(|b| &b.value))
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor, dy: &Tensor) -> Tensor {
        let g = ops::linear_backward(x, &self.weight.value, dy);
        self.weight.accumulate(&g.dw);
        if let Some(b) = &mut self.bias {
            b.accumulate(&g.db);
        }
        g.dx
    }
}

impl Module for Linear {
    fn visit(&self, f: &mut dyn FnMut(&Param)) {
        f(&self.weight);
        if let Some(b) = &self.bias {
            f(b);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.weight);
        if let Some(b) = &mut self.bias {
            f(b);
        }
    }
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Param,
    pub bias: Param,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new(prefix: &str, d: usize) -> Self {
        Self {
            gain: Param::filled(format!("{prefix}.gain"), &[d], 1.0),
            bias: Param::zeros(format!("{prefix}.bias"), &[d]),
            eps: LAYER_NORM_EPS,
        }
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, ops::LayerNormCache) {
        ops::layer_norm(x, &self.gain.value, &self.bias.value, self.eps)
    }

    pub fn backward(&mut self, cache: &ops::LayerNormCache, dy: &Tensor) -> Tensor {
        let (dx, dg, db) = ops::layer_norm_backward(cache, &self.gain.value, dy);
        self.gain.accumulate(&dg);
        self.bias.accumulate(&db);
        dx
    }
}

impl Module for LayerNorm {
    fn visit(&self, f: &mut dyn FnMut(&Param)) {
        f(&self.gain);
        f(&self.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.gain);
        f(&mut self.bias);
    }
}

/// Multi-head scaled dot-product self-attention with key masking.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    x: Tensor,
    q: Tensor,
    k: Tensor,
    v: Tensor,
    /// Per head, `[T, T]` attention weights (rows are queries).
    pub weights: Vec<Tensor>,
    concat: Tensor,
}

impl MultiHeadAttention {
    pub fn new<R: Rng + ?Sized>(prefix: &str, d_model: usize, heads: usize, rng: &mut R) -> Result<Self> {
        if heads == 0 || d_model % heads != 0 {
            return Err(Error::contract(format!(
                "model width {d_model} is not divisible by {heads} heads"
            )));
        }
        Ok(Self {
            query: Linear::new(&format!("{prefix}.query"), d_model, d_model, true, rng),
            key: Linear::new(&format!("{prefix}.key"), d_model, d_model, true, rng),
            value: Linear::new(&format!("{prefix}.value"), d_model, d_model, true, rng),
            output: Linear::new(&format!("{prefix}.output"), d_model, d_model, true, rng),
            heads,
        })
    }

    fn head_dim(&self) -> usize {
        self.query.d_out() / self.heads
    }

    /// `key_mask[j]` is true when position `j` may be attended to.
    pub fn forward(&self, x: &Tensor, key_mask: &[bool]) -> Result<(Tensor, AttentionCache)> {
        let t = x.rows();
        if key_mask.len() != t {
            return Err(Error::contract(format!(
                "attention mask has {} entries for {t} positions",
                key_mask.len()
            )));
        }
        if !key_mask.iter().any(|m| *m) {
            return Err(Error::contract("attention over a fully masked sequence"));
        }
        let q = self.query.forward(x)?;
        let k = self.key.forward(x)?;
        let v = self.value.forward(x)?;
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        let mut weights = Vec::with_capacity(self.heads);
        let mut concat = Tensor::zeros(&[t, self.heads * dh]);
        let mut scores = vec![0.0; t];
        for h in 0..self.heads {
            let cols = h * dh..(h + 1) * dh;
            let mut w = Tensor::zeros(&[t, t]);
            for i in 0..t {
                let qi = &q.row(i)[cols.clone()];
                for j in 0..t {
                    scores[j] = if key_mask[j] {
                        let kj = &k.row(j)[cols.clone()];
                        qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                w.row_mut(i).copy_from_slice(&ops::softmax(&scores));
            }
            for i in 0..t {
                let out = &mut concat.row_mut(i)[cols.clone()];
                for j in 0..t {
                    let a = w.row(i)[j];
                    if a != 0.0 {
                        for (o, vv) in out.iter_mut().zip(&v.row(j)[cols.clone()]) {
                            *o += a * vv;
                        }
                    }
                }
            }
            weights.push(w);
        }
        let y = self.output.forward(&concat)?;
        Ok((
            y,
            AttentionCache {
                x: x.clone(),
                q,
                k,
                v,
                weights,
                concat,
            },
        ))
    }

    pub fn backward(&mut self, cache: &AttentionCache, dy: &Tensor) -> Tensor {
        let t = cache.x.rows();
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let dconcat = self.output.backward(&cache.concat, dy);

        let width = self.heads * dh;
        let mut dq = Tensor::zeros(&[t, width]);
        let mut dk = Tensor::zeros(&[t, width]);
        let mut dv = Tensor::zeros(&[t, width]);
        let mut dw = vec![0.0; t];
        for h in 0..self.heads {
            let cols = h * dh..(h + 1) * dh;
            let w = &cache.weights[h];
            for i in 0..t {
                let dout = &dconcat.row(i)[cols.clone()];
                // dV += A^T dO, dA = dO V^T
                for j in 0..t {
                    let a = w.row(i)[j];
                    let vj = &cache.v.row(j)[cols.clone()];
                    dw[j] = dout.iter().zip(vj).map(|(x, y)| x * y).sum();
                    if a != 0.0 {
                        for (g, o) in dv.row_mut(j)[cols.clone()].iter_mut().zip(dout) {
                            *g += a * o;
                        }
                    }
                }
                // softmax backward: dS = A * (dA - sum(dA * A))
                let dot: f64 = (0..t).map(|j| dw[j] * w.row(i)[j]).sum();
                for j in 0..t {
                    let a = w.row(i)[j];
                    if a == 0.0 {
                        continue;
                    }
                    let ds = a * (dw[j] - dot) * scale;
                    for (g, kv) in dq.row_mut(i)[cols.clone()].iter_mut().zip(&cache.k.row(j)[cols.clone()]) {
                        *g += ds * kv;
                    }
                    for (g, qv) in dk.row_mut(j)[cols.clone()].iter_mut().zip(&cache.q.row(i)[cols.clone()]) {
                        *g += ds * qv;
                    }
                }
            }
        }
        let mut dx = self.query.backward(&cache.x, &dq);
        dx.add_assign(&self.key.backward(&cache.x, &dk));
        dx.add_assign(&self.value.backward(&cache.x, &dv));
        dx
    }
}

impl Module for MultiHeadAttention {
    fn visit(&self, f: &mut dyn FnMut(&Param)) {
        self.query.visit(f);
        self.key.visit(f);
        self.value.visit(f);
        self.output.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        self.query.visit_mut(f);
        self.key.visit_mut(f);
        self.value.visit_mut(f);
        self.output.visit_mut(f);
    }
}

/// Attention and feed-forward sublayers, each with a residual connection
/// and layer normalization. Post-norm unless `prenorm` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerLayer {
    pub attention: MultiHeadAttention,
    pub norm1: LayerNorm,
    pub ff1: Linear,
    pub ff2: Linear,
    pub norm2: LayerNorm,
    pub prenorm: bool,
}

#[derive(Debug, Clone)]
pub struct TransformerCache {
    pub attention: AttentionCache,
    norm1: ops::LayerNormCache,
    norm2: ops::LayerNormCache,
    ff_in: Tensor,
    ff_hidden: Tensor,
    ff_act: Tensor,
}

impl TransformerLayer {
    pub fn new<R: Rng + ?Sized>(
        prefix: &str,
        d_model: usize,
        heads: usize,
        ff_width: usize,
        prenorm: bool,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            attention: MultiHeadAttention::new(&format!("{prefix}.attention"), d_model, heads, rng)?,
            norm1: LayerNorm::new(&format!("{prefix}.norm1"), d_model),
            ff1: Linear::new(&format!("{prefix}.ff1"), d_model, ff_width, true, rng),
            ff2: Linear::new(&format!("{prefix}.ff2"), ff_width, d_model, true, rng),
            norm2: LayerNorm::new(&format!("{prefix}.norm2"), d_model),
            prenorm,
        })
    }

    pub fn forward(&self, x: &Tensor, key_mask: &[bool]) -> Result<(Tensor, TransformerCache)> {
        if self.prenorm {
            let (n1, norm1) = self.norm1.forward(x);
            let (a, attention) = self.attention.forward(&n1, key_mask)?;
            let mut h = x.clone();
            h.add_assign(&a);
            let (n2, norm2) = self.norm2.forward(&h);
            let ff_hidden = self.ff1.forward(&n2)?;
            let ff_act = ops::relu(&ff_hidden);
            let f = self.ff2.forward(&ff_act)?;
            h.add_assign(&f);
            Ok((
                h,
                TransformerCache {
                    attention,
                    norm1,
                    norm2,
                    ff_in: n2,
                    ff_hidden,
                    ff_act,
                },
            ))
        } else {
            let (a, attention) = self.attention.forward(x, key_mask)?;
            let mut h_in = x.clone();
            h_in.add_assign(&a);
            let (h, norm1) = self.norm1.forward(&h_in);
            let ff_hidden = self.ff1.forward(&h)?;
            let ff_act = ops::relu(&ff_hidden);
            let mut o_in = self.ff2.forward(&ff_act)?;
            o_in.add_assign(&h);
            let (out, norm2) = self.norm2.forward(&o_in);
            Ok((
                out,
                TransformerCache {
                    attention,
                    norm1,
                    norm2,
                    ff_in: h,
                    ff_hidden,
                    ff_act,
                },
            ))
        }
    }

    pub fn backward(&mut self, cache: &TransformerCache, dy: &Tensor) -> Tensor {
        if self.prenorm {
            let dact = self.ff2.backward(&cache.ff_act, dy);
            let dhidden = ops::relu_backward(&cache.ff_hidden, &dact);
            let dn2 = self.ff1.backward(&cache.ff_in, &dhidden);
            let mut dh = dy.clone();
            dh.add_assign(&self.norm2.backward(&cache.norm2, &dn2));
            let dn1 = self.attention.backward(&cache.attention, &dh);
            let mut dx = dh;
            dx.add_assign(&self.norm1.backward(&cache.norm1, &dn1));
            dx
        } else {
            let do_in = self.norm2.backward(&cache.norm2, dy);
            let dact = self.ff2.backward(&cache.ff_act, &do_in);
            let dhidden = ops::relu_backward(&cache.ff_hidden, &dact);
            let mut dh = self.ff1.backward(&cache.ff_in, &dhidden);
            dh.add_assign(&do_in);
            let dh_in = self.norm1.backward(&cache.norm1, &dh);
            let mut dx = self.attention.backward(&cache.attention, &dh_in);
            dx.add_assign(&dh_in);
            dx
        }
    }
}

impl Module for TransformerLayer {
    fn visit(&self, f: &mut dyn FnMut(&Param)) {
        self.attention.visit(f);
        self.norm1.visit(f);
        self.ff1.visit(f);
        self.ff2.visit(f);
        self.norm2.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        self.attention.visit_mut(f);
        self.norm1.visit_mut(f);
        self.ff1.visit_mut(f);
        self.ff2.visit_mut(f);
        self.norm2.visit_mut(f);
    }
}

/// Sinusoidal position table `[T, d]`.
pub fn sinusoidal_positions(t: usize, d: usize) -> Tensor {
    let mut pe = Tensor::zeros(&[t, d]);
    for pos in 0..t {
        let row = pe.row_mut(pos);
        for i in 0..d {
            let freq = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            let angle = pos as f64 * freq;
            row[i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    pe
}
