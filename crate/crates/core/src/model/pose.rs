use rand::Rng;

use super::{ModelConfig, POSE_PREFIX};
use crate::error::{Error, Result};
use crate::nn::ops::{self, LayerNormCache, Mode};
use crate::nn::{LayerNorm, Linear, Module, Param, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

/// linear -> layer norm -> activation -> dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    pub linear: Linear,
    pub norm: LayerNorm,
    pub activation: Activation,
    pub dropout: f64,
}

#[derive(Debug, Clone)]
struct BlockCache {
    input: Tensor,
    norm: LayerNormCache,
    pre_activation: Tensor,
    activated: Tensor,
    dropout_mask: Option<Vec<f64>>,
}

impl DenseBlock {
    fn forward<R: Rng + ?Sized>(&self, x: &Tensor, mode: Mode, rng: &mut R) -> Result<(Tensor, BlockCache)> {
        let h = self.linear.forward(x)?;
        let (pre_activation, norm) = self.norm.forward(&h);
        let activated = match self.activation {
            Activation::Relu => ops::relu(&pre_activation),
            Activation::Tanh => ops::tanh(&pre_activation),
        };
        let (out, dropout_mask) = if self.dropout > 0.0 {
            ops::dropout(&activated, self.dropout, mode, rng)
        } else {
            (activated.clone(), None)
        };
        Ok((
            out,
            BlockCache {
                input: x.clone(),
                norm,
                pre_activation,
                activated,
                dropout_mask,
            },
        ))
    }

    fn backward(&mut self, cache: &BlockCache, dy: &Tensor) -> Tensor {
        let dact = ops::dropout_backward(cache.dropout_mask.as_deref(), dy);
        let dpre = match self.activation {
            Activation::Relu => ops::relu_backward(&cache.pre_activation, &dact),
            Activation::Tanh => ops::tanh_backward(&cache.activated, &dact),
        };
        let dh = self.norm.backward(&cache.norm, &dpre);
        self.linear.backward(&cache.input, &dh)
    }
}

impl Module for DenseBlock {
    fn visit(&self, f: &mut dyn FnMut(&Param)) {
        self.linear.visit(f);
        self.norm.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        self.linear.visit_mut(f);
        self.norm.visit_mut(f);
    }
}

/// Four dense blocks (three ReLU + dropout, one tanh) plus a bias-free
/// linear residual projection of the raw frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEmbedding {
    pub blocks: Vec<DenseBlock>,
    pub residual: Linear,
}

#[derive(Debug, Clone)]
pub struct PoseCache {
    input: Tensor,
    blocks: Vec<BlockCache>,
}

impl PoseEmbedding {
    pub fn new<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Self {
        let d_in = config.d_input();
        let widths = [
            config.block_widths[0],
            config.block_widths[1],
            config.block_widths[2],
            config.d_embed,
        ];
        let mut prev = d_in;
        let blocks = widths
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let prefix = format!("{POSE_PREFIX}.block{}", i + 1);
                let last = i == widths.len() - 1;
                let block = DenseBlock {
                    linear: Linear::new(&format!("{prefix}.linear"), prev, w, true, rng),
                    norm: LayerNorm::new(&format!("{prefix}.norm"), w),
                    activation: if last { Activation::Tanh } else { Activation::Relu },
                    dropout: if last { 0.0 } else { config.dropout },
                };
                prev = w;
                block
            })
            .collect();
        let residual = Linear::new(&format!("{POSE_PREFIX}.residual"), d_in, config.d_embed, false, rng);
        Self { blocks, residual }
    }

    pub fn d_input(&self) -> usize {
        self.residual.d_in()
    }

    /// Embeds each row of `[T, d_input]` independently.
    pub fn forward<R: Rng + ?Sized>(&self, x: &Tensor, mode: Mode, rng: &mut R) -> Result<(Tensor, PoseCache)> {
        if x.cols() != self.d_input() {
            return Err(Error::contract(format!(
                "pose embedding expects {}-wide frames, got {}",
                self.d_input(),
                x.cols()
            )));
        }
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (y, c) = block.forward(&h, mode, rng)?;
            caches.push(c);
            h = y;
        }
        h.add_assign(&self.residual.forward(x)?);
        Ok((
            h,
            PoseCache {
                input: x.clone(),
                blocks: caches,
            },
        ))
    }

    pub fn backward(&mut self, cache: &PoseCache, dy: &Tensor) -> Tensor {
        let mut dx = self.residual.backward(&cache.input, dy);
        let mut g = dy.clone();
        for (block, c) in self.blocks.iter_mut().zip(&cache.blocks).rev() {
            g = block.backward(c, &g);
        }
        dx.add_assign(&g);
        dx
    }
}

impl Module for PoseEmbedding {
    fn visit(&self, f: &mut dyn FnMut(&Param)) {
        for b in &self.blocks {
            b.visit(f);
        }
        self.residual.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        for b in &mut self.blocks {
            b.visit_mut(f);
        }
        self.residual.visit_mut(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::EstimatorFamily;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(rows: usize, width: usize) -> Tensor {
        Tensor::matrix(rows, width, (0..rows * width).map(|i| ((i * 17 % 23) as f64 - 11.0) / 7.0).collect()).unwrap()
    }

    #[test]
    fn default_output_width() {
        let cfg = ModelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pe = PoseEmbedding::new(&cfg, &mut rng);
        let (y, _) = pe.forward(&input(3, 134), Mode::Eval, &mut rng).unwrap();
        assert_eq!(y.shape(), &[3, 128]);
    }

    #[test]
    fn eval_is_deterministic() {
        let cfg = ModelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pe = PoseEmbedding::new(&cfg, &mut rng);
        let x = input(2, 134);
        let (a, _) = pe.forward(&x, Mode::Eval, &mut rng).unwrap();
        let (b, _) = pe.forward(&x, Mode::Eval, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zeroed_blocks_leave_the_residual() {
        let cfg = ModelConfig {
            layout: EstimatorFamily::MmPose,
            d_embed: 32,
            block_widths: [16, 16, 16],
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pe = PoseEmbedding::new(&cfg, &mut rng);
        for b in &mut pe.blocks {
            b.visit_mut(&mut |p| p.value.fill(0.0));
        }
        let x = input(4, 106);
        let (y, _) = pe.forward(&x, Mode::Train, &mut rng).unwrap();
        let r = pe.residual.forward(&x).unwrap();
        assert_eq!(y, r);
    }

    #[test]
    fn width_mismatch() {
        let cfg = ModelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pe = PoseEmbedding::new(&cfg, &mut rng);
        assert!(pe.forward(&input(1, 201), Mode::Eval, &mut rng).is_err());
    }
}
