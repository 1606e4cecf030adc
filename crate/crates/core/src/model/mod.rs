//! Pose Transformer Network: per-frame pose embedding, a transformer over
//! the frame sequence with a learned classification vector, and a softmax
//! classifier on that vector's output.

mod pose;

pub use pose::{Activation, DenseBlock, PoseCache, PoseEmbedding};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{layout_for, EstimatorFamily};
use crate::nn::layers::{sinusoidal_positions, TransformerCache};
use crate::nn::{Checkpoint, Linear, Mode, Module, Param, Tensor, TransformerLayer};
use crate::sequence::KeypointSequence;

pub const POSE_PREFIX: &str = "pose_embedding";
pub const SEQUENCE_PREFIX: &str = "sequence_embedder";
pub const CLASSIFIER_PREFIX: &str = "classifier";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub layout: EstimatorFamily,
    /// Coordinates per keypoint reaching the model (after any depth drop).
    pub input_dims: usize,
    pub d_embed: usize,
    /// Output widths of pose-embedding blocks 1-3; block 4 outputs `d_embed`.
    pub block_widths: [usize; 3],
    pub layers: usize,
    pub heads: usize,
    pub ff_ratio: usize,
    pub dropout: f64,
    /// L1 weight on the first pose-embedding linear layer.
    pub l1_lambda: f64,
    pub positional_encoding: bool,
    pub prenorm: bool,
    pub num_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layout: EstimatorFamily::MediaPipe,
            input_dims: 2,
            d_embed: 128,
            block_widths: [128; 3],
            layers: 4,
            heads: 8,
            ff_ratio: 4,
            dropout: 0.125,
            l1_lambda: 0.002,
            positional_encoding: false,
            prenorm: false,
            num_classes: 2,
        }
    }
}

impl ModelConfig {
    pub fn d_input(&self) -> usize {
        layout_for(self.layout).keypoint_count * self.input_dims
    }

    pub fn check(&self) -> Result<()> {
        let layout = layout_for(self.layout);
        if self.input_dims < 2 || self.input_dims > layout.dims {
            return Err(Error::contract(format!(
                "{} keypoints carry 2..={} coordinates, config asks for {}",
                layout.id(),
                layout.dims,
                self.input_dims
            )));
        }
        if self.heads == 0 || self.d_embed % self.heads != 0 {
            return Err(Error::contract(format!(
                "embedding width {} is not divisible by {} heads",
                self.d_embed, self.heads
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::contract("a classifier needs at least two classes"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::contract("dropout must lie in [0, 1)"));
        }
        if self.l1_lambda < 0.0 {
            return Err(Error::contract("L1 weight must be non-negative"));
        }
        if self.block_widths.contains(&0) || self.d_embed == 0 || self.ff_ratio == 0 {
            return Err(Error::contract("layer widths must be positive"));
        }
        Ok(())
    }
}

/// Learned classification vector followed by the transformer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEmbedder {
    pub cls: Param,
    pub layers: Vec<TransformerLayer>,
    pub positional_encoding: bool,
}

impl Module for SequenceEmbedder {
    fn visit(&self, f: &mut dyn FnMut(&Param)) {
        f(&self.cls);
        for l in &self.layers {
            l.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.cls);
        for l in &mut self.layers {
            l.visit_mut(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ptn {
    pub config: ModelConfig,
    pub pose: PoseEmbedding,
    pub sequence: SequenceEmbedder,
    pub classifier: Linear,
}

#[derive(Debug, Clone)]
pub struct PtnCache {
    pose: PoseCache,
    layers: Vec<TransformerCache>,
    cls_out: Tensor,
    frames: usize,
}

impl PtnCache {
    /// Attention weights of every layer and head.
    pub fn attention_weights(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| l.attention.weights.iter())
    }
}

impl Ptn {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pose = PoseEmbedding::new(&config, &mut rng);
        let d = config.d_embed;
        let cls = Param::normal(format!("{SEQUENCE_PREFIX}.cls"), &[d], 1.0, &mut rng);
        let layers = (0..config.layers)
            .map(|i| {
                TransformerLayer::new(
                    &format!("{SEQUENCE_PREFIX}.layer{}", i + 1),
                    d,
                    config.heads,
                    d * config.ff_ratio,
                    config.prenorm,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let classifier = Linear::new(CLASSIFIER_PREFIX, d, config.num_classes, true, &mut rng);
        Ok(Self {
            sequence: SequenceEmbedder {
                cls,
                layers,
                positional_encoding: config.positional_encoding,
            },
            config,
            pose,
            classifier,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.classifier.d_out()
    }

    /// Replaces the classifier with a freshly initialized one for `classes`.
    pub fn reset_classifier(&mut self, classes: usize, seed: u64) -> Result<()> {
        if classes < 2 {
            return Err(Error::contract("a classifier needs at least two classes"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.classifier = Linear::new(CLASSIFIER_PREFIX, self.config.d_embed, classes, true, &mut rng);
        self.config.num_classes = classes;
        Ok(())
    }

    /// Forward pass over `[T, d_input]` frames. `frame_mask[t]` is false for
    /// padded frames; the classification position is never masked.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        frames: &Tensor,
        frame_mask: &[bool],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Vec<f64>, PtnCache)> {
        let t = frames.rows();
        if t == 0 || frames.is_empty() {
            return Err(Error::contract("cannot classify an empty sequence"));
        }
        if frame_mask.len() != t {
            return Err(Error::contract(format!(
                "frame mask has {} entries for {t} frames",
                frame_mask.len()
            )));
        }
        let (embedded, pose) = self.pose.forward(frames, mode, rng)?;
        let d = self.config.d_embed;
        let mut x = Tensor::zeros(&[t + 1, d]);
        x.row_mut(0).copy_from_slice(self.sequence.cls.value.data());
        x.data_mut()[d..].copy_from_slice(embedded.data());
        if self.sequence.positional_encoding {
            x.add_assign(&sinusoidal_positions(t + 1, d));
        }
        let mut key_mask = Vec::with_capacity(t + 1);
        key_mask.push(true);
        key_mask.extend_from_slice(frame_mask);

        let mut layers = Vec::with_capacity(self.sequence.layers.len());
        for layer in &self.sequence.layers {
            let (y, cache) = layer.forward(&x, &key_mask)?;
            layers.push(cache);
            x = y;
        }
        let cls_out = x.slice_rows(0, 1);
        let logits = self.classifier.forward(&cls_out)?.into_data();
        Ok((
            logits,
            PtnCache {
                pose,
                layers,
                cls_out,
                frames: t,
            },
        ))
    }

    /// Accumulates parameter gradients for `d loss / d logits`.
    pub fn backward(&mut self, cache: &PtnCache, dlogits: &[f64]) {
        let dy = Tensor::matrix(1, dlogits.len(), dlogits.to_vec()).expect("logit gradient shape");
        let dcls = self.classifier.backward(&cache.cls_out, &dy);
        let d = self.config.d_embed;
        let mut dx = Tensor::zeros(&[cache.frames + 1, d]);
        dx.row_mut(0).copy_from_slice(dcls.data());
        for (layer, lc) in self.sequence.layers.iter_mut().zip(&cache.layers).rev() {
            dx = layer.backward(lc, &dx);
        }
        let dcls_in = Tensor::vector(dx.row(0).to_vec());
        self.sequence.cls.accumulate(&dcls_in);
        let dembedded = dx.slice_rows(1, cache.frames + 1);
        self.pose.backward(&cache.pose, &dembedded);
    }

    /// Eval-mode logits.
    pub fn logits(&self, frames: &Tensor, frame_mask: &[bool]) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        self.forward(frames, frame_mask, Mode::Eval, &mut rng).map(|(l, _)| l)
    }

    /// Eval-mode logits for an unpadded post-processed sequence.
    pub fn classify(&self, seq: &KeypointSequence) -> Result<Vec<f64>> {
        let frames = sequence_frames(seq, &self.config)?;
        self.logits(&frames, &vec![true; seq.frames()])
    }

    /// L1 penalty on the input layer; adds its subgradient when `accumulate`.
    pub fn l1_penalty(&mut self, lambda: f64, accumulate: bool) -> f64 {
        let w = &mut self.pose.blocks[0].linear.weight;
        let (penalty, grad) = crate::nn::ops::l1_penalty(&w.value, lambda);
        if accumulate {
            w.accumulate(&grad);
        }
        penalty
    }

    /// The pose-embedding input layer's weights.
    pub fn input_weights(&self) -> &Tensor {
        &self.pose.blocks[0].linear.weight.value
    }

    pub fn to_checkpoint(&self, metadata: impl Into<String>) -> Checkpoint {
        Checkpoint::from_module(self, metadata)
    }

    /// Loads every tensor by name; shapes must match exactly.
    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        let mut offenders = Vec::new();
        self.visit(&mut |p| match ck.get(&p.name) {
            Some(t) if t.shape() == p.value.shape() => {}
            _ => offenders.push(p.name.clone()),
        });
        if !offenders.is_empty() {
            return Err(Error::Transfer { offenders });
        }
        self.visit_mut(&mut |p| p.value = ck.get(&p.name).expect("checked").clone());
        Ok(())
    }

    pub fn param_table(&self) -> ParamTable {
        count_params(self)
    }
}

impl Module for Ptn {
    fn visit(&self, f: &mut dyn FnMut(&Param)) {
        self.pose.visit(f);
        self.sequence.visit(f);
        self.classifier.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        self.pose.visit_mut(f);
        self.sequence.visit_mut(f);
        self.classifier.visit_mut(f);
    }
}

/// Flattens a post-processed sequence into `[T, K * D]` model input.
pub fn sequence_frames(seq: &KeypointSequence, config: &ModelConfig) -> Result<Tensor> {
    let width = seq.keypoints() * seq.dims();
    if width != config.d_input() {
        return Err(Error::contract(format!(
            "sequence frames are {} wide ({}x{}), model expects {}",
            width,
            seq.keypoints(),
            seq.dims(),
            config.d_input()
        )));
    }
    Tensor::matrix(seq.frames(), width, seq.coords().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamRow {
    pub name: String,
    pub shape: Vec<usize>,
    pub count: usize,
    pub trainable: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ParamTotals {
    pub total: usize,
    pub trainable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamTable {
    pub rows: Vec<ParamRow>,
    /// Keyed by top-level module name.
    pub modules: BTreeMap<String, ParamTotals>,
    pub total: ParamTotals,
}

impl ParamTable {
    pub fn render(&self) -> String {
        let mut out = String::from("name\tshape\tcount\ttrainable\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{:?}\t{}\t{}\n", r.name, r.shape, r.count, r.trainable));
        }
        for (m, t) in &self.modules {
            out.push_str(&format!("# {m}: {} parameters, {} trainable\n", t.total, t.trainable));
        }
        out.push_str(&format!(
            "# total: {} parameters, {} trainable\n",
            self.total.total, self.total.trainable
        ));
        out
    }
}

pub fn count_params<M: Module + ?Sized>(model: &M) -> ParamTable {
    let mut rows = Vec::new();
    model.visit(&mut |p| {
        rows.push(ParamRow {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
            count: p.count(),
            trainable: p.trainable,
        })
    });
    let mut modules: BTreeMap<String, ParamTotals> = BTreeMap::new();
    let mut total = ParamTotals::default();
    for r in &rows {
        let module = r.name.split('.').next().unwrap_or("").to_string();
        let entry = modules.entry(module).or_default();
        for t in [entry, &mut total] {
            t.total += r.count;
            if r.trainable {
                t.trainable += r.count;
            }
        }
    }
    ParamTable { rows, modules, total }
}
