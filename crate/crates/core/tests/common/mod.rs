//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use signpose::analysis::{GapModel, StyleJitter, SyntheticCorpusConfig};
use signpose::layout::EstimatorFamily;
use signpose::model::ModelConfig;
use signpose::nn::gradcheck::{grad_check, DEFAULT_EPS};
use signpose::nn::{AdamConfig, Module, Tensor};
use signpose::postproc::{OutputDims, PipelineConfig};
use signpose::training::{SplitRatios, TrainRunConfig};

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

pub fn project(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Max relative error of input and parameter gradients for the scalar loss
/// `sum(r * forward(x))`.
pub fn check_module<M: Module + Clone>(
    module: &M,
    x: &Tensor,
    r: &Tensor,
    forward: impl Fn(&M, &Tensor) -> Tensor,
    backward: impl Fn(&mut M, &Tensor, &Tensor) -> Tensor,
) -> (f64, f64) {
    let mut m = module.clone();
    m.zero_grad();
    let dx = backward(&mut m, x, r);
    let dparams = m.flat_grads();

    let input = grad_check(
        |v| project(&forward(module, &Tensor::from_vec(x.shape(), v.to_vec()).unwrap()), r),
        x.data(),
        dx.data(),
        DEFAULT_EPS,
    );
    let base = module.flat_values();
    let params = grad_check(
        |v| {
            let mut probe = module.clone();
            probe.assign_flat_values(v);
            project(&forward(&probe, x), r)
        },
        &base,
        &dparams,
        DEFAULT_EPS,
    );
    (input.max_relative_error, params.max_relative_error)
}

/// Brute-force imputation: for every absent frame, scan outward for the
/// nearest present frame on each side and evaluate the line through them.
pub fn impute_oracle(values: &[f64], present: &[bool], dims: usize) -> Vec<f64> {
    let n = present.len();
    let mut out = vec![0.0; values.len()];
    for t in 0..n {
        let at = |s: usize, d: usize| values[s * dims + d];
        if present[t] {
            for d in 0..dims {
                out[t * dims + d] = at(t, d);
            }
            continue;
        }
        let left = (0..t).rev().find(|&s| present[s]);
        let right = (t + 1..n).find(|&s| present[s]);
        for d in 0..dims {
            out[t * dims + d] = match (left, right) {
                (Some(a), Some(b)) => {
                    let slope = (at(b, d) - at(a, d)) / (b - a) as f64;
                    at(a, d) + slope * (t - a) as f64
                }
                (Some(a), None) => at(a, d),
                (None, Some(b)) => at(b, d),
                (None, None) => 0.0,
            };
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    Random,
    AllMissing,
    AllPresent,
    LeadingGap,
    TrailingGap,
    BothEnds,
}

pub const MASK_KINDS: [MaskKind; 6] = [
    MaskKind::Random,
    MaskKind::AllMissing,
    MaskKind::AllPresent,
    MaskKind::LeadingGap,
    MaskKind::TrailingGap,
    MaskKind::BothEnds,
];

/// A random track of `frames x dims` pixel-scale values and a mask of the
/// requested kind.
pub fn random_track(rng: &mut ChaCha8Rng, kind: MaskKind) -> (Vec<f64>, Vec<bool>, usize) {
    let frames = rng.gen_range(1..=40);
    let dims = rng.gen_range(1..=3);
    let values: Vec<f64> = (0..frames * dims).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
    let density = rng.gen_range(0.05..0.95);
    let mut present: Vec<bool> = (0..frames).map(|_| rng.gen_bool(density)).collect();
    match kind {
        MaskKind::Random => {}
        MaskKind::AllMissing => present.fill(false),
        MaskKind::AllPresent => present.fill(true),
        MaskKind::LeadingGap | MaskKind::TrailingGap | MaskKind::BothEnds => {
            let lead = kind != MaskKind::TrailingGap;
            let trail = kind != MaskKind::LeadingGap;
            if frames >= 3 {
                present[frames / 2] = true;
            }
            if lead {
                present[0] = false;
            }
            if trail {
                present[frames - 1] = false;
            }
        }
    }
    (values, present, dims)
}

/// A fully present pixel-space frame with well-separated anchors.
pub fn random_frame(rng: &mut ChaCha8Rng, keypoints: usize, dims: usize) -> Vec<f64> {
    (0..keypoints * dims)
        .map(|i| match i % dims {
            0 => rng.gen_range(0.0..640.0),
            1 => rng.gen_range(0.0..480.0),
            _ => rng.gen_range(-1.0..1.0),
        })
        .collect()
}

pub fn small_model(layout: EstimatorFamily, input_dims: usize, classes: usize) -> ModelConfig {
    ModelConfig {
        layout,
        input_dims,
        d_embed: 32,
        block_widths: [64; 3],
        layers: 2,
        heads: 4,
        num_classes: classes,
        ..Default::default()
    }
}

pub fn small_run(seed: u64) -> TrainRunConfig {
    TrainRunConfig {
        optimizer: AdamConfig {
            lr: 1e-3,
            ..Default::default()
        },
        ..TrainRunConfig::new(seed)
    }
}

pub const DROP_DEPTH: PipelineConfig = PipelineConfig {
    impute: true,
    normalize: true,
    output_dims: OutputDims::DropDepth,
};

/// The three rows of the post-processing ablation, best expected first.
pub const ABLATION_PIPELINES: [PipelineConfig; 3] = [
    DROP_DEPTH,
    PipelineConfig {
        impute: false,
        ..DROP_DEPTH
    },
    PipelineConfig {
        impute: false,
        normalize: false,
        ..DROP_DEPTH
    },
];

/// Low-data corpus for the ablation: few clips per signer, classes that
/// share wrist paths and differ in hand shape, strong signer style and a
/// 20% expected hand-frame loss.
pub fn ablation_corpus() -> SyntheticCorpusConfig {
    SyntheticCorpusConfig {
        signers: 24,
        classes: 30,
        sequences_per_class: 24,
        distinct_paths: Some(3),
        gaps: GapModel::for_missing_fraction(0.2, 8),
        style: StyleJitter {
            translation: 120.0,
            scale: 0.4,
            proportion: 0.15,
            handshape: 0.6,
        },
        noise: 0.1,
        seed: 11,
        ..Default::default()
    }
}

/// Half of the signers go to validation so that a few points of accuracy
/// are resolvable.
pub const ABLATION_RATIOS: SplitRatios = SplitRatios {
    train: 0.34,
    validation: 0.5,
    test: 0.16,
};
