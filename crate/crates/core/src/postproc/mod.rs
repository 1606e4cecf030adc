//! Keypoint post-processing: imputation, normalization, depth dropping.

mod impute;
mod normalize;

pub use impute::{impute_sequence, impute_track};
pub use normalize::{normalize_frame, MIN_REFERENCE_DISTANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::SkeletonLayout;
use crate::sequence::KeypointSequence;
use normalize::Normalizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputDims {
    #[default]
    Keep,
    DropDepth,
}

/// Post-processing switches. Stages always run in the order
/// impute, normalize, drop depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub impute: bool,
    pub normalize: bool,
    pub output_dims: OutputDims,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            impute: true,
            normalize: true,
            output_dims: OutputDims::Keep,
        }
    }
}

impl PipelineConfig {
    pub const IDENTITY: PipelineConfig = PipelineConfig {
        impute: false,
        normalize: false,
        output_dims: OutputDims::Keep,
    };

    pub fn check(&self, layout: &SkeletonLayout) -> Result<()> {
        if self.output_dims == OutputDims::DropDepth && layout.dims != 3 {
            return Err(Error::contract(format!(
                "cannot drop depth from the {}D {} layout",
                layout.dims,
                layout.id()
            )));
        }
        Ok(())
    }

    /// Coordinates per keypoint after post-processing.
    pub fn output_width(&self, layout: &SkeletonLayout) -> usize {
        match self.output_dims {
            OutputDims::Keep => layout.dims,
            OutputDims::DropDepth => 2,
        }
    }

    /// Whether imputation does anything for this layout.
    pub fn imputes(&self, layout: &SkeletonLayout) -> bool {
        self.impute && layout.reports_absence
    }

    /// Short row label, e.g. `norm+impute`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.normalize {
            parts.push("norm");
        }
        if self.impute {
            parts.push("impute");
        }
        if self.output_dims == OutputDims::DropDepth {
            parts.push("2d");
        }
        if parts.is_empty() {
            "raw".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Runs the configured pipeline over a sequence.
pub fn postprocess(
    seq: &KeypointSequence,
    layout: &SkeletonLayout,
    config: &PipelineConfig,
) -> Result<KeypointSequence> {
    config.check(layout)?;
    if seq.keypoints() != layout.keypoint_count {
        return Err(Error::contract(format!(
            "sequence has {} keypoints, layout {} expects {}",
            seq.keypoints(),
            layout.id(),
            layout.keypoint_count
        )));
    }

    let imputed = config.imputes(layout);
    // Reference keypoints that are absent in every frame. After imputation
    // they are all zero and cannot anchor a transform.
    let unobserved: Vec<usize> = if imputed {
        normalize::reference_keypoints(layout)
            .into_iter()
            .filter(|&k| (0..seq.frames()).all(|t| !seq.is_present(t, k)))
            .collect()
    } else {
        Vec::new()
    };
    let mut out = if imputed { impute_sequence(seq, layout) } else { seq.clone() };

    if config.normalize {
        let (k, d) = (out.keypoints(), out.dims());
        let mut coords = out.coords().to_vec();
        let mut present = out.present_mask().to_vec();
        for t in 0..out.frames() {
            for &u in &unobserved {
                present[t * k + u] = false;
            }
        }
        let mut norm = Normalizer::default();
        for t in 0..out.frames() {
            norm.apply(
                t,
                &mut coords[t * k * d..(t + 1) * k * d],
                &mut present[t * k..(t + 1) * k],
                layout,
                d,
            )?;
        }
        if imputed {
            // Groups that could not be normalized were zeroed; they still
            // count as filled.
            present.fill(true);
        }
        out = out.replace_data(d, coords, present)?;
    }

    if config.output_dims == OutputDims::DropDepth && out.dims() == 3 {
        let coords: Vec<f64> = out.coords().chunks_exact(3).flat_map(|p| [p[0], p[1]]).collect();
        out = out.replace_data(2, coords, out.present_mask().to_vec())?;
    }
    Ok(out)
}
