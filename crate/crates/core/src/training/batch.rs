use std::collections::BTreeMap;

use super::split::DatasetSplit;
use crate::error::{Error, Result};
use crate::layout::layout_for;
use crate::model::{sequence_frames, ModelConfig};
use crate::nn::Tensor;
use crate::postproc::{postprocess, PipelineConfig};
use crate::sequence::{AnnotationRecord, KeypointSequence};

/// A post-processed, flattened sequence `[T, d_input]` with its class id.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub frames: Tensor,
    pub label: usize,
}

/// Zero-padded sequences of a mini-batch with their frame masks.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBatch {
    /// Each `[T_max, d_input]`.
    pub frames: Vec<Tensor>,
    pub masks: Vec<Vec<bool>>,
    pub labels: Vec<usize>,
}

impl PaddedBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn max_frames(&self) -> usize {
        self.frames.first().map_or(0, Tensor::rows)
    }
}

/// Pads every sequence with zero frames to the longest one in the batch.
pub fn pad_and_mask(batch: &[&Example]) -> Result<PaddedBatch> {
    let first = batch.first().ok_or_else(|| Error::contract("cannot pad an empty batch"))?;
    let width = first.frames.cols();
    if batch.iter().any(|e| e.frames.cols() != width) {
        return Err(Error::contract("batch mixes frame widths"));
    }
    let t_max = batch.iter().map(|e| e.frames.rows()).max().unwrap_or(0);
    let mut out = PaddedBatch {
        frames: Vec::with_capacity(batch.len()),
        masks: Vec::with_capacity(batch.len()),
        labels: Vec::with_capacity(batch.len()),
    };
    for e in batch {
        let t = e.frames.rows();
        let mut data = e.frames.data().to_vec();
        data.resize(t_max * width, 0.0);
        out.frames.push(Tensor::matrix(t_max, width, data)?);
        let mut mask = vec![true; t];
        mask.resize(t_max, false);
        out.masks.push(mask);
        out.labels.push(e.label);
    }
    Ok(out)
}

/// Post-processes and flattens the sequences behind `records`.
pub fn build_examples(
    records: &[AnnotationRecord],
    sequences: &BTreeMap<String, KeypointSequence>,
    vocabulary: &[String],
    pipeline: &PipelineConfig,
    model: &ModelConfig,
) -> Result<Vec<Example>> {
    let layout = layout_for(model.layout);
    records
        .iter()
        .map(|r| {
            let seq = sequences
                .get(&r.sequence)
                .ok_or_else(|| Error::contract(format!("no keypoint sequence named {:?}", r.sequence)))?;
            let label = vocabulary
                .iter()
                .position(|v| *v == r.gloss_label)
                .ok_or_else(|| Error::contract(format!("label {:?} is not in the vocabulary", r.gloss_label)))?;
            let processed = postprocess(seq, layout, pipeline)?;
            Ok(Example {
                frames: sequence_frames(&processed, model)?,
                label,
            })
        })
        .collect()
}

/// Train and validation examples for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
}

impl TrainData {
    pub fn from_split(
        split: &DatasetSplit,
        sequences: &BTreeMap<String, KeypointSequence>,
        pipeline: &PipelineConfig,
        model: &ModelConfig,
    ) -> Result<Self> {
        Ok(Self {
            train: build_examples(&split.train, sequences, &split.vocabulary, pipeline, model)?,
            validation: build_examples(&split.validation, sequences, &split.vocabulary, pipeline, model)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(t: usize, label: usize) -> Example {
        Example {
            frames: Tensor::matrix(t, 2, (0..t * 2).map(|v| v as f64 + 1.0).collect()).unwrap(),
            label,
        }
    }

    #[test]
    fn pads_to_longest() {
        let (a, b) = (example(3, 0), example(5, 1));
        let batch = pad_and_mask(&[&a, &b]).unwrap();
        assert_eq!(batch.max_frames(), 5);
        assert_eq!(batch.masks[0], vec![true, true, true, false, false]);
        assert_eq!(batch.masks[1], vec![true; 5]);
        assert_eq!(&batch.frames[0].data()[..6], a.frames.data());
        assert!(batch.frames[0].data()[6..].iter().all(|v| *v == 0.0));
        assert_eq!(batch.labels, vec![0, 1]);
    }

    #[test]
    fn single_element_is_unpadded() {
        let a = example(4, 2);
        let batch = pad_and_mask(&[&a]).unwrap();
        assert_eq!(batch.frames[0], a.frames);
        assert_eq!(batch.masks[0], vec![true; 4]);
    }

    #[test]
    fn empty_batch() {
        assert!(pad_and_mask(&[]).is_err());
    }
}
