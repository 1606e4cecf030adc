//! The keypoint sequence container, annotation records, and validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{layout_for, EstimatorFamily, MissingGranularity, SkeletonLayout};

/// Keypoint coordinates over time with a presence mask.
///
/// Coordinates are stored frame-major as `T x K x D`. Positions marked
/// absent are canonicalized to zero on construction and carry no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSequence {
    pub layout: EstimatorFamily,
    frames: usize,
    keypoints: usize,
    dims: usize,
    coords: Vec<f64>,
    present: Vec<bool>,
    confidence: Option<Vec<f64>>,
    pub label: Option<usize>,
    pub gloss: Option<String>,
    pub signer_id: Option<String>,
}

impl KeypointSequence {
    pub fn new(
        layout: EstimatorFamily,
        frames: usize,
        keypoints: usize,
        dims: usize,
        mut coords: Vec<f64>,
        present: Vec<bool>,
        mut confidence: Option<Vec<f64>>,
    ) -> Result<Self> {
        if frames == 0 {
            return Err(Error::contract("a keypoint sequence needs at least one frame"));
        }
        if keypoints == 0 || dims == 0 {
            return Err(Error::contract("keypoint count and dims must be positive"));
        }
        if coords.len() != frames * keypoints * dims {
            return Err(Error::contract(format!(
                "coordinate buffer has {} values, expected {frames}x{keypoints}x{dims}",
                coords.len()
            )));
        }
        if present.len() != frames * keypoints {
            return Err(Error::contract(format!(
                "presence mask has {} entries, expected {frames}x{keypoints}",
                present.len()
            )));
        }
        if let Some(c) = &confidence {
            if c.len() != frames * keypoints {
                return Err(Error::contract(format!(
                    "confidence buffer has {} entries, expected {frames}x{keypoints}",
                    c.len()
                )));
            }
        }
        for (i, &p) in present.iter().enumerate() {
            if !p {
                coords[i * dims..(i + 1) * dims].fill(0.0);
                if let Some(c) = confidence.as_mut() {
                    c[i] = 0.0;
                }
            }
        }
        Ok(Self {
            layout,
            frames,
            keypoints,
            dims,
            coords,
            present,
            confidence,
            label: None,
            gloss: None,
            signer_id: None,
        })
    }

    /// A sequence with every keypoint present.
    pub fn fully_present(
        layout: EstimatorFamily,
        frames: usize,
        keypoints: usize,
        dims: usize,
        coords: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            layout,
            frames,
            keypoints,
            dims,
            coords,
            vec![true; frames * keypoints],
            None,
        )
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn keypoints(&self) -> usize {
        self.keypoints
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn present_mask(&self) -> &[bool] {
        &self.present
    }

    pub fn confidence(&self) -> Option<&[f64]> {
        self.confidence.as_deref()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let w = self.keypoints * self.dims;
        &self.coords[t * w..(t + 1) * w]
    }

    pub fn frame_present(&self, t: usize) -> &[bool] {
        &self.present[t * self.keypoints..(t + 1) * self.keypoints]
    }

    pub fn point(&self, t: usize, k: usize) -> &[f64] {
        let i = (t * self.keypoints + k) * self.dims;
        &self.coords[i..i + self.dims]
    }

    pub fn is_present(&self, t: usize, k: usize) -> bool {
        self.present[t * self.keypoints + k]
    }

    /// Confidence of a keypoint observation; absent keypoints report zero.
    pub fn confidence_at(&self, t: usize, k: usize) -> Option<f64> {
        let i = t * self.keypoints + k;
        self.confidence
            .as_ref()
            .map(|c| if self.present[i] { c[i] } else { 0.0 })
    }

    pub fn count_absent(&self) -> usize {
        self.present.iter().filter(|p| !**p).count()
    }

    /// Copies label, gloss and signer from `other`.
    pub fn with_metadata_of(mut self, other: &KeypointSequence) -> Self {
        self.label = other.label;
        self.gloss = other.gloss.clone();
        self.signer_id = other.signer_id.clone();
        self
    }

    /// Rebuilds the sequence with new coordinates and presence, keeping
    /// layout, confidence and metadata.
    pub fn replace_data(&self, dims: usize, coords: Vec<f64>, present: Vec<bool>) -> Result<Self> {
        let confidence = self.confidence.clone();
        Ok(Self::new(
            self.layout,
            self.frames,
            self.keypoints,
            dims,
            coords,
            present,
            confidence,
        )?
        .with_metadata_of(self))
    }
}

/// A labelled clip reference, as produced by corpus annotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotationRecord {
    /// Identifier of the keypoint file holding the clip.
    pub sequence: String,
    pub gloss_label: String,
    pub signer_id: String,
}

impl AnnotationRecord {
    pub fn new(
        sequence: impl Into<String>,
        gloss_label: impl Into<String>,
        signer_id: impl Into<String>,
    ) -> Result<Self> {
        let rec = Self {
            sequence: sequence.into(),
            gloss_label: gloss_label.into(),
            signer_id: signer_id.into(),
        };
        if rec.gloss_label.trim().is_empty() {
            return Err(Error::contract("gloss label must be non-empty"));
        }
        if rec.signer_id.trim().is_empty() {
            return Err(Error::contract("signer id must be non-empty"));
        }
        Ok(rec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingKind {
    ShapeMismatch,
    NonFiniteCoordinate,
    PartialGroupPresence,
    ConfidenceOutOfRange,
    UnexpectedAbsence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub kind: FindingKind,
    pub frame: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn has(&self, kind: FindingKind) -> bool {
        self.findings.iter().any(|f| f.kind == kind)
    }

    fn push(&mut self, severity: Severity, kind: FindingKind, frame: Option<usize>, message: String) {
        self.findings.push(Finding {
            severity,
            kind,
            frame,
            message,
        });
    }
}

/// Checks a sequence against a layout without failing fast.
pub fn validate_sequence(seq: &KeypointSequence, layout: &SkeletonLayout) -> ValidationReport {
    let mut report = ValidationReport::default();

    if seq.layout != layout.family {
        report.push(
            Severity::Error,
            FindingKind::ShapeMismatch,
            None,
            format!("sequence layout {} differs from {}", seq.layout, layout.id()),
        );
    }
    if seq.keypoints != layout.keypoint_count {
        report.push(
            Severity::Error,
            FindingKind::ShapeMismatch,
            None,
            format!(
                "sequence has {} keypoints per frame, layout {} expects {}",
                seq.keypoints,
                layout.id(),
                layout.keypoint_count
            ),
        );
        // Group checks below index by layout ranges.
        return report;
    }
    // 3D layouts may have had depth dropped.
    if seq.dims > layout.dims || seq.dims < 2 {
        report.push(
            Severity::Error,
            FindingKind::ShapeMismatch,
            None,
            format!("sequence has {}D points, layout {} is {}D", seq.dims, layout.id(), layout.dims),
        );
    }

    for t in 0..seq.frames {
        let present = seq.frame_present(t);
        let frame = seq.frame(t);
        let bad = (0..seq.keypoints)
            .filter(|&k| present[k] && frame[k * seq.dims..(k + 1) * seq.dims].iter().any(|v| !v.is_finite()))
            .count();
        if bad > 0 {
            report.push(
                Severity::Error,
                FindingKind::NonFiniteCoordinate,
                Some(t),
                format!("{bad} present keypoints have non-finite coordinates"),
            );
        }

        if layout.missing_granularity == MissingGranularity::PerGroup {
            for g in &layout.groups {
                let n = present[g.range.clone()].iter().filter(|p| **p).count();
                if n != 0 && n != g.range.len() {
                    report.push(
                        Severity::Error,
                        FindingKind::PartialGroupPresence,
                        Some(t),
                        format!("partial group presence: {n}/{} keypoints of {}", g.range.len(), g.name),
                    );
                }
            }
        }

        if !layout.reports_absence && present.iter().any(|p| !p) {
            report.push(
                Severity::Warning,
                FindingKind::UnexpectedAbsence,
                Some(t),
                format!("{} never reports absent keypoints", layout.id()),
            );
        }
    }

    if let Some(conf) = seq.confidence() {
        let out = conf.iter().filter(|c| !(0.0..=1.0).contains(*c)).count();
        if out > 0 {
            report.push(
                Severity::Error,
                FindingKind::ConfidenceOutOfRange,
                None,
                format!("{out} confidence values outside [0, 1]"),
            );
        }
    }
    report
}

/// Converts raw OpenPose output: keypoints reported exactly at the origin
/// with zero confidence are the estimator's fallback and become absent.
pub fn ingest_openpose(frames: usize, coords: Vec<f64>, confidence: Vec<f64>) -> Result<KeypointSequence> {
    let layout = layout_for(EstimatorFamily::OpenPose);
    let k = layout.keypoint_count;
    if confidence.len() != frames * k {
        return Err(Error::contract("openpose confidence must be T x 54"));
    }
    if coords.len() != frames * k * 2 {
        return Err(Error::contract("openpose coordinates must be T x 54 x 2"));
    }
    let present = (0..frames * k)
        .map(|i| !(coords[2 * i] == 0.0 && coords[2 * i + 1] == 0.0 && confidence[i] == 0.0))
        .collect();
    KeypointSequence::new(EstimatorFamily::OpenPose, frames, k, 2, coords, present, Some(confidence))
}

/// Converts raw MMPose output; every keypoint is kept present.
pub fn ingest_mmpose(frames: usize, coords: Vec<f64>, confidence: Vec<f64>) -> Result<KeypointSequence> {
    let k = layout_for(EstimatorFamily::MmPose).keypoint_count;
    KeypointSequence::new(
        EstimatorFamily::MmPose,
        frames,
        k,
        2,
        coords,
        vec![true; frames * k],
        Some(confidence),
    )
}

/// Converts raw MediaPipe Holistic output, where each group of a frame is
/// either a full `n x 3` block or `None`.
pub fn ingest_mediapipe(
    body: &[Option<Vec<f64>>],
    left_hand: &[Option<Vec<f64>>],
    right_hand: &[Option<Vec<f64>>],
) -> Result<KeypointSequence> {
    let layout = layout_for(EstimatorFamily::MediaPipe);
    let frames = body.len();
    if left_hand.len() != frames || right_hand.len() != frames {
        return Err(Error::contract("mediapipe group streams must have equal length"));
    }
    let k = layout.keypoint_count;
    let mut coords = vec![0.0; frames * k * 3];
    let mut present = vec![false; frames * k];
    for t in 0..frames {
        for (stream, group) in [body, left_hand, right_hand].iter().zip(&layout.groups) {
            if let Some(values) = &stream[t] {
                if values.len() != group.range.len() * 3 {
                    return Err(Error::contract(format!(
                        "frame {t}: {} block has {} values, expected {}",
                        group.name,
                        values.len(),
                        group.range.len() * 3
                    )));
                }
                let start = (t * k + group.range.start) * 3;
                coords[start..start + values.len()].copy_from_slice(values);
                present[t * k + group.range.start..t * k + group.range.end].fill(true);
            }
        }
    }
    KeypointSequence::new(EstimatorFamily::MediaPipe, frames, k, 3, coords, present, None)
}
