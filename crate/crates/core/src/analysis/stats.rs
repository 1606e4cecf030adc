use serde::{Deserialize, Serialize};

use super::plot::PlotSeries;
use crate::error::{Error, Result};
use crate::layout::{EstimatorFamily, GroupName, MissingGranularity, SkeletonLayout};
use crate::sequence::KeypointSequence;

/// Fraction of frames in which each group is missing, pooled over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingStats {
    pub layout: EstimatorFamily,
    pub frames: usize,
    pub body: f64,
    pub left_hand: f64,
    pub right_hand: f64,
    /// Per-keypoint missing fraction, for per-keypoint layouts.
    pub per_keypoint: Option<Vec<f64>>,
}

impl MissingStats {
    pub fn group(&self, g: GroupName) -> f64 {
        match g {
            GroupName::Body => self.body,
            GroupName::LeftHand => self.left_hand,
            GroupName::RightHand => self.right_hand,
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("layout {}\nframes {}\n", self.layout, self.frames);
        for g in GroupName::ALL {
            out += &format!("{:<11} {:.6}\n", g.as_str(), self.group(g));
        }
        out
    }

    pub fn plot(&self, layout: &SkeletonLayout) -> Vec<PlotSeries> {
        let mut series = vec![PlotSeries::new(
            "group_missing_fraction",
            vec![0.0, 1.0, 2.0],
            GroupName::ALL.iter().map(|g| self.group(*g)).collect(),
        )];
        if let Some(per) = &self.per_keypoint {
            series.push(PlotSeries::new(
                "keypoint_missing_fraction",
                (0..layout.keypoint_count).map(|k| k as f64).collect(),
                per.clone(),
            ));
        }
        series
    }
}

/// Per-group layouts count a group as missing in a frame when any of its
/// keypoints is absent. Per-keypoint layouts average the per-keypoint
/// missing fractions over each group.
pub fn missing_stats(dataset: &[&KeypointSequence], layout: &SkeletonLayout) -> MissingStats {
    let k = layout.keypoint_count;
    let frames: usize = dataset.iter().map(|s| s.frames()).sum();
    let mut keypoint_missing = vec![0usize; k];
    let mut group_missing = [0usize; 3];
    for seq in dataset {
        for t in 0..seq.frames() {
            let present = seq.frame_present(t);
            for (i, p) in present.iter().enumerate() {
                if !p {
                    keypoint_missing[i] += 1;
                }
            }
            for (gi, g) in layout.groups.iter().enumerate() {
                if present[g.range.clone()].iter().any(|p| !p) {
                    group_missing[gi] += 1;
                }
            }
        }
    }
    let denom = frames.max(1) as f64;
    let fractions: [f64; 3] = match layout.missing_granularity {
        MissingGranularity::PerGroup => std::array::from_fn(|g| group_missing[g] as f64 / denom),
        MissingGranularity::PerKeypoint => std::array::from_fn(|g| {
            let r = layout.groups[g].range.clone();
            let n = r.len() as f64;
            r.map(|i| keypoint_missing[i] as f64 / denom).sum::<f64>() / n
        }),
    };
    let by_name = |name: GroupName| {
        let i = layout.groups.iter().position(|g| g.name == name).expect("group exists");
        fractions[i]
    };
    MissingStats {
        layout: layout.family,
        frames,
        body: by_name(GroupName::Body),
        left_hand: by_name(GroupName::LeftHand),
        right_hand: by_name(GroupName::RightHand),
        per_keypoint: (layout.missing_granularity == MissingGranularity::PerKeypoint)
            .then(|| keypoint_missing.iter().map(|m| *m as f64 / denom).collect()),
    }
}

/// How absent keypoints, whose confidence is zero, enter the histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsentPolicy {
    /// Counted with confidence 0, reproducing the estimator's fallback peak.
    #[default]
    CountAsZero,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceHistogram {
    pub bins: usize,
    pub policy: AbsentPolicy,
    pub body: Vec<u64>,
    pub hands: Vec<u64>,
}

impl ConfidenceHistogram {
    /// Bin edges `0, 1/bins, ..., 1`.
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins).map(|i| i as f64 / self.bins as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.body.iter().chain(&self.hands).sum()
    }

    pub fn render(&self) -> String {
        let edges = self.edges();
        let mut out = format!("bins {} absent {:?}\nlow\thigh\tbody\thands\n", self.bins, self.policy);
        for i in 0..self.bins {
            out += &format!("{:.4}\t{:.4}\t{}\t{}\n", edges[i], edges[i + 1], self.body[i], self.hands[i]);
        }
        out
    }

    pub fn plot(&self) -> Vec<PlotSeries> {
        let centers: Vec<f64> = (0..self.bins).map(|i| (i as f64 + 0.5) / self.bins as f64).collect();
        vec![
            PlotSeries::new("body", centers.clone(), self.body.iter().map(|c| *c as f64).collect()),
            PlotSeries::new("hands", centers, self.hands.iter().map(|c| *c as f64).collect()),
        ]
    }
}

/// Bin index `floor(c * bins)`, with 1.0 folded into the last bin.
pub fn confidence_bin(c: f64, bins: usize) -> usize {
    ((c * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

pub fn confidence_histogram(
    dataset: &[&KeypointSequence],
    layout: &SkeletonLayout,
    bins: usize,
    policy: AbsentPolicy,
) -> Result<ConfidenceHistogram> {
    if bins == 0 {
        return Err(Error::contract("histogram needs at least one bin"));
    }
    let body_range = layout.group(GroupName::Body).range.clone();
    let mut hist = ConfidenceHistogram {
        bins,
        policy,
        body: vec![0; bins],
        hands: vec![0; bins],
    };
    for seq in dataset {
        let conf = seq
            .confidence()
            .ok_or_else(|| Error::contract(format!("{} sequence carries no confidence values", seq.layout)))?;
        let present = seq.present_mask();
        for (i, c) in conf.iter().enumerate() {
            if !present[i] && policy == AbsentPolicy::Skip {
                continue;
            }
            let b = confidence_bin(*c, bins);
            if body_range.contains(&(i % seq.keypoints())) {
                hist.body[b] += 1;
            } else {
                hist.hands[b] += 1;
            }
        }
    }
    Ok(hist)
}
