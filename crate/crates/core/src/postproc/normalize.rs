use crate::error::{Error, Result};
use crate::layout::{ChestAnchor, GroupName, SkeletonLayout};

/// Reference distances below this are treated as degenerate.
pub const MIN_REFERENCE_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
struct GroupTransform {
    center: Vec<f64>,
    scale: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Center keypoint and the pair whose distance sets the scale.
fn reference_points(layout: &SkeletonLayout, group: GroupName) -> (Option<usize>, usize, usize) {
    let a = &layout.anchors;
    match group {
        GroupName::Body => {
            let chest = match a.chest {
                ChestAnchor::Keypoint(k) => Some(k),
                ChestAnchor::ShoulderMidpoint => None,
            };
            (chest, a.left_shoulder, a.right_shoulder)
        }
        hand => {
            let (wrist, knuckle) = a.hand(hand).expect("hand group");
            (Some(wrist), wrist, knuckle)
        }
    }
}

/// Every keypoint that some group's transform is derived from.
pub(crate) fn reference_keypoints(layout: &SkeletonLayout) -> Vec<usize> {
    let mut out = Vec::new();
    for g in &layout.groups {
        let (c, a, b) = reference_points(layout, g.name);
        out.extend(c.into_iter().chain([a, b]));
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Per-frame normalization state carried across a sequence.
#[derive(Debug, Default)]
pub(crate) struct Normalizer {
    last: [Option<GroupTransform>; 3],
}

impl Normalizer {
    /// Normalizes one frame in place.
    ///
    /// Absent keypoints are never read. A group whose reference keypoints
    /// are absent reuses the previous frame's transform, or becomes absent
    /// when there is none. A degenerate reference distance falls back to the
    /// previous frame's distance, or errors when there is none.
    pub(crate) fn apply(
        &mut self,
        frame_index: usize,
        frame: &mut [f64],
        present: &mut [bool],
        layout: &SkeletonLayout,
        dims: usize,
    ) -> Result<()> {
        let point = |frame: &[f64], k: usize| frame[k * dims..(k + 1) * dims].to_vec();
        for (slot, group) in layout.groups.iter().enumerate() {
            let (center_kp, ref_a, ref_b) = reference_points(layout, group.name);
            let anchors_present =
                present[ref_a] && present[ref_b] && center_kp.map_or(true, |c| present[c]);

            let transform = if anchors_present {
                let pa = point(frame, ref_a);
                let pb = point(frame, ref_b);
                let center = match center_kp {
                    Some(c) => point(frame, c),
                    None => pa.iter().zip(&pb).map(|(x, y)| 0.5 * (x + y)).collect(),
                };
                let mut scale = distance(&pa, &pb);
                if !(scale >= MIN_REFERENCE_DISTANCE) {
                    scale = match &self.last[slot] {
                        Some(prev) => prev.scale,
                        None => {
                            return Err(Error::DegenerateFrame {
                                frame: frame_index,
                                group: group.name,
                                distance: scale,
                            })
                        }
                    };
                }
                Some(GroupTransform { center, scale })
            } else {
                self.last[slot].clone()
            };

            match &transform {
                Some(tf) => {
                    for k in group.range.clone() {
                        if present[k] {
                            for d in 0..dims {
                                let v = &mut frame[k * dims + d];
                                *v = (*v - tf.center[d]) / tf.scale;
                            }
                        }
                    }
                }
                None => {
                    for k in group.range.clone() {
                        present[k] = false;
                        frame[k * dims..(k + 1) * dims].fill(0.0);
                    }
                }
            }
            if transform.is_some() {
                self.last[slot] = transform;
            }
        }
        Ok(())
    }
}

/// Normalizes a fully defined `K x D` frame.
///
/// Body keypoints are centered on the chest and divided by the shoulder
/// distance; each hand is centered on its own wrist and divided by the
/// wrist to middle-knuckle distance.
pub fn normalize_frame(frame: &[f64], layout: &SkeletonLayout, dims: usize) -> Result<Vec<f64>> {
    if frame.len() != layout.keypoint_count * dims {
        return Err(Error::contract(format!(
            "frame has {} values, layout {} expects {}x{dims}",
            frame.len(),
            layout.id(),
            layout.keypoint_count
        )));
    }
    let mut out = frame.to_vec();
    let mut present = vec![true; layout.keypoint_count];
    Normalizer::default().apply(0, &mut out, &mut present, layout, dims)?;
    Ok(out)
}
