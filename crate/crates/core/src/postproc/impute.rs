use crate::layout::{MissingGranularity, SkeletonLayout};
use crate::sequence::KeypointSequence;

/// Fills the absent frames of one keypoint track.
///
/// `values` holds `present.len()` frames of `dims` coordinates each. Interior
/// gaps are linearly interpolated between the nearest present neighbours,
/// leading and trailing gaps copy the first and last present frame, and a
/// track with no present frame becomes all zeros. Present frames are
/// returned unchanged.
pub fn impute_track(values: &[f64], present: &[bool], dims: usize) -> Vec<f64> {
    assert_eq!(values.len(), present.len() * dims, "track/mask length mismatch");
    let mut out = values.to_vec();
    let anchors: Vec<usize> = (0..present.len()).filter(|&t| present[t]).collect();
    let (Some(&first), Some(&last)) = (anchors.first(), anchors.last()) else {
        out.fill(0.0);
        return out;
    };

    let copy = |out: &mut [f64], from: usize, to: usize| {
        out.copy_within(from * dims..(from + 1) * dims, to * dims);
    };
    for t in 0..first {
        copy(&mut out, first, t);
    }
    for t in last + 1..present.len() {
        copy(&mut out, last, t);
    }
    for pair in anchors.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let span = (b - a) as f64;
        for d in 0..dims {
            let va = values[a * dims + d];
            let slope = (values[b * dims + d] - va) / span;
            for t in a + 1..b {
                out[t * dims + d] = va + slope * (t - a) as f64;
            }
        }
    }
    out
}

/// Imputes every absent keypoint of a sequence.
///
/// Per-keypoint layouts impute each track on its own. Per-group layouts
/// treat a group as present in a frame only when all of its keypoints are,
/// and impute the whole group from the same anchor frames.
pub fn impute_sequence(seq: &KeypointSequence, layout: &SkeletonLayout) -> KeypointSequence {
    let (frames, k, dims) = (seq.frames(), seq.keypoints(), seq.dims());
    if seq.count_absent() == 0 {
        return seq.clone();
    }
    let mut coords = seq.coords().to_vec();
    let mut track = vec![0.0; frames * dims];
    let mut mask = vec![false; frames];

    let mut fill = |kp: usize, mask: &[bool], coords: &mut Vec<f64>| {
        for t in 0..frames {
            let src = (t * k + kp) * dims;
            track[t * dims..(t + 1) * dims].copy_from_slice(&seq.coords()[src..src + dims]);
        }
        let filled = impute_track(&track, mask, dims);
        for t in 0..frames {
            let dst = (t * k + kp) * dims;
            coords[dst..dst + dims].copy_from_slice(&filled[t * dims..(t + 1) * dims]);
        }
    };

    match layout.missing_granularity {
        MissingGranularity::PerKeypoint => {
            for kp in 0..k {
                for (t, m) in mask.iter_mut().enumerate() {
                    *m = seq.is_present(t, kp);
                }
                fill(kp, &mask, &mut coords);
            }
        }
        MissingGranularity::PerGroup => {
            for group in &layout.groups {
                for (t, m) in mask.iter_mut().enumerate() {
                    *m = group.range.clone().all(|kp| seq.is_present(t, kp));
                }
                for kp in group.range.clone() {
                    fill(kp, &mask, &mut coords);
                }
            }
        }
    }
    seq.replace_data(dims, coords, vec![true; frames * k])
        .expect("imputation preserves the sequence shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{layout_for, EstimatorFamily, GroupName};

    #[test]
    fn midpoint() {
        let out = impute_track(&[0.0, 0.0, 9.0, 9.0, 2.0, 2.0], &[true, false, true], 2);
        assert_eq!(out, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn leading_gap_copies_first_present() {
        let out = impute_track(&[7.0, 7.0, 5.0, 5.0, 5.0, 5.0], &[false, true, true], 2);
        assert_eq!(out, vec![5.0; 6]);
    }

    #[test]
    fn trailing_gap_copies_last_present() {
        let out = impute_track(&[1.0, 2.0, 0.0], &[true, true, false], 1);
        assert_eq!(out, vec![1.0, 2.0, 2.0]);
    }

    #[test]
    fn all_missing_is_zero() {
        let out = impute_track(&[3.0; 6], &[false; 3], 2);
        assert_eq!(out, vec![0.0; 6]);
    }

    #[test]
    fn equal_spacing() {
        let out = impute_track(&[0.0, -1.0, -1.0, 3.0], &[true, false, false, true], 1);
        assert_eq!(out, vec![0.0, 1.0, 2.0, 3.0]);
    }

    fn mediapipe_line(frames: usize) -> KeypointSequence {
        let l = layout_for(EstimatorFamily::MediaPipe);
        let k = l.keypoint_count;
        let coords = (0..frames)
            .flat_map(|t| (0..k * 3).map(move |i| t as f64 * 10.0 + i as f64 * 0.001))
            .collect();
        KeypointSequence::fully_present(EstimatorFamily::MediaPipe, frames, k, 3, coords).unwrap()
    }

    #[test]
    fn group_gap_is_interpolated_jointly() {
        let l = layout_for(EstimatorFamily::MediaPipe);
        let full = mediapipe_line(3);
        let hand = l.group(GroupName::RightHand).range.clone();
        let mut present = full.present_mask().to_vec();
        for kp in hand.clone() {
            present[l.keypoint_count + kp] = false;
        }
        let gapped = full.replace_data(3, full.coords().to_vec(), present).unwrap();
        assert_eq!(gapped.point(1, hand.start), &[0.0; 3]);
        let out = impute_sequence(&gapped, l);
        assert_eq!(out.count_absent(), 0);
        for kp in hand {
            for (a, b) in out.point(1, kp).iter().zip(full.point(1, kp)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn per_keypoint_gap_touches_only_that_track() {
        let l = layout_for(EstimatorFamily::OpenPose);
        let k = l.keypoint_count;
        let coords: Vec<f64> = (0..3 * k * 2).map(|i| (i * 7 % 13) as f64).collect();
        let mut present = vec![true; 3 * k];
        let wrist = l.anchors.left_wrist;
        present[k + wrist] = false;
        let seq = KeypointSequence::new(EstimatorFamily::OpenPose, 3, k, 2, coords, present, None).unwrap();
        let out = impute_sequence(&seq, l);
        for t in 0..3 {
            for kp in 0..k {
                if (t, kp) != (1, wrist) {
                    assert_eq!(out.point(t, kp), seq.point(t, kp));
                }
            }
        }
        let expect: Vec<f64> = (0..2)
            .map(|d| (seq.point(0, wrist)[d] + seq.point(2, wrist)[d]) / 2.0)
            .collect();
        assert_eq!(out.point(1, wrist), &expect[..]);
    }

    #[test]
    fn no_absences_is_identity() {
        let seq = mediapipe_line(4);
        let out = impute_sequence(&seq, layout_for(EstimatorFamily::MediaPipe));
        assert_eq!(out, seq);
    }
}
