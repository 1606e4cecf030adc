//! Skeleton layouts for the three supported pose estimator families.
//!
//! Every layout keeps the upper body plus both hands. Keypoints are ordered
//! body first, then the left hand, then the right hand; each hand uses the
//! common 21-landmark hand topology (wrist at offset 0, middle-finger knuckle
//! at offset 9).
//!
//! | family    | body | hands  | total | dims | absence        |
//! |-----------|------|--------|-------|------|----------------|
//! | openpose  | 12   | 2 x 21 | 54    | 2    | per keypoint   |
//! | mmpose    | 11   | 2 x 21 | 53    | 2    | never reported |
//! | mediapipe | 25   | 2 x 21 | 67    | 3    | per group      |

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorFamily {
    OpenPose,
    MmPose,
    MediaPipe,
}

impl EstimatorFamily {
    pub const ALL: [EstimatorFamily; 3] = [
        EstimatorFamily::OpenPose,
        EstimatorFamily::MmPose,
        EstimatorFamily::MediaPipe,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EstimatorFamily::OpenPose => "openpose",
            EstimatorFamily::MmPose => "mmpose",
            EstimatorFamily::MediaPipe => "mediapipe",
        }
    }
}

impl fmt::Display for EstimatorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EstimatorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "openpose" => Ok(EstimatorFamily::OpenPose),
            "mmpose" => Ok(EstimatorFamily::MmPose),
            "mediapipe" => Ok(EstimatorFamily::MediaPipe),
            other => Err(Error::UnknownLayout(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupName {
    Body,
    LeftHand,
    RightHand,
}

impl GroupName {
    pub const ALL: [GroupName; 3] = [GroupName::Body, GroupName::LeftHand, GroupName::RightHand];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupName::Body => "body",
            GroupName::LeftHand => "left_hand",
            GroupName::RightHand => "right_hand",
        }
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a pose estimator reports keypoints it could not locate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingGranularity {
    PerKeypoint,
    PerGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChestAnchor {
    Keypoint(usize),
    ShoulderMidpoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeypointGroup {
    pub name: GroupName,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchors {
    pub chest: ChestAnchor,
    pub left_shoulder: usize,
    pub right_shoulder: usize,
    pub left_wrist: usize,
    pub right_wrist: usize,
    pub left_middle_knuckle: usize,
    pub right_middle_knuckle: usize,
}

impl Anchors {
    /// Wrist and middle knuckle of the given hand group.
    pub fn hand(&self, group: GroupName) -> Option<(usize, usize)> {
        match group {
            GroupName::LeftHand => Some((self.left_wrist, self.left_middle_knuckle)),
            GroupName::RightHand => Some((self.right_wrist, self.right_middle_knuckle)),
            GroupName::Body => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonLayout {
    pub family: EstimatorFamily,
    pub keypoint_count: usize,
    pub dims: usize,
    pub groups: Vec<KeypointGroup>,
    pub anchors: Anchors,
    pub missing_granularity: MissingGranularity,
    /// False when the estimator always returns a value for every keypoint.
    pub reports_absence: bool,
    pub landmark_names: Vec<String>,
}

impl SkeletonLayout {
    pub fn id(&self) -> &'static str {
        self.family.id()
    }

    pub fn group(&self, name: GroupName) -> &KeypointGroup {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .expect("every layout defines all three groups")
    }

    pub fn group_of(&self, keypoint: usize) -> Option<GroupName> {
        self.groups
            .iter()
            .find(|g| g.range.contains(&keypoint))
            .map(|g| g.name)
    }

    /// Flattened per-frame width for `dims` coordinates per keypoint.
    pub fn frame_width(&self, dims: usize) -> usize {
        self.keypoint_count * dims
    }
}

pub const HAND_LANDMARKS: [&str; 21] = [
    "wrist",
    "thumb_cmc",
    "thumb_mcp",
    "thumb_ip",
    "thumb_tip",
    "index_mcp",
    "index_pip",
    "index_dip",
    "index_tip",
    "middle_mcp",
    "middle_pip",
    "middle_dip",
    "middle_tip",
    "ring_mcp",
    "ring_pip",
    "ring_dip",
    "ring_tip",
    "pinky_mcp",
    "pinky_pip",
    "pinky_dip",
    "pinky_tip",
];

const HAND_WRIST: usize = 0;
const HAND_MIDDLE_KNUCKLE: usize = 9;

// BODY_25 indices 0-7 and 15-18.
const OPENPOSE_BODY: [&str; 12] = [
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_eye",
    "left_eye",
    "right_ear",
    "left_ear",
];

// COCO-WholeBody indices 0-10.
const MMPOSE_BODY: [&str; 11] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
];

// Holistic pose landmarks 0-24.
const MEDIAPIPE_BODY: [&str; 25] = [
    "nose",
    "left_eye_inner",
    "left_eye",
    "left_eye_outer",
    "right_eye_inner",
    "right_eye",
    "right_eye_outer",
    "left_ear",
    "right_ear",
    "mouth_left",
    "mouth_right",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_pinky",
    "right_pinky",
    "left_index",
    "right_index",
    "left_thumb",
    "right_thumb",
    "left_hip",
    "right_hip",
];

fn build(
    family: EstimatorFamily,
    body: &[&str],
    dims: usize,
    missing_granularity: MissingGranularity,
    reports_absence: bool,
) -> SkeletonLayout {
    let nb = body.len();
    let left = nb..nb + 21;
    let right = nb + 21..nb + 42;
    let body_index = |name: &str| {
        body.iter()
            .position(|n| *n == name)
            .expect("body landmark table is complete")
    };

    let mut landmark_names: Vec<String> = body.iter().map(|s| s.to_string()).collect();
    for prefix in ["left_hand", "right_hand"] {
        landmark_names.extend(HAND_LANDMARKS.iter().map(|n| format!("{prefix}.{n}")));
    }

    SkeletonLayout {
        family,
        keypoint_count: nb + 42,
        dims,
        anchors: Anchors {
            chest: ChestAnchor::ShoulderMidpoint,
            left_shoulder: body_index("left_shoulder"),
            right_shoulder: body_index("right_shoulder"),
            left_wrist: left.start + HAND_WRIST,
            right_wrist: right.start + HAND_WRIST,
            left_middle_knuckle: left.start + HAND_MIDDLE_KNUCKLE,
            right_middle_knuckle: right.start + HAND_MIDDLE_KNUCKLE,
        },
        groups: vec![
            KeypointGroup {
                name: GroupName::Body,
                range: 0..nb,
            },
            KeypointGroup {
                name: GroupName::LeftHand,
                range: left,
            },
            KeypointGroup {
                name: GroupName::RightHand,
                range: right,
            },
        ],
        missing_granularity,
        reports_absence,
        landmark_names,
    }
}

/// The fixed layout for an estimator family.
pub fn layout_for(family: EstimatorFamily) -> &'static SkeletonLayout {
    static OPENPOSE: OnceLock<SkeletonLayout> = OnceLock::new();
    static MMPOSE: OnceLock<SkeletonLayout> = OnceLock::new();
    static MEDIAPIPE: OnceLock<SkeletonLayout> = OnceLock::new();
    match family {
        EstimatorFamily::OpenPose => OPENPOSE.get_or_init(|| {
            build(family, &OPENPOSE_BODY, 2, MissingGranularity::PerKeypoint, true)
        }),
        EstimatorFamily::MmPose => MMPOSE.get_or_init(|| {
            build(family, &MMPOSE_BODY, 2, MissingGranularity::PerKeypoint, false)
        }),
        EstimatorFamily::MediaPipe => MEDIAPIPE.get_or_init(|| {
            build(family, &MEDIAPIPE_BODY, 3, MissingGranularity::PerGroup, true)
        }),
    }
}

/// Renders the index to landmark-name table for a layout.
pub fn reference_table(layout: &SkeletonLayout) -> String {
    let mut out = format!(
        "# {} ({} keypoints, {}D)\nindex\tgroup\tlandmark\n",
        layout.id(),
        layout.keypoint_count,
        layout.dims
    );
    for (i, name) in layout.landmark_names.iter().enumerate() {
        let group = layout.group_of(i).map(GroupName::as_str).unwrap_or("?");
        out.push_str(&format!("{i}\t{group}\t{name}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keypoint_counts() {
        let op = layout_for(EstimatorFamily::OpenPose);
        assert_eq!((op.keypoint_count, op.dims), (54, 2));
        assert_eq!(op.missing_granularity, MissingGranularity::PerKeypoint);

        let mm = layout_for(EstimatorFamily::MmPose);
        assert_eq!((mm.keypoint_count, mm.dims), (53, 2));
        assert_eq!(mm.missing_granularity, MissingGranularity::PerKeypoint);
        assert!(!mm.reports_absence);

        let mp = layout_for(EstimatorFamily::MediaPipe);
        assert_eq!((mp.keypoint_count, mp.dims), (67, 3));
        assert_eq!(mp.missing_granularity, MissingGranularity::PerGroup);
    }

    #[test]
    fn groups_partition_keypoints() {
        for family in EstimatorFamily::ALL {
            let layout = layout_for(family);
            let mut owner = vec![0usize; layout.keypoint_count];
            for g in &layout.groups {
                assert!(g.range.end <= layout.keypoint_count);
                for i in g.range.clone() {
                    owner[i] += 1;
                }
            }
            assert!(owner.iter().all(|&c| c == 1), "{family}: {owner:?}");
            assert_eq!(layout.landmark_names.len(), layout.keypoint_count);
        }
    }

    #[test]
    fn anchors_lie_in_their_groups() {
        for family in EstimatorFamily::ALL {
            let l = layout_for(family);
            let a = &l.anchors;
            assert_eq!(l.group_of(a.left_shoulder), Some(GroupName::Body));
            assert_eq!(l.group_of(a.right_shoulder), Some(GroupName::Body));
            assert_eq!(l.group_of(a.left_wrist), Some(GroupName::LeftHand));
            assert_eq!(l.group_of(a.left_middle_knuckle), Some(GroupName::LeftHand));
            assert_eq!(l.group_of(a.right_wrist), Some(GroupName::RightHand));
            assert_eq!(l.group_of(a.right_middle_knuckle), Some(GroupName::RightHand));
            assert_eq!(l.landmark_names[a.left_shoulder], "left_shoulder");
            assert_eq!(l.landmark_names[a.right_middle_knuckle], "right_hand.middle_mcp");
        }
    }

    #[test]
    fn layout_is_stable_across_calls() {
        let a = layout_for(EstimatorFamily::MediaPipe);
        let b = layout_for(EstimatorFamily::MediaPipe);
        assert!(std::ptr::eq(a, b));
    }

    #[test]
    fn parse_ids() {
        for family in EstimatorFamily::ALL {
            assert_eq!(family.id().parse::<EstimatorFamily>().unwrap(), family);
        }
        assert!(matches!(
            "alphapose".parse::<EstimatorFamily>(),
            Err(Error::UnknownLayout(_))
        ));
    }
}
