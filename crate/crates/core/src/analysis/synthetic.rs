//! Seeded synthetic signing corpus.
//!
//! Each class is a motion template: a wrist path for the dominant hand
//! (line, ellipse or bounce), optionally mirrored by the other hand, and a
//! hand shape that may change part way through. Templates are rendered on a
//! rest skeleton in shoulder-width units, perturbed by per-signer body
//! proportions and per-clip timing, then mapped to pixel coordinates with a
//! per-signer translation and scale. Hand groups lose frames according to a
//! gap model; how a gap shows up depends on the estimator family.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::layout::{layout_for, EstimatorFamily, GroupName, SkeletonLayout};
use crate::sequence::{ingest_mediapipe, ingest_mmpose, ingest_openpose, AnnotationRecord, KeypointSequence};

/// Gaps start with `probability` at each frame outside a gap and last a
/// uniformly drawn `1..=max_length` frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapModel {
    pub probability: f64,
    pub max_length: usize,
}

impl GapModel {
    pub const NONE: GapModel = GapModel {
        probability: 0.0,
        max_length: 1,
    };

    /// Start probability whose long-run missing fraction is `fraction`.
    pub fn for_missing_fraction(fraction: f64, max_length: usize) -> Self {
        let mean = (max_length as f64 + 1.0) / 2.0;
        Self {
            probability: fraction / (mean * (1.0 - fraction) + fraction),
            max_length,
        }
    }

    /// Long-run fraction of missing frames on an unbounded track.
    pub fn stationary_fraction(&self) -> f64 {
        let mean = (self.max_length as f64 + 1.0) / 2.0;
        let p = self.probability;
        p * mean / (p * mean + 1.0 - p)
    }

    /// Exact expected number of missing frames on a `frames`-long track.
    pub fn expected_missing(&self, frames: usize) -> f64 {
        let m = self.max_length;
        let p = self.probability;
        // dist[r]: probability that r more frames of an ongoing gap follow.
        let mut dist = vec![0.0; m];
        dist[0] = 1.0;
        let mut missing = 0.0;
        for _ in 0..frames {
            let mut next = vec![0.0; m];
            let idle = dist[0];
            missing += idle * p;
            next[0] += idle * (1.0 - p);
            for l in 1..=m {
                next[l - 1] += idle * p / m as f64;
            }
            for r in 1..m {
                missing += dist[r];
                next[r - 1] += dist[r];
            }
            dist = next;
        }
        missing
    }

    fn sample<R: Rng + ?Sized>(&self, frames: usize, rng: &mut R) -> Vec<bool> {
        let mut present = vec![true; frames];
        let mut remaining = 0;
        for slot in present.iter_mut() {
            if remaining > 0 {
                *slot = false;
                remaining -= 1;
            } else if rng.gen::<f64>() < self.probability {
                *slot = false;
                remaining = rng.gen_range(1..=self.max_length) - 1;
            }
        }
        present
    }

    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) || self.max_length == 0 {
            return Err(Error::contract("gap probability must lie in [0, 1] and gaps last at least one frame"));
        }
        Ok(())
    }
}

/// Per-signer variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleJitter {
    /// Maximum offset of the signer in pixels along each axis.
    pub translation: f64,
    /// Signer scale is `exp(u)` for `u` uniform in `[-scale, scale]`.
    pub scale: f64,
    /// Relative variation of body proportions and motion amplitude.
    pub proportion: f64,
    /// Maximum per-signer offset added to every finger flexion, in radians.
    pub handshape: f64,
}

impl Default for StyleJitter {
    fn default() -> Self {
        Self {
            translation: 120.0,
            scale: 0.4,
            proportion: 0.1,
            handshape: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCorpusConfig {
    pub layout: EstimatorFamily,
    pub signers: usize,
    pub classes: usize,
    /// Clips per class, dealt to signers round-robin.
    pub sequences_per_class: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    /// When set, classes cycle through this many wrist paths and differ
    /// only in hand shape within a path.
    pub distinct_paths: Option<usize>,
    /// Applied independently to each hand. The body is never dropped.
    pub gaps: GapModel,
    pub style: StyleJitter,
    /// Standard deviation of per-keypoint noise in shoulder widths.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticCorpusConfig {
    fn default() -> Self {
        Self {
            layout: EstimatorFamily::MediaPipe,
            signers: 30,
            classes: 10,
            sequences_per_class: 30,
            min_frames: 12,
            max_frames: 20,
            distinct_paths: None,
            gaps: GapModel::for_missing_fraction(0.2, 8),
            style: StyleJitter::default(),
            noise: 0.01,
            seed: 0,
        }
    }
}

impl SyntheticCorpusConfig {
    pub fn check(&self) -> Result<()> {
        self.gaps.check()?;
        if self.signers == 0 || self.classes == 0 || self.sequences_per_class == 0 {
            return Err(Error::contract("signers, classes and clips per class must be positive"));
        }
        if self.min_frames < 2 || self.max_frames < self.min_frames {
            return Err(Error::contract("clip lengths need 2 <= min_frames <= max_frames"));
        }
        if !(self.noise >= 0.0) || !(self.style.scale >= 0.0) || !(self.style.translation >= 0.0) {
            return Err(Error::contract("noise and jitter magnitudes must be non-negative"));
        }
        if self.distinct_paths == Some(0) {
            return Err(Error::contract("at least one wrist path is needed"));
        }
        if !(0.0..1.0).contains(&self.style.proportion) {
            return Err(Error::contract("proportion jitter must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Expected fraction of hand frames lost to gaps, pooled over clips with
    /// uniformly distributed lengths.
    pub fn expected_missing_fraction(&self) -> f64 {
        let lengths = self.min_frames..=self.max_frames;
        let missing: f64 = lengths.clone().map(|t| self.gaps.expected_missing(t)).sum();
        let frames: usize = lengths.sum();
        missing / frames as f64
    }
}

#[derive(Debug, Clone, Copy)]
enum PathKind {
    Line,
    Ellipse,
    Bounce,
}

#[derive(Debug, Clone)]
struct WristPath {
    center: [f64; 3],
    kind: PathKind,
    amplitude: f64,
    direction: f64,
    frequency: f64,
    phase: f64,
    aspect: f64,
}

impl WristPath {
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            center: [rng.gen_range(-0.5..0.1), rng.gen_range(-0.5..0.6), rng.gen_range(0.15..0.45)],
            kind: [PathKind::Line, PathKind::Ellipse, PathKind::Bounce][rng.gen_range(0..3)],
            amplitude: rng.gen_range(0.1..0.32),
            direction: rng.gen_range(0.0..PI),
            frequency: [1.0, 1.5, 2.0][rng.gen_range(0..3)],
            phase: rng.gen_range(0.0..2.0 * PI),
            aspect: rng.gen_range(0.3..1.0),
        }
    }

    fn at(&self, tau: f64, amplitude_scale: f64) -> [f64; 3] {
        let a = self.amplitude * amplitude_scale;
        let w = 2.0 * PI * self.frequency * tau + self.phase;
        let (u, v) = match self.kind {
            PathKind::Line => (w.sin(), 0.0),
            PathKind::Ellipse => (w.cos(), self.aspect * w.sin()),
            PathKind::Bounce => ((0.5 * w).sin().abs() * 2.0 - 1.0, 0.0),
        };
        let (s, c) = self.direction.sin_cos();
        [
            self.center[0] + a * (u * c - v * s),
            self.center[1] + a * (u * s + v * c),
            self.center[2],
        ]
    }
}

#[derive(Debug, Clone)]
struct HandShape {
    /// Per-joint flexion for thumb, index, middle, ring, pinky.
    start: [f64; 5],
    end: [f64; 5],
    switch_at: f64,
    roll: f64,
    yaw: f64,
    spread: f64,
}

const CURLS: [f64; 4] = [0.0, 0.45, 0.9, 1.3];

impl HandShape {
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut curls = || std::array::from_fn(|_| CURLS[rng.gen_range(0..CURLS.len())]);
        let start: [f64; 5] = curls();
        let alt: [f64; 5] = curls();
        let changes = rng.gen_bool(0.5);
        Self {
            start,
            end: if changes { alt } else { start },
            switch_at: rng.gen_range(0.3..0.7),
            roll: rng.gen_range(-1.2..1.2),
            yaw: rng.gen_range(-0.8..0.8),
            spread: rng.gen_range(0.7..1.3),
        }
    }

    fn relaxed() -> Self {
        Self {
            start: [0.3; 5],
            end: [0.3; 5],
            switch_at: 0.5,
            roll: 0.0,
            yaw: 0.0,
            spread: 1.0,
        }
    }

    fn curls(&self, tau: f64, offset: &[f64; 5]) -> [f64; 5] {
        // Smooth step over a tenth of the clip.
        let s = 1.0 / (1.0 + (-(tau - self.switch_at) * 40.0).exp());
        std::array::from_fn(|f| self.start[f] + (self.end[f] - self.start[f]) * s + offset[f])
    }
}

#[derive(Debug, Clone)]
struct ClassTemplate {
    dominant: WristPath,
    dominant_shape: HandShape,
    two_handed: bool,
    other_shape: HandShape,
}

#[derive(Debug, Clone)]
struct Signer {
    offset: [f64; 2],
    scale: f64,
    head: f64,
    hand_size: f64,
    amplitude: f64,
    reach: [f64; 2],
    curl: [f64; 5],
}

const PIXELS_PER_SHOULDER: f64 = 120.0;
const IMAGE_CENTER: [f64; 2] = [320.0, 260.0];
const HAND_SIZE: f64 = 0.22;

// Finger base angle (radians from the hand axis) and distance from the
// wrist in hand sizes, then phalanx lengths, for index..pinky.
const FINGERS: [(f64, f64, [f64; 3]); 4] = [
    (-0.22, 0.95, [0.45, 0.3, 0.22]),
    (0.0, 1.0, [0.5, 0.32, 0.24]),
    (0.2, 0.95, [0.47, 0.3, 0.22]),
    (0.38, 0.85, [0.37, 0.24, 0.2]),
];

/// 21 hand landmarks in the hand frame (x across the palm, y towards the
/// fingers, z out of the palm), in hand sizes.
fn hand_landmarks(curls: [f64; 5], spread: f64) -> [[f64; 3]; 21] {
    let mut out = [[0.0; 3]; 21];
    let chain = |base: [f64; 3], angle: f64, lengths: [f64; 3], curl: f64, out: &mut [[f64; 3]]| {
        let u = [angle.sin(), angle.cos(), 0.0];
        let mut p = base;
        for (k, len) in lengths.iter().enumerate() {
            let phi = (k + 1) as f64 * curl;
            let d = [u[0] * phi.cos(), u[1] * phi.cos(), phi.sin()];
            p = [p[0] + len * d[0], p[1] + len * d[1], p[2] + len * d[2]];
            out[k] = p;
        }
    };
    // Thumb: carpometacarpal joint, then three segments.
    let cmc_angle = -0.9 * spread;
    let cmc = [0.3 * cmc_angle.sin(), 0.3 * cmc_angle.cos(), 0.0];
    out[1] = cmc;
    chain(cmc, -0.75 * spread, [0.35, 0.3, 0.25], curls[0], &mut out[2..5]);
    for (f, (angle, dist, lengths)) in FINGERS.iter().enumerate() {
        let a = angle * spread;
        // The middle knuckle sits exactly one hand size from the wrist.
        let base = [dist * a.sin(), dist * a.cos(), 0.0];
        let first = 5 + 4 * f;
        out[first] = base;
        chain(base, a, *lengths, curls[f + 1], &mut out[first + 1..first + 4]);
    }
    out
}

/// Rolls by `roll` in the image plane after turning by `yaw` about the
/// vertical axis.
fn orient(p: [f64; 3], roll: f64, yaw: f64) -> [f64; 3] {
    let (sy, cy) = yaw.sin_cos();
    let q = [p[0] * cy + p[2] * sy, p[1], -p[0] * sy + p[2] * cy];
    let (sr, cr) = roll.sin_cos();
    [q[0] * cr - q[1] * sr, q[0] * sr + q[1] * cr, q[2]]
}

fn hand_points(wrist: [f64; 3], shape: &HandShape, signer: &Signer, tau: f64, mirror: bool) -> [[f64; 3]; 21] {
    let local = hand_landmarks(shape.curls(tau, &signer.curl), shape.spread);
    let size = HAND_SIZE * signer.hand_size;
    let sign = if mirror { -1.0 } else { 1.0 };
    local.map(|p| {
        let o = orient([sign * p[0], p[1], p[2]], sign * shape.roll, sign * shape.yaw);
        [wrist[0] + size * o[0], wrist[1] + size * o[1], wrist[2] + size * o[2]]
    })
}

struct Pose {
    body: BTreeMap<&'static str, [f64; 3]>,
    left: [[f64; 3]; 21],
    right: [[f64; 3]; 21],
}

fn render_pose(template: &ClassTemplate, signer: &Signer, tau: f64, amplitude: f64) -> Pose {
    let mut right_wrist = template.dominant.at(tau, amplitude * signer.amplitude);
    right_wrist[0] += signer.reach[0];
    right_wrist[1] += signer.reach[1];
    let left_wrist = if template.two_handed {
        [-right_wrist[0], right_wrist[1], right_wrist[2]]
    } else {
        [0.38, -0.95, 0.05]
    };
    let right = hand_points(right_wrist, &template.dominant_shape, signer, tau, false);
    let left = hand_points(left_wrist, &template.other_shape, signer, tau, true);

    let h = signer.head;
    let rs = [-0.5, 0.0, 0.0];
    let ls = [0.5, 0.0, 0.0];
    let elbow = |s: [f64; 3], w: [f64; 3], side: f64| {
        [
            (s[0] + w[0]) / 2.0 + 0.12 * side,
            (s[1] + w[1]) / 2.0 - 0.2,
            (s[2] + w[2]) / 2.0,
        ]
    };
    let face = |x: f64, y: f64, z: f64| [x * h, 0.05 + (y - 0.05) * h, z];
    let body: BTreeMap<&'static str, [f64; 3]> = [
        ("nose", face(0.0, 0.55, 0.1)),
        ("neck", [0.0, 0.02, 0.0]),
        ("right_shoulder", rs),
        ("left_shoulder", ls),
        ("right_elbow", elbow(rs, right_wrist, -1.0)),
        ("left_elbow", elbow(ls, left_wrist, 1.0)),
        ("right_wrist", right_wrist),
        ("left_wrist", left_wrist),
        ("right_eye", face(-0.1, 0.65, 0.05)),
        ("left_eye", face(0.1, 0.65, 0.05)),
        ("right_eye_inner", face(-0.06, 0.65, 0.06)),
        ("left_eye_inner", face(0.06, 0.65, 0.06)),
        ("right_eye_outer", face(-0.14, 0.65, 0.04)),
        ("left_eye_outer", face(0.14, 0.65, 0.04)),
        ("right_ear", face(-0.2, 0.6, -0.1)),
        ("left_ear", face(0.2, 0.6, -0.1)),
        ("mouth_right", face(-0.07, 0.45, 0.08)),
        ("mouth_left", face(0.07, 0.45, 0.08)),
        ("right_hip", [-0.32, -1.3, 0.0]),
        ("left_hip", [0.32, -1.3, 0.0]),
        ("right_pinky", right[17]),
        ("left_pinky", left[17]),
        ("right_index", right[5]),
        ("left_index", left[5]),
        ("right_thumb", right[4]),
        ("left_thumb", left[4]),
    ]
    .into_iter()
    .collect();
    Pose { body, left, right }
}

struct Renderer {
    scale: f64,
    origin: [f64; 2],
}

impl Renderer {
    fn new(signer: &Signer) -> Self {
        Self {
            scale: PIXELS_PER_SHOULDER * signer.scale,
            origin: [IMAGE_CENTER[0] + signer.offset[0], IMAGE_CENTER[1] + signer.offset[1]],
        }
    }

    /// Image coordinates have y pointing down.
    fn pixel(&self, p: [f64; 3]) -> [f64; 3] {
        [
            self.origin[0] + self.scale * p[0],
            self.origin[1] - self.scale * p[1],
            self.scale * p[2],
        ]
    }
}

/// Generates the corpus described by `config`.
pub fn gen_synthetic(config: &SyntheticCorpusConfig) -> Result<Corpus> {
    config.check()?;
    let layout = layout_for(config.layout);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let paths: Vec<WristPath> = (0..config.distinct_paths.unwrap_or(0))
        .map(|_| WristPath::random(&mut rng))
        .collect();
    let templates: Vec<ClassTemplate> = (0..config.classes)
        .map(|c| {
            let dominant = if paths.is_empty() {
                WristPath::random(&mut rng)
            } else {
                paths[c % paths.len()].clone()
            };
            let dominant_shape = HandShape::random(&mut rng);
            let two_handed = rng.gen_bool(0.4);
            let other_shape = if two_handed {
                HandShape::random(&mut rng)
            } else {
                HandShape::relaxed()
            };
            ClassTemplate {
                dominant,
                dominant_shape,
                two_handed,
                other_shape,
            }
        })
        .collect();
    let style = config.style;
    let vary = |rng: &mut ChaCha8Rng| 1.0 + style.proportion * rng.gen_range(-1.0..=1.0);
    let signers: Vec<Signer> = (0..config.signers)
        .map(|_| Signer {
            offset: [
                style.translation * rng.gen_range(-1.0..=1.0),
                style.translation * rng.gen_range(-1.0..=1.0),
            ],
            scale: (style.scale * rng.gen_range(-1.0..=1.0)).exp(),
            head: vary(&mut rng),
            hand_size: vary(&mut rng),
            amplitude: vary(&mut rng),
            reach: [
                0.5 * style.proportion * rng.gen_range(-1.0..=1.0),
                0.5 * style.proportion * rng.gen_range(-1.0..=1.0),
            ],
            curl: std::array::from_fn(|_| style.handshape * rng.gen_range(-1.0..=1.0)),
        })
        .collect();

    let noise = Normal::new(0.0, config.noise.max(f64::MIN_POSITIVE)).expect("finite noise");
    let mut corpus = Corpus::default();
    for k in 0..config.sequences_per_class {
        for (c, template) in templates.iter().enumerate() {
            let s = k % config.signers;
            let name = format!("c{c:03}_s{s:03}_{k:04}");
            let frames = rng.gen_range(config.min_frames..=config.max_frames);
            let seq = render_clip(layout, template, &signers[s], frames, config, &noise, &mut rng)?;
            corpus.records.push(AnnotationRecord::new(&name, format!("SIGN{c:03}"), format!("signer{s:03}"))?);
            corpus.sequences.insert(name, seq);
        }
    }
    Ok(corpus)
}

fn render_clip(
    layout: &SkeletonLayout,
    template: &ClassTemplate,
    signer: &Signer,
    frames: usize,
    config: &SyntheticCorpusConfig,
    noise: &Normal<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<KeypointSequence> {
    let renderer = Renderer::new(signer);
    let shift = rng.gen_range(-0.05..0.05);
    let amplitude = rng.gen_range(0.9..1.1);
    let left_present = config.gaps.sample(frames, rng);
    let right_present = config.gaps.sample(frames, rng);
    let body_names = &layout.landmark_names[layout.group(GroupName::Body).range.clone()];
    let dims = layout.dims;
    let jitter = |p: [f64; 3], rng: &mut ChaCha8Rng| {
        if config.noise == 0.0 {
            p
        } else {
            [p[0] + noise.sample(rng), p[1] + noise.sample(rng), p[2] + noise.sample(rng)]
        }
    };

    let mut coords = Vec::with_capacity(frames * layout.keypoint_count * dims);
    let mut confidence = Vec::with_capacity(frames * layout.keypoint_count);
    let mut mp_groups: [Vec<Option<Vec<f64>>>; 3] = Default::default();
    for t in 0..frames {
        let tau = t as f64 / (frames - 1) as f64 + shift;
        let pose = render_pose(template, signer, tau, amplitude);
        let mut frame: Vec<[f64; 3]> = body_names.iter().map(|n| pose.body[n.as_str()]).collect();
        frame.extend(pose.left);
        frame.extend(pose.right);
        let pixels: Vec<[f64; 3]> = frame.into_iter().map(|p| renderer.pixel(jitter(p, rng))).collect();

        let hand_present = [true, left_present[t], right_present[t]];
        for (g, group) in layout.groups.iter().enumerate() {
            let present = hand_present[g];
            let is_body = group.name == GroupName::Body;
            let mut block = Vec::with_capacity(group.range.len() * dims);
            for k in group.range.clone() {
                let (p, conf) = match (present, config.layout) {
                    (true, _) => {
                        let c = if is_body { rng.gen_range(0.55..0.95) } else { rng.gen_range(0.3..0.9) };
                        (pixels[k], c)
                    }
                    // Lost hands come back as the estimator's fallback.
                    (false, EstimatorFamily::OpenPose) => ([0.0; 3], 0.0),
                    (false, EstimatorFamily::MmPose) => {
                        let wrist = pixels[group.range.start];
                        let spread = renderer.scale * 0.3;
                        (
                            [
                                wrist[0] + spread * rng.gen_range(-1.0..1.0),
                                wrist[1] + spread * rng.gen_range(-1.0..1.0),
                                0.0,
                            ],
                            rng.gen_range(0.0..0.15),
                        )
                    }
                    (false, EstimatorFamily::MediaPipe) => ([0.0; 3], 0.0),
                };
                block.extend_from_slice(&p[..dims]);
                confidence.push(conf);
            }
            if config.layout == EstimatorFamily::MediaPipe {
                mp_groups[g].push(present.then(|| block.clone()));
            }
            coords.extend(block);
        }
    }
    match config.layout {
        EstimatorFamily::OpenPose => ingest_openpose(frames, coords, confidence),
        EstimatorFamily::MmPose => ingest_mmpose(frames, coords, confidence),
        EstimatorFamily::MediaPipe => ingest_mediapipe(&mp_groups[0], &mp_groups[1], &mp_groups[2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::format_sequence;

    fn small(layout: EstimatorFamily) -> SyntheticCorpusConfig {
        SyntheticCorpusConfig {
            layout,
            signers: 4,
            classes: 3,
            sequences_per_class: 4,
            seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = gen_synthetic(&small(EstimatorFamily::OpenPose)).unwrap();
        let b = gen_synthetic(&small(EstimatorFamily::OpenPose)).unwrap();
        assert_eq!(a.format_annotations(), b.format_annotations());
        for (x, y) in a.ordered_sequences().iter().zip(b.ordered_sequences()) {
            assert_eq!(format_sequence(x), format_sequence(y));
        }
    }

    #[test]
    fn no_gaps_no_absences() {
        for family in EstimatorFamily::ALL {
            let cfg = SyntheticCorpusConfig {
                gaps: GapModel::NONE,
                ..small(family)
            };
            let corpus = gen_synthetic(&cfg).unwrap();
            assert!(corpus.sequences.values().all(|s| s.count_absent() == 0));
        }
    }

    #[test]
    fn shapes_follow_layout() {
        for family in EstimatorFamily::ALL {
            let layout = layout_for(family);
            let corpus = gen_synthetic(&small(family)).unwrap();
            assert_eq!(corpus.len(), 12);
            for seq in corpus.sequences.values() {
                assert_eq!(seq.keypoints(), layout.keypoint_count);
                assert_eq!(seq.dims(), layout.dims);
                assert!(crate::sequence::validate_sequence(seq, layout).is_empty());
            }
        }
    }

    #[test]
    fn round_robin_signers() {
        let corpus = gen_synthetic(&small(EstimatorFamily::MediaPipe)).unwrap();
        let per_signer = corpus.records.iter().filter(|r| r.signer_id == "signer001").count();
        assert_eq!(per_signer, 3);
    }

    #[test]
    fn middle_knuckle_is_one_hand_size_from_wrist() {
        let pts = hand_landmarks([0.7; 5], 1.1);
        let d = (pts[9][0].powi(2) + pts[9][1].powi(2) + pts[9][2].powi(2)).sqrt();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_fraction_formulas_agree() {
        let g = GapModel::for_missing_fraction(0.2, 8);
        assert!((g.stationary_fraction() - 0.2).abs() < 1e-12);
        // Long tracks approach the stationary fraction.
        assert!((g.expected_missing(20_000) / 20_000.0 - 0.2).abs() < 1e-3);
        assert_eq!(GapModel::NONE.expected_missing(50), 0.0);
        let always = GapModel {
            probability: 1.0,
            max_length: 1,
        };
        assert!((always.expected_missing(7) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_config() {
        let cfg = SyntheticCorpusConfig {
            min_frames: 10,
            max_frames: 5,
            ..Default::default()
        };
        assert!(gen_synthetic(&cfg).is_err());
    }
}
