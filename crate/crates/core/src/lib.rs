//! Keypoint-based isolated sign recognition.
//!
//! The crate covers the whole path from pose-estimator output to a trained
//! classifier:
//!
//! - [`layout`], [`sequence`], [`io`], [`corpus`]: skeleton layouts, the keypoint
//!   sequence container, its text file format and labelled collections.
//! - [`postproc`]: missing-keypoint imputation and skeleton normalization.
//! - [`nn`]: dense, layer-norm and masked multi-head attention layers with
//!   hand-written backward passes, Adam, and finite-difference checking.
//! - [`model`]: the pose embedding + transformer classifier.
//! - [`training`]: signer-independent splits, batching, the training loop,
//!   and staged transfer schedules.
//! - [`analysis`]: missing-keypoint statistics, confidence histograms,
//!   runtime benchmarking, ablations and the synthetic corpus generator.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod io;
pub mod layout;
pub mod model;
pub mod nn;
pub mod postproc;
pub mod sequence;
pub mod training;

pub use error::{Error, Result};
pub use layout::{layout_for, EstimatorFamily, GroupName, SkeletonLayout};
pub use sequence::{validate_sequence, AnnotationRecord, KeypointSequence};
