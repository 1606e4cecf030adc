//! Browser bindings for three operations: filling gaps in a keypoint track,
//! normalizing a skeleton frame, and rendering a synthetic clip.
//!
//! The plain functions return `Result<_, String>` so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers turn errors into JS exceptions.

use signpose::analysis::{gen_synthetic, GapModel, SyntheticCorpusConfig};
use signpose::layout::{layout_for, EstimatorFamily};
use signpose::postproc::{impute_track, normalize_frame};
use wasm_bindgen::prelude::*;

fn family(layout: &str) -> Result<EstimatorFamily, String> {
    layout.parse().map_err(|e: signpose::Error| e.to_string())
}

/// Imputes one track. `present[t]` is nonzero when frame `t` was observed.
pub fn impute(values: &[f64], present: &[u8], dims: usize) -> Result<Vec<f64>, String> {
    if dims == 0 || values.len() != present.len() * dims {
        return Err(format!(
            "{} values do not form {} frames of {dims} coordinates",
            values.len(),
            present.len()
        ));
    }
    let mask: Vec<bool> = present.iter().map(|p| *p != 0).collect();
    Ok(impute_track(values, &mask, dims))
}

/// Normalizes one fully observed frame of the given layout.
pub fn normalize(layout: &str, coords: &[f64]) -> Result<Vec<f64>, String> {
    let layout = layout_for(family(layout)?);
    normalize_frame(coords, layout, layout.dims).map_err(|e| e.to_string())
}

/// First clip of a one-class synthetic corpus as JSON: `frames`, `keypoints`,
/// `dims`, flat `coords` and `present`, plus the group ranges for drawing.
pub fn synthetic_clip(layout: &str, seed: u64, missing: f64) -> Result<String, String> {
    if !(0.0..1.0).contains(&missing) {
        return Err("missing fraction must lie in [0, 1)".into());
    }
    let fam = family(layout)?;
    let corpus = gen_synthetic(&SyntheticCorpusConfig {
        layout: fam,
        signers: 1,
        classes: 1,
        sequences_per_class: 1,
        gaps: GapModel::for_missing_fraction(missing, 8),
        seed,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let seq = corpus.ordered_sequences()[0];
    let groups: Vec<serde_json::Value> = layout_for(fam)
        .groups
        .iter()
        .map(|g| serde_json::json!({ "name": g.name.as_str(), "start": g.range.start, "end": g.range.end }))
        .collect();
    Ok(serde_json::json!({
        "frames": seq.frames(),
        "keypoints": seq.keypoints(),
        "dims": seq.dims(),
        "coords": seq.coords(),
        "present": seq.present_mask(),
        "groups": groups,
    })
    .to_string())
}

#[wasm_bindgen(js_name = impute)]
pub fn impute_js(values: &[f64], present: &[u8], dims: usize) -> Result<Vec<f64>, JsError> {
    impute(values, present, dims).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = normalize)]
pub fn normalize_js(layout: &str, coords: &[f64]) -> Result<Vec<f64>, JsError> {
    normalize(layout, coords).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = syntheticClip)]
pub fn synthetic_clip_js(layout: &str, seed: u32, missing: f64) -> Result<String, JsError> {
    synthetic_clip(layout, seed.into(), missing).map_err(|e| JsError::new(&e))
}
