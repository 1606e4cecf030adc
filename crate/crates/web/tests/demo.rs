use signpose_web::{impute, normalize, synthetic_clip};

#[test]
fn fills_interior_gap() {
    let out = impute(&[0.0, 0.0, 4.0], &[1, 0, 1], 1).unwrap();
    assert_eq!(out, vec![0.0, 2.0, 4.0]);
}

#[test]
fn rejects_ragged_track() {
    assert!(impute(&[0.0, 1.0, 2.0], &[1, 1], 2).is_err());
}

#[test]
fn unknown_layout() {
    assert!(normalize("kinect", &[]).is_err());
}

#[test]
fn clip_json_shape() {
    let text = synthetic_clip("openpose", 4, 0.2).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let (t, k, d) = (
        v["frames"].as_u64().unwrap() as usize,
        v["keypoints"].as_u64().unwrap() as usize,
        v["dims"].as_u64().unwrap() as usize,
    );
    assert_eq!(v["coords"].as_array().unwrap().len(), t * k * d);
    assert_eq!(v["groups"].as_array().unwrap().len(), 3);
}

#[test]
fn normalized_clip_frame() {
    let text = synthetic_clip("mediapipe", 1, 0.0).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let width = v["keypoints"].as_u64().unwrap() as usize * 3;
    let frame: Vec<f64> = v["coords"].as_array().unwrap()[..width].iter().map(|x| x.as_f64().unwrap()).collect();
    let out = normalize("mediapipe", &frame).unwrap();
    assert_eq!(out.len(), width);
    assert!(out.iter().all(|x| x.is_finite()));
}
