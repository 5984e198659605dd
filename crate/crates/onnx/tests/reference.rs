use std::path::PathBuf;

use serde::Deserialize;
use weakseg_core::backend::{ModelBackend, ModelManifest};
use weakseg_core::{PatchClassifier, PatchModel, Raster};
use weakseg_onnx::{OnnxError, OnnxModel};

#[derive(Deserialize)]
struct Record {
    input_shape: Vec<usize>,
    input: Vec<f32>,
    output_shape: Vec<usize>,
    output: Vec<f64>,
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn check(name: &str) {
    let model = OnnxModel::load(fixture(&format!("{name}.onnx"))).unwrap();
    let rec: Record =
        serde_json::from_str(&std::fs::read_to_string(fixture(&format!("{name}.json"))).unwrap()).unwrap();
    let out = model.run_f32(&rec.input, &rec.input_shape).unwrap();
    assert_eq!(out.shape, rec.output_shape);
    let worst = out
        .data
        .iter()
        .zip(&rec.output)
        .map(|(&a, &b)| (a as f64 - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{name}: max abs difference {worst}");
}

#[test]
fn tiny_resnet_matches_reference_outputs() {
    check("tiny_resnet");
}

#[test]
fn misc_operators_match_reference_outputs() {
    check("misc_ops");
}

#[test]
fn batch_rows_are_independent() {
    let model = OnnxModel::load(fixture("tiny_resnet.onnx")).unwrap();
    let rec: Record =
        serde_json::from_str(&std::fs::read_to_string(fixture("tiny_resnet.json")).unwrap()).unwrap();
    let per = 3 * 16 * 16;
    let all = model.forward(&rec.input, [4, 3, 16, 16]).unwrap();
    for i in 0..4 {
        let one = model.forward(&rec.input[i * per..(i + 1) * per], [1, 3, 16, 16]).unwrap();
        assert_eq!(one.len(), 1);
        for (a, b) in one[0].iter().zip(&all[i]) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}

#[test]
fn drives_the_model_backend() {
    let manifest = ModelManifest::from_json(
        r#"{"input_size": 16, "channel_order": "rgb",
            "normalization": {"mean": [0.485, 0.456, 0.406], "std": [0.229, 0.224, 0.225]},
            "output_head": "softmax2", "crack_index": 1}"#,
    )
    .unwrap();
    let (w, h) = (70, 50);
    let img = Raster::new(
        w,
        h,
        (0..w * h).map(|i| ((i * 37) % 101) as f32 / 100.0).collect(),
    )
    .unwrap();
    let model = OnnxModel::load(fixture("tiny_resnet.onnx")).unwrap();
    let a = ModelBackend::new(model.clone(), manifest.clone())
        .unwrap()
        .with_batch_size(5)
        .score_patches(&img, 32, 16)
        .unwrap();
    let b = ModelBackend::new(model.clone(), manifest.clone())
        .unwrap()
        .with_batch_size(64)
        .score_patches(&img, 32, 16)
        .unwrap();
    assert_eq!((a.grid_w, a.grid_h), (4, 3));
    for (x, y) in a.scores.iter().zip(&b.scores) {
        assert!((x - y).abs() < 1e-6);
    }
    // first patch scored directly
    let backend = ModelBackend::new(model.clone(), manifest.clone()).unwrap();
    let input = backend.prepare_patch(&img, (0, 0), 32).unwrap();
    let logits = model.forward(&input, [1, 3, 16, 16]).unwrap();
    let p = manifest.crack_probability(&logits[0]).unwrap();
    assert!((p - a.scores[0]).abs() < 1e-6);
}

#[test]
fn rejects_garbage_and_unknown_ops() {
    assert!(matches!(OnnxModel::from_bytes(b"not a model"), Err(OnnxError::Decode(_))));
    let err = weakseg_core::Error::from(OnnxError::Unsupported("operator Foo".into()));
    assert_eq!(err.exit_code(), 3);
}
