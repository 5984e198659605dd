use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::Value;
use weakseg_core::backend::{load_cam, FileBackend, ModelBackend, ModelManifest, PatchClassifier};
use weakseg_core::dataset::{make_splits, pair_images, read_name_list, write_splits, DatasetName, DatasetSpec};
use weakseg_core::eval::{classification_f1, extract_patch_labels, macro_f1_report};
use weakseg_core::grid::make_patch_grid;
use weakseg_core::io::{encode_overlay_png, encode_png, load_image, load_mask};
use weakseg_core::pipeline::{
    classifier_localisation, gold_standard_localisation, gold_standard_segment, segment_with_localisation,
    threshold_stage, SegmentationStages,
};
use weakseg_core::scoremap::{encode_scoremap, load_scoremap};
use weakseg_core::threshold::{global_otsu_segment, niblack, sauvola, NIBLACK_K, SAUVOLA_K, SAUVOLA_R};
use weakseg_core::{BinaryMask, Error, PipelineConfig, Raster, Result};
use weakseg_onnx::OnnxModel;

use crate::output::{write_atomic, OutputSet, RunManifest};
use crate::{BackendArgs, ConfigArgs, DatasetArgs, ThresholdMethod};

impl ConfigArgs {
    /// File values first, then flags.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut value = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?
            }
            None => Value::Object(Default::default()),
        };
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Usage("config must be a JSON object".into()))?;
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            let parsed = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            obj.insert(k.trim().to_string(), parsed);
        }
        if let Some(s) = self.thr_stride {
            obj.insert("thr_stride".into(), s.into());
        }
        if let Some(m) = self.otsu_mode {
            obj.insert("otsu_mode".into(), serde_json::to_value(m).expect("mode serializes"));
        }
        if self.no_bilateral {
            obj.insert("enable_bilateral".into(), false.into());
        }
        if self.no_closing {
            obj.insert("enable_closing".into(), false.into());
        }
        PipelineConfig::from_json(&value.to_string())
    }
}

impl BackendArgs {
    fn open(&self, manifest: &mut RunManifest) -> Result<Box<dyn PatchClassifier>> {
        match (&self.scores, &self.model) {
            (Some(_), Some(_)) => Err(Error::Usage("give either --scores or --model, not both".into())),
            (None, None) => Err(Error::Usage("one of --scores or --model is required".into())),
            (Some(scores), None) => {
                manifest.input("scores", scores)?;
                Ok(Box::new(FileBackend::load(scores)?))
            }
            (None, Some(model)) => {
                let mpath = self
                    .manifest
                    .as_ref()
                    .ok_or_else(|| Error::Usage("--model needs --manifest".into()))?;
                manifest.input("model", model)?;
                manifest.input("model_manifest", mpath)?;
                let backend = ModelBackend::new(OnnxModel::load(model)?, ModelManifest::load(mpath)?)?
                    .with_batch_size(self.batch_size);
                Ok(Box::new(backend))
            }
        }
    }
}

fn require_cam(cam: Option<&Path>) -> Result<&Path> {
    cam.ok_or_else(|| Error::Usage("--cam is required with a classifier backend".into()))
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into())
}

fn command_line() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn write_stages(
    out: &mut OutputSet,
    stem: &str,
    stages: &SegmentationStages,
    debug: bool,
) -> Result<()> {
    out.put("confidence", &format!("{stem}.smap"), &encode_scoremap(&stages.output))?;
    out.put("visualization", &format!("{stem}.png"), &encode_png(&stages.output)?)?;
    if debug {
        out.put(
            "localisation",
            &format!("{stem}.localisation.smap"),
            &encode_scoremap(&stages.localisation),
        )?;
        out.put(
            "threshold",
            &format!("{stem}.threshold.png"),
            &encode_png(&stages.threshold.to_raster())?,
        )?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn segment(
    image: &Path,
    backend: &BackendArgs,
    cam: Option<&Path>,
    out_dir: &Path,
    name: Option<String>,
    debug: bool,
    overlay: bool,
    config: &ConfigArgs,
) -> Result<()> {
    let cfg = config.resolve()?;
    let mut manifest = RunManifest::new(&command_line(), Some(cfg.clone()));
    let classifier = backend.open(&mut manifest)?;
    let cam_path = require_cam(cam)?;
    manifest.input("image", image)?;
    manifest.input("cam", cam_path)?;
    let img = load_image(image)?;
    let cam = load_cam(cam_path, img.width(), img.height())?;
    let loc = classifier_localisation(&img, classifier.as_ref(), &cam, &cfg)?;
    let stages = segment_with_localisation(&img, loc, &cfg)?;

    let stem = name.unwrap_or_else(|| stem_of(image));
    let mut out = OutputSet {
        dir: out_dir.to_path_buf(),
        manifest: &mut manifest,
    };
    write_stages(&mut out, &stem, &stages, debug)?;
    if overlay {
        out.put("overlay", &format!("{stem}.overlay.png"), &encode_overlay_png(&img, &stages.output)?)?;
    }
    manifest.write(&out_dir.join(format!("{stem}.manifest.json")))
}

/// Image/mask pairs of a dataset directory, optionally restricted to a
/// name list.
fn dataset_pairs(data: &DatasetArgs) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let pairs = pair_images(&data.image_dir, &data.gt_dir, &data.mask_suffix)?;
    let Some(list) = &data.names else {
        return Ok(pairs);
    };
    let mut by_name: BTreeMap<String, (PathBuf, PathBuf)> =
        pairs.into_iter().map(|(n, i, m)| (n, (i, m))).collect();
    read_name_list(list)?
        .into_iter()
        .map(|n| {
            by_name
                .remove(&n)
                .map(|(i, m)| (n.clone(), i, m))
                .ok_or_else(|| Error::Dataset(format!("listed image {n:?} has no image/mask pair")))
        })
        .collect()
}

pub fn goldstd(data: &DatasetArgs, out_dir: &Path, debug: bool, config: &ConfigArgs) -> Result<()> {
    let cfg = config.resolve()?;
    let pairs = dataset_pairs(data)?;
    if pairs.is_empty() {
        return Err(Error::Dataset(format!("no images in {}", data.image_dir.display())));
    }
    let mut manifest = RunManifest::new(&command_line(), Some(cfg.clone()));
    for (name, img, gt) in &pairs {
        manifest.input(&format!("image:{name}"), img)?;
        manifest.input(&format!("gt:{name}"), gt)?;
    }
    let results: Vec<(String, SegmentationStages)> = pairs
        .par_iter()
        .map(|(name, img, gt)| {
            let image = load_image(img)?;
            let mask = load_mask(gt)?;
            if image.dims() != mask.dims() {
                return Err(Error::Dataset(format!(
                    "{name}: image is {}x{}, mask is {}x{}",
                    image.width(),
                    image.height(),
                    mask.width(),
                    mask.height()
                )));
            }
            Ok((name.clone(), gold_standard_segment(&image, &mask, &cfg)?))
        })
        .collect::<Result<_>>()?;
    let mut out = OutputSet {
        dir: out_dir.to_path_buf(),
        manifest: &mut manifest,
    };
    for (name, stages) in &results {
        write_stages(&mut out, name, stages, debug)?;
    }
    manifest.write(&out_dir.join("manifest.json"))
}

fn load_prediction(dir: &Path, name: &str) -> Result<Raster> {
    let smap = dir.join(format!("{name}.smap"));
    if smap.exists() {
        return load_scoremap(&smap);
    }
    let png = dir.join(format!("{name}.png"));
    if png.exists() {
        return load_image(&png);
    }
    Err(Error::Dataset(format!(
        "no prediction {name}.smap or {name}.png in {}",
        dir.display()
    )))
}

pub fn eval(
    pred_dir: &Path,
    gt_dir: &Path,
    mask_suffix: &str,
    names: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let masks = weakseg_core::dataset::list_images(gt_dir)?;
    let by_name: BTreeMap<String, PathBuf> = masks
        .into_iter()
        .filter_map(|(stem, p)| stem.strip_suffix(mask_suffix).map(|n| (n.to_string(), p)))
        .collect();
    let selected: Vec<(String, PathBuf)> = match names {
        Some(list) => read_name_list(list)?
            .into_iter()
            .map(|n| {
                by_name
                    .get(&n)
                    .cloned()
                    .map(|p| (n.clone(), p))
                    .ok_or_else(|| Error::Dataset(format!("no mask for {n:?}")))
            })
            .collect::<Result<_>>()?,
        None => by_name.into_iter().collect(),
    };
    if selected.is_empty() {
        return Err(Error::Usage(format!("no masks found in {}", gt_dir.display())));
    }
    let loaded: Vec<(Raster, BinaryMask)> = selected
        .par_iter()
        .map(|(name, gt)| {
            let pred = load_prediction(pred_dir, name)?;
            let mask = load_mask(gt)?;
            if pred.dims() != mask.dims() {
                return Err(Error::Shape(format!(
                    "{name}: prediction {:?} vs mask {:?}",
                    pred.dims(),
                    mask.dims()
                )));
            }
            Ok((pred, mask))
        })
        .collect::<Result<_>>()?;
    let (preds, gts): (Vec<_>, Vec<_>) = loaded.into_iter().unzip();
    let report = macro_f1_report(&preds, &gts)?;
    eprintln!(
        "weakseg: {} images, macro F1 {:.4} at t = {:.2}",
        preds.len(),
        report.f1,
        report.best_t
    );
    emit_json(&report.to_json(), out)
}

fn emit_json(text: &str, out: Option<&Path>) -> Result<()> {
    let mut text = text.to_string();
    text.push('\n');
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn eval_cls(predictions: &Path, out: Option<&Path>) -> Result<()> {
    let mut reader = csv::Reader::from_path(predictions).map_err(|e| Error::Data(format!("{}: {e}", predictions.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data(format!("{}: missing column {name:?}", predictions.display())))
    };
    let (si, li) = (col("score")?, col("label")?);
    let (mut scores, mut labels) = (Vec::new(), Vec::new());
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
        let bad = |what: &str| Error::Data(format!("row {}: bad {what}", row + 1));
        let s: f64 = rec.get(si).and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad("score"))?;
        let l: u8 = rec
            .get(li)
            .and_then(|v| v.trim().parse().ok())
            .filter(|&l| l <= 1)
            .ok_or_else(|| bad("label"))?;
        scores.push(s);
        labels.push(l);
    }
    let f1 = classification_f1(&scores, &labels)?;
    let report = serde_json::json!({ "f1": f1, "n": scores.len() });
    emit_json(&serde_json::to_string_pretty(&report).expect("json"), out)
}

struct Tile {
    file: String,
    label: u8,
    image: String,
    x: usize,
    y: usize,
    png: Vec<u8>,
}

pub fn tile(data: &DatasetArgs, out: &Path, patch: usize, stride: usize) -> Result<()> {
    let pairs = dataset_pairs(data)?;
    let rows: Vec<Vec<Tile>> = pairs
        .par_iter()
        .map(|(name, img, gt)| {
            let image = load_image(img)?;
            let mask = load_mask(gt)?;
            if image.dims() != mask.dims() {
                return Err(Error::Dataset(format!("{name}: image and mask sizes differ")));
            }
            let grid = make_patch_grid(image.width(), image.height(), patch, stride)?;
            let labels = extract_patch_labels(&mask, patch, stride)?;
            grid.origins()
                .zip(labels)
                .map(|((x, y), label)| {
                    let values = image.window(x as isize, y as isize, patch, patch);
                    let png = encode_png(&Raster::new(patch, patch, values)?)?;
                    let sub = if label == 1 { "pos" } else { "neg" };
                    Ok(Tile {
                        file: format!("{sub}/{name}_{x}_{y}.png"),
                        label,
                        image: name.clone(),
                        x,
                        y,
                        png,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut index = csv::Writer::from_writer(Vec::new());
    index
        .write_record(["file", "label", "image", "x", "y"])
        .map_err(|e| Error::Data(e.to_string()))?;
    let (mut pos, mut neg) = (0usize, 0usize);
    for t in rows.into_iter().flatten() {
        write_atomic(&out.join(&t.file), &t.png)?;
        if t.label == 1 {
            pos += 1;
        } else {
            neg += 1;
        }
        index
            .write_record([t.file, t.label.to_string(), t.image, t.x.to_string(), t.y.to_string()])
            .map_err(|e| Error::Data(e.to_string()))?;
    }
    let bytes = index.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    write_atomic(&out.join("index.csv"), &bytes)?;
    eprintln!("weakseg: wrote {pos} positive and {neg} negative patches to {}", out.display());
    Ok(())
}

pub fn threshold(
    image: &Path,
    out_dir: &Path,
    method: ThresholdMethod,
    window: usize,
    config: &ConfigArgs,
) -> Result<()> {
    let cfg = config.resolve()?;
    let img = load_image(image)?;
    let mask = match method {
        ThresholdMethod::Patch => threshold_stage(&img, &cfg)?,
        ThresholdMethod::Global => global_otsu_segment(&img, cfg.otsu_mode)?,
        ThresholdMethod::Niblack => niblack(&img, window, NIBLACK_K)?,
        ThresholdMethod::Sauvola => sauvola(&img, window, SAUVOLA_K, SAUVOLA_R)?,
    };
    let mut manifest = RunManifest::new(&command_line(), Some(cfg));
    manifest.input("image", image)?;
    let stem = stem_of(image);
    let mut out = OutputSet {
        dir: out_dir.to_path_buf(),
        manifest: &mut manifest,
    };
    out.put("threshold", &format!("{stem}.threshold.png"), &encode_png(&mask.to_raster())?)?;
    manifest.write(&out_dir.join(format!("{stem}.threshold.manifest.json")))
}

pub fn localize(
    image: &Path,
    backend: &BackendArgs,
    cam: Option<&Path>,
    gt: Option<&Path>,
    out_dir: &Path,
    config: &ConfigArgs,
) -> Result<()> {
    let cfg = config.resolve()?;
    let mut manifest = RunManifest::new(&command_line(), Some(cfg.clone()));
    manifest.input("image", image)?;
    let img = load_image(image)?;
    let loc = match gt {
        Some(gt) => {
            if backend.scores.is_some() || backend.model.is_some() {
                return Err(Error::Usage("--gt cannot be combined with a classifier".into()));
            }
            manifest.input("gt", gt)?;
            let mask = load_mask(gt)?;
            if mask.dims() != img.dims() {
                return Err(Error::Shape("image and mask sizes differ".into()));
            }
            gold_standard_localisation(&mask, &cfg)?
        }
        None => {
            let classifier = backend.open(&mut manifest)?;
            let cam_path = require_cam(cam)?;
            manifest.input("cam", cam_path)?;
            let cam = load_cam(cam_path, img.width(), img.height())?;
            classifier_localisation(&img, classifier.as_ref(), &cam, &cfg)?
        }
    };
    let stem = stem_of(image);
    let mut out = OutputSet {
        dir: out_dir.to_path_buf(),
        manifest: &mut manifest,
    };
    out.put("localisation", &format!("{stem}.localisation.smap"), &encode_scoremap(&loc))?;
    out.put("localisation_png", &format!("{stem}.localisation.png"), &encode_png(&loc)?)?;
    manifest.write(&out_dir.join(format!("{stem}.localisation.manifest.json")))
}

pub fn splits(
    dataset: DatasetName,
    data: &DatasetArgs,
    train_list: Option<PathBuf>,
    test_list: Option<PathBuf>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let spec = DatasetSpec {
        name: dataset,
        image_dir: data.image_dir.clone(),
        mask_dir: data.gt_dir.clone(),
        mask_suffix: data.mask_suffix.clone(),
        train_list,
        test_list,
        seed,
    };
    let s = make_splits(&spec)?;
    write_splits(&s, out)?;
    eprintln!(
        "weakseg: {} train, {} val, {} test names in {}",
        s.train.len(),
        s.val.len(),
        s.test.len(),
        out.display()
    );
    Ok(())
}
