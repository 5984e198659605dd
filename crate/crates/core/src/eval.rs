//! Macro-F1 over a precision/recall curve, patch classification F1 and
//! patch label extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::make_patch_grid;
use crate::raster::{ensure_same_dims, BinaryMask, ScoreMap};

pub const CURVE_POINTS: usize = 101;

/// Threshold `i` of the evaluation curve.
#[inline]
pub fn curve_threshold(i: usize) -> f64 {
    i as f64 / 100.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// `tp / (tp + fp)`, zero when nothing is predicted.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, zero when the ground truth is empty.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean with `0/0 = 0`.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// A pixel is predicted positive iff `pred >= t`.
pub fn confusion_at(pred: &ScoreMap, gt: &BinaryMask, t: f64) -> Result<ConfusionCounts> {
    ensure_same_dims(pred.dims(), gt.dims())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("threshold {t} outside [0,1]")));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p as f64 >= t, g != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c)
}

/// Counts at all 101 curve thresholds in one pass over the image.
pub fn confusion_curve(pred: &ScoreMap, gt: &BinaryMask) -> Result<Vec<ConfusionCounts>> {
    ensure_same_dims(pred.dims(), gt.dims())?;
    // positives at threshold i are pixels whose first failing threshold is > i
    let mut pos_hist = [0u64; CURVE_POINTS + 1];
    let mut neg_hist = [0u64; CURVE_POINTS + 1];
    let mut gt_total = 0u64;
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let p = p as f64;
        // number of thresholds i with i/100 <= p
        let mut n = ((p * 100.0).floor() as usize + 1).min(CURVE_POINTS);
        while n > 0 && curve_threshold(n - 1) > p {
            n -= 1;
        }
        while n < CURVE_POINTS && curve_threshold(n) <= p {
            n += 1;
        }
        if g != 0 {
            pos_hist[n] += 1;
            gt_total += 1;
        } else {
            neg_hist[n] += 1;
        }
    }
    // pixels with n > i are positive at threshold i
    let mut out = vec![ConfusionCounts::default(); CURVE_POINTS];
    let (mut tp, mut fp) = (0u64, 0u64);
    for i in (0..CURVE_POINTS).rev() {
        tp += pos_hist[i + 1];
        fp += neg_hist[i + 1];
        out[i] = ConfusionCounts {
            tp,
            fp,
            fn_: gt_total - tp,
        };
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub p: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub f1: f64,
    pub best_t: f64,
    pub per_threshold: Vec<CurvePoint>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Dataset macro-F1: per-threshold means of per-image precision and recall,
/// then the best harmonic mean over the curve (smallest threshold on ties).
pub fn macro_f1(preds: &[ScoreMap], gts: &[BinaryMask]) -> Result<(f64, f64, PRCurve)> {
    if preds.is_empty() {
        return Err(Error::Usage("macro-F1 needs at least one image".into()));
    }
    if preds.len() != gts.len() {
        return Err(Error::Usage(format!(
            "{} predictions but {} ground-truth masks",
            preds.len(),
            gts.len()
        )));
    }
    let curves: Vec<Vec<ConfusionCounts>> = preds
        .par_iter()
        .zip(gts.par_iter())
        .map(|(p, g)| confusion_curve(p, g))
        .collect::<Result<_>>()?;
    let n = curves.len() as f64;
    let mut points = Vec::with_capacity(CURVE_POINTS);
    let (mut best_f1, mut best_t) = (f64::NEG_INFINITY, 0.0);
    for i in 0..CURVE_POINTS {
        let (mut ps, mut rs) = (0.0, 0.0);
        for c in &curves {
            ps += c[i].precision();
            rs += c[i].recall();
        }
        let (p, r) = (ps / n, rs / n);
        let f = f1_from(p, r);
        if f > best_f1 {
            best_f1 = f;
            best_t = curve_threshold(i);
        }
        points.push(CurvePoint {
            t: curve_threshold(i),
            p,
            r,
        });
    }
    Ok((best_f1, best_t, PRCurve { points }))
}

pub fn macro_f1_report(preds: &[ScoreMap], gts: &[BinaryMask]) -> Result<MetricReport> {
    let (f1, best_t, curve) = macro_f1(preds, gts)?;
    Ok(MetricReport {
        f1,
        best_t,
        per_threshold: curve.points,
    })
}

/// F1 of the crack class with predictions `score >= 0.5`.
pub fn classification_f1(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Usage("classification F1 needs at least one item".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::Usage(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= 0.5, l != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    let den = 2 * c.tp + c.fp + c.fn_;
    Ok(ratio(2 * c.tp, den))
}

/// Label of every patch on the grid: 1 iff its clipped footprint contains a
/// crack pixel. Row-major grid order.
pub fn extract_patch_labels(gt: &BinaryMask, patch: usize, stride: usize) -> Result<Vec<u8>> {
    let grid = make_patch_grid(gt.width(), gt.height(), patch, stride)?;
    Ok(grid
        .origins()
        .map(|(x0, y0)| {
            let (x1, y1) = ((x0 + patch).min(gt.width()), (y0 + patch).min(gt.height()));
            let hit = (y0..y1).any(|y| (x0..x1).any(|x| gt.get(x, y) != 0));
            u8::from(hit)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    #[test]
    fn perfect_prediction() {
        let gt = BinaryMask::new(4, 2, vec![1, 0, 0, 1, 1, 1, 0, 0]).unwrap();
        let pred = gt.to_raster();
        let c = confusion_at(&pred, &gt, 0.5).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 4, fp: 0, fn_: 0 });
        let (f1, _, curve) = macro_f1(&[pred], &[gt]).unwrap();
        assert_eq!(f1, 1.0);
        assert_eq!(curve.points.len(), 101);
    }

    #[test]
    fn zero_threshold_marks_everything() {
        let gt = BinaryMask::new(3, 1, vec![1, 0, 0]).unwrap();
        let pred = Raster::filled(3, 1, 0.0).unwrap();
        assert_eq!(
            confusion_at(&pred, &gt, 0.0).unwrap(),
            ConfusionCounts { tp: 1, fp: 2, fn_: 0 }
        );
    }

    #[test]
    fn constant_half_prediction() {
        let gt = BinaryMask::new(2, 2, vec![1, 1, 0, 0]).unwrap();
        let pred = Raster::filled(2, 2, 0.5).unwrap();
        let (f1, t, curve) = macro_f1(&[pred], &[gt]).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(t, 0.0);
        assert_eq!(curve.points[50].r, 1.0);
        assert_eq!(curve.points[51].r, 0.0);
        assert_eq!(curve.points[51].p, 0.0);
    }

    #[test]
    fn curve_matches_pointwise_counts_at_boundaries() {
        let vals = vec![0.0, 0.01, 0.29, 0.3, 0.57, 0.58, 0.99, 1.0, 0.005, 0.015];
        let pred = Raster::new(10, 1, vals).unwrap();
        let gt = BinaryMask::new(10, 1, vec![1, 0, 1, 0, 1, 1, 0, 1, 0, 1]).unwrap();
        let curve = confusion_curve(&pred, &gt).unwrap();
        for (i, c) in curve.iter().enumerate() {
            assert_eq!(*c, confusion_at(&pred, &gt, curve_threshold(i)).unwrap(), "t index {i}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(macro_f1(&[], &[]), Err(Error::Usage(_))));
        assert!(matches!(classification_f1(&[], &[]), Err(Error::Usage(_))));
        let a = Raster::filled(2, 2, 0.0).unwrap();
        let g = BinaryMask::zeros(3, 2).unwrap();
        assert!(matches!(confusion_at(&a, &g, 0.5), Err(Error::Shape(_))));
    }

    #[test]
    fn classification_counts() {
        assert_eq!(classification_f1(&[0.9, 0.1, 0.7], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(classification_f1(&[0.0, 0.0], &[1, 1]).unwrap(), 0.0);
        let scores = [0.9, 0.6, 0.5, 0.49, 0.1, 0.8, 0.2, 0.55, 0.3, 0.0];
        let labels = [1, 0, 1, 1, 0, 1, 1, 0, 0, 0];
        // tp: 0.9, 0.5, 0.8 -> 3; fp: 0.6, 0.55 -> 2; fn: 0.49, 0.2 -> 2
        let f = classification_f1(&scores, &labels).unwrap();
        assert!((f - 6.0 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn patch_labels() {
        let mut data = vec![0u8; 200 * 150];
        data[0] = 1;
        let gt = BinaryMask::new(200, 150, data).unwrap();
        // grid 128/64 on 200x150: cols at 0, 64, 128; rows at 0, 64
        let labels = extract_patch_labels(&gt, 128, 64).unwrap();
        assert_eq!(labels, vec![1, 0, 0, 0, 0, 0]);
        let empty = BinaryMask::zeros(200, 150).unwrap();
        assert!(extract_patch_labels(&empty, 128, 64).unwrap().iter().all(|&l| l == 0));
        let full = BinaryMask::new(200, 150, vec![1; 200 * 150]).unwrap();
        assert!(extract_patch_labels(&full, 128, 64).unwrap().iter().all(|&l| l == 1));
    }
}
