//! Detection metrics: IoU, thresholded precision / recall / F1, operating
//! point selection by max F1, all-points-interpolated mAP and category rollup.
//!
//! Predictions are matched greedily in descending score order (ties keep list
//! order); each prediction takes the unmatched same-category ground truth with
//! the highest IoU at or above the IoU threshold. A prediction without a score
//! is treated as scoring 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BoundingBox;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Boxes per image id. Ground-truth boxes carry no score; predictions do.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DetectionSet(BTreeMap<String, Vec<BoundingBox>>);

/// JSONL row: `{"image_id": ..., "boxes": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageBoxes {
    pub image_id: String,
    pub boxes: Vec<BoundingBox>,
}

impl DetectionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, image_id: impl Into<String>, bbox: BoundingBox) {
        self.0.entry(image_id.into()).or_default().push(bbox);
    }

    /// Registers an image even when it has no boxes.
    pub fn add_image(&mut self, image_id: impl Into<String>) {
        self.0.entry(image_id.into()).or_default();
    }

    pub fn from_rows(rows: impl IntoIterator<Item = ImageBoxes>) -> Self {
        let mut set = Self::new();
        for row in rows {
            set.add_image(row.image_id.clone());
            for b in row.boxes {
                set.add(row.image_id.clone(), b);
            }
        }
        set
    }

    pub fn images(&self) -> impl Iterator<Item = (&str, &[BoundingBox])> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn boxes(&self, image_id: &str) -> &[BoundingBox] {
        self.0.get(image_id).map_or(&[], Vec::as_slice)
    }

    pub fn num_boxes(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn categories(&self) -> BTreeSet<&str> {
        self.0.values().flatten().map(|b| b.category.as_str()).collect()
    }

    /// Keeps only boxes of one category.
    pub fn filter_category(&self, category: &str) -> Self {
        DetectionSet(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().filter(|b| b.category == category).cloned().collect()))
                .collect(),
        )
    }

    /// Names every box category outside `taxonomy`.
    pub fn check_taxonomy(&self, taxonomy: &[String]) -> Result<()> {
        let unknown: Vec<&str> = self
            .categories()
            .into_iter()
            .filter(|c| !taxonomy.iter().any(|t| t == c))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("categories outside taxonomy: {}", unknown.join(", "))))
        }
    }
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn score(b: &BoundingBox) -> f64 {
    b.score.unwrap_or(0.0)
}

/// True-positive flag for each prediction of one image, given in match order.
fn match_image(gts: &[BoundingBox], preds: &[&BoundingBox], iou_threshold: f64) -> Vec<bool> {
    let mut taken = vec![false; gts.len()];
    preds
        .iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            for (i, g) in gts.iter().enumerate() {
                if taken[i] || g.category != p.category {
                    continue;
                }
                let o = iou(p, g);
                if o >= iou_threshold && best.is_none_or(|(_, b)| o > b) {
                    best = Some((i, o));
                }
            }
            match best {
                Some((i, _)) => {
                    taken[i] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

fn sorted_by_score<'a>(boxes: impl Iterator<Item = &'a BoundingBox>) -> Vec<&'a BoundingBox> {
    let mut v: Vec<&BoundingBox> = boxes.collect();
    v.sort_by(|a, b| score(b).total_cmp(&score(a)));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl PrecisionRecall {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        // from counts, so equal F1 values compare equal when picking thresholds
        let f1 = if tp == 0 { 0.0 } else { (2 * tp) as f64 / (2 * tp + fp + fn_) as f64 };
        PrecisionRecall {
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
        }
    }
}

fn pr_filtered(
    gt: &DetectionSet,
    pred: &DetectionSet,
    iou_threshold: f64,
    keep: impl Fn(&BoundingBox) -> bool,
) -> PrecisionRecall {
    let (mut tp, mut fp) = (0, 0);
    for (image, boxes) in pred.images() {
        let kept = sorted_by_score(boxes.iter().filter(|b| keep(b)));
        let flags = match_image(gt.boxes(image), &kept, iou_threshold);
        let hits = flags.iter().filter(|f| **f).count();
        tp += hits;
        fp += flags.len() - hits;
    }
    PrecisionRecall::from_counts(tp, fp, gt.num_boxes() - tp)
}

/// Precision, recall and F1 of predictions scoring at least `score_threshold`.
/// Precision is 0 when no prediction passes.
pub fn detection_pr(gt: &DetectionSet, pred: &DetectionSet, score_threshold: f64, iou_threshold: f64) -> PrecisionRecall {
    pr_filtered(gt, pred, iou_threshold, |b| score(b) >= score_threshold)
}

/// Like [`detection_pr`] with a threshold per category; categories missing
/// from `thresholds` use `fallback`.
pub fn detection_pr_per_class(
    gt: &DetectionSet,
    pred: &DetectionSet,
    thresholds: &BTreeMap<String, f64>,
    fallback: f64,
    iou_threshold: f64,
) -> PrecisionRecall {
    pr_filtered(gt, pred, iou_threshold, |b| {
        score(b) >= thresholds.get(&b.category).copied().unwrap_or(fallback)
    })
}

/// Distinct prediction score maximizing F1 on a validation set; ties go to the
/// lowest threshold.
pub fn select_operating_threshold(gt_val: &DetectionSet, pred_val: &DetectionSet, iou_threshold: f64) -> Result<f64> {
    let mut scores: Vec<f64> = pred_val.images().flat_map(|(_, b)| b.iter().map(score)).collect();
    if scores.is_empty() {
        return Err(Error::InvalidInput("no predictions to select a threshold from".into()));
    }
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let mut best = (scores[0], detection_pr(gt_val, pred_val, scores[0], iou_threshold).f1);
    for &t in &scores[1..] {
        let f1 = detection_pr(gt_val, pred_val, t, iou_threshold).f1;
        if f1 > best.1 {
            best = (t, f1);
        }
    }
    Ok(best.0)
}

/// Independent max-F1 threshold for every predicted category.
pub fn select_operating_thresholds_per_class(
    gt_val: &DetectionSet,
    pred_val: &DetectionSet,
    iou_threshold: f64,
) -> Result<BTreeMap<String, f64>> {
    let categories = pred_val.categories();
    if categories.is_empty() {
        return Err(Error::InvalidInput("no predictions to select a threshold from".into()));
    }
    categories
        .into_iter()
        .map(|c| {
            let t = select_operating_threshold(&gt_val.filter_category(c), &pred_val.filter_category(c), iou_threshold)?;
            Ok((c.to_string(), t))
        })
        .collect()
}

/// Area under the all-points-interpolated precision/recall curve for one class.
fn average_precision(gt: &DetectionSet, pred: &DetectionSet, category: &str, iou_threshold: f64) -> f64 {
    let num_gt = gt.images().flat_map(|(_, b)| b).filter(|b| b.category == category).count();
    if num_gt == 0 {
        return 0.0;
    }
    // (score, image, position in image) so ties resolve deterministically
    let mut ranked: Vec<(f64, &str, usize, &BoundingBox)> = pred
        .images()
        .flat_map(|(img, boxes)| {
            boxes
                .iter()
                .enumerate()
                .filter(|(_, b)| b.category == category)
                .map(move |(i, b)| (score(b), img, i, b))
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)).then(a.2.cmp(&b.2)));

    let mut taken: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(ranked.len());
    for (n, (_, img, _, p)) in ranked.iter().enumerate() {
        let gts = gt.boxes(img);
        let used = taken.entry(img).or_insert_with(|| vec![false; gts.len()]);
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in gts.iter().enumerate() {
            if used[i] || g.category != category {
                continue;
            }
            let o = iou(p, g);
            if o >= iou_threshold && best.is_none_or(|(_, b)| o > b) {
                best = Some((i, o));
            }
        }
        if let Some((i, _)) = best {
            used[i] = true;
            tp += 1;
        }
        points.push((tp as f64 / num_gt as f64, tp as f64 / (n + 1) as f64));
    }
    // precision envelope, right to left
    for i in (0..points.len().saturating_sub(1)).rev() {
        points[i].1 = points[i].1.max(points[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in points {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Unweighted mean of per-class AP over classes with at least one GT box.
pub fn detection_map(gt: &DetectionSet, pred: &DetectionSet, iou_threshold: f64) -> f64 {
    let classes = gt.categories();
    if classes.is_empty() {
        return 0.0;
    }
    let sum: f64 = classes.iter().map(|c| average_precision(gt, pred, c, iou_threshold)).sum();
    sum / classes.len() as f64
}

/// Per-class AP for every class with ground truth.
pub fn per_class_ap(gt: &DetectionSet, pred: &DetectionSet, iou_threshold: f64) -> BTreeMap<String, f64> {
    gt.categories()
        .into_iter()
        .map(|c| (c.to_string(), average_precision(gt, pred, c, iou_threshold)))
        .collect()
}

/// Replaces each fine-grained category by its coarse category.
pub fn rollup_categories(set: &DetectionSet, mapping: &BTreeMap<String, String>) -> Result<DetectionSet> {
    let unmapped: Vec<&str> = set
        .categories()
        .into_iter()
        .filter(|c| !mapping.contains_key(*c))
        .collect();
    if !unmapped.is_empty() {
        return Err(Error::InvalidInput(format!("no rollup mapping for: {}", unmapped.join(", "))));
    }
    Ok(DetectionSet(
        set.0
            .iter()
            .map(|(img, boxes)| {
                let boxes = boxes
                    .iter()
                    .map(|b| BoundingBox {
                        category: mapping[&b.category].clone(),
                        ..b.clone()
                    })
                    .collect();
                (img.clone(), boxes)
            })
            .collect(),
    ))
}
