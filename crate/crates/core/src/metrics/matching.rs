use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{bbox_iou, polygon_overlap, FieldPolygon, PredictionLayer, SpatialIndex};

pub const DEFAULT_BBOX_IOU: f64 = 0.5;

/// One admitted ground-truth / prediction pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub gt_id: String,
    pub pred_id: String,
    pub bbox_iou: f64,
    pub polygon_iou: f64,
    /// Intersection area, m².
    pub intersection: f64,
    pub gt_area: f64,
    pub pred_area: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MatchResult {
    fn new(gt: &FieldPolygon, pred: &FieldPolygon, bbox_iou: f64) -> Self {
        let o = polygon_overlap(gt, pred);
        let precision = o.intersection / pred.area();
        let recall = o.intersection / gt.area();
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            gt_id: gt.id.clone(),
            pred_id: pred.id.clone(),
            bbox_iou,
            polygon_iou: o.iou,
            intersection: o.intersection,
            gt_area: gt.area(),
            pred_area: pred.area(),
            precision,
            recall,
            f1,
        }
    }
}

/// Which count divides the matched total in [`detection_accuracy_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionDenominator {
    #[default]
    GroundTruth,
    Predictions,
}

/// Candidate pair before assignment: (gt index, pred index, result).
type Candidate = (usize, usize, MatchResult);

fn assign(mut cands: Vec<Candidate>, n_gt: usize, n_pred: usize) -> Vec<MatchResult> {
    cands.sort_by(|a, b| {
        b.2.polygon_iou
            .total_cmp(&a.2.polygon_iou)
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut gt_used = vec![false; n_gt];
    let mut pred_used = vec![false; n_pred];
    let mut out: Vec<(usize, MatchResult)> = Vec::new();
    for (g, p, m) in cands {
        if gt_used[g] || pred_used[p] {
            continue;
        }
        gt_used[g] = true;
        pred_used[p] = true;
        out.push((g, m));
    }
    out.sort_by_key(|(g, _)| *g);
    out.into_iter().map(|(_, m)| m).collect()
}

/// Matches predictions to ground truth. A pair is admitted when the
/// bounding-box IoU exceeds `threshold` and the polygons actually overlap;
/// admitted pairs are assigned greedily by descending polygon IoU so that
/// each side is used at most once. Results follow ground-truth order.
pub fn match_detections(pred: &PredictionLayer, gt: &PredictionLayer, threshold: f64) -> Vec<MatchResult> {
    let preds = pred.polygons();
    let index = SpatialIndex::build(preds);
    let cands: Vec<Candidate> = gt
        .polygons()
        .par_iter()
        .enumerate()
        .flat_map_iter(|(g, gp)| {
            index
                .query(gp.bbox())
                .into_iter()
                .filter_map(|p| {
                    let b = bbox_iou(gp.bbox(), preds[p].bbox());
                    if b <= threshold {
                        return None;
                    }
                    let m = MatchResult::new(gp, &preds[p], b);
                    (m.intersection > 0.0).then_some((g, p, m))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    assign(cands, gt.len(), pred.len())
}

/// Percentage of ground-truth fields that were matched.
pub fn detection_accuracy(matches: &[MatchResult], gt: &PredictionLayer) -> Result<f64> {
    detection_accuracy_with(matches, gt.len(), 0, DetectionDenominator::GroundTruth)
}

pub fn detection_accuracy_with(
    matches: &[MatchResult],
    gt_count: usize,
    pred_count: usize,
    denominator: DetectionDenominator,
) -> Result<f64> {
    let n = match denominator {
        DetectionDenominator::GroundTruth => gt_count,
        DetectionDenominator::Predictions => pred_count,
    };
    if n == 0 {
        return Err(Error::InvalidParameter(format!(
            "detection accuracy needs a nonzero {denominator:?} count"
        )));
    }
    Ok(100.0 * matches.len() as f64 / n as f64)
}

/// Mean polygon IoU over matches; `None` when there are none.
pub fn delineation_accuracy(matches: &[MatchResult]) -> Option<f64> {
    mean(matches.iter().map(|m| m.polygon_iou))
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
