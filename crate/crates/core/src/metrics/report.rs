//! Per-layer metrics and the multi-level report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matching::{
    delineation_accuracy, detection_accuracy_with, match_detections, mean, DetectionDenominator, MatchResult,
    DEFAULT_BBOX_IOU,
};
use crate::error::{Error, Result};
use crate::vector::{LayerKey, Level, PredictionLayer};

pub const M2_PER_HA: f64 = 10_000.0;

/// Default histogram edges, hectares.
pub const DEFAULT_AREA_EDGES_HA: [f64; 11] = [0.0, 0.01, 0.025, 0.05, 0.1, 0.2, 0.4, 0.6, 1.0, 2.0, 5.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsParams {
    pub bbox_iou_threshold: f64,
    pub denominator: DetectionDenominator,
    pub area_edges_ha: Vec<f64>,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self {
            bbox_iou_threshold: DEFAULT_BBOX_IOU,
            denominator: DetectionDenominator::GroundTruth,
            area_edges_ha: DEFAULT_AREA_EDGES_HA.to_vec(),
        }
    }
}

/// Polygon counts per area bin. Bins are `[e_i, e_{i+1})`; areas at or
/// beyond the last edge land in `above`, below the first in `below`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaHistogram {
    pub edges_ha: Vec<f64>,
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
}

impl AreaHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.below + self.above
    }
}

/// Histogram of polygon areas in hectares.
pub fn area_histogram(layer: &PredictionLayer, edges_ha: &[f64]) -> Result<AreaHistogram> {
    histogram_of(layer.polygons().iter().map(|p| p.area() / M2_PER_HA), edges_ha)
}

pub(crate) fn histogram_of(values_ha: impl Iterator<Item = f64>, edges_ha: &[f64]) -> Result<AreaHistogram> {
    if edges_ha.len() < 2 || edges_ha.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "histogram edges must be at least two strictly increasing values".into(),
        ));
    }
    let mut h = AreaHistogram {
        edges_ha: edges_ha.to_vec(),
        counts: vec![0; edges_ha.len() - 1],
        below: 0,
        above: 0,
    };
    for v in values_ha {
        if v < edges_ha[0] {
            h.below += 1;
        } else if v >= edges_ha[edges_ha.len() - 1] {
            h.above += 1;
        } else {
            // first edge strictly greater than v, minus one
            let bin = edges_ha.partition_point(|&e| e <= v) - 1;
            h.counts[bin] += 1;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub key: LayerKey,
    pub detection_pct: f64,
    /// `None` when nothing matched.
    pub mean_iou: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
    pub mean_f1: Option<f64>,
    pub gt_total: usize,
    pub matched: usize,
    pub predictions_total: usize,
    pub histogram: AreaHistogram,
    /// Share of predictions below 0.1 ha.
    pub small_fraction: Option<f64>,
}

/// Matches one layer against ground truth and summarizes it.
pub fn evaluate_layer(
    pred: &PredictionLayer,
    gt: &PredictionLayer,
    params: &MetricsParams,
) -> Result<(MetricsReport, Vec<MatchResult>)> {
    let matches = match_detections(pred, gt, params.bbox_iou_threshold);
    let detection_pct = detection_accuracy_with(&matches, gt.len(), pred.len(), params.denominator)?;
    let small = pred.polygons().iter().filter(|p| p.area() < 0.1 * M2_PER_HA).count();
    let report = MetricsReport {
        key: pred.key.clone(),
        detection_pct,
        mean_iou: delineation_accuracy(&matches),
        mean_precision: mean(matches.iter().map(|m| m.precision)),
        mean_recall: mean(matches.iter().map(|m| m.recall)),
        mean_f1: mean(matches.iter().map(|m| m.f1)),
        gt_total: gt.len(),
        matched: matches.len(),
        predictions_total: pred.len(),
        histogram: area_histogram(pred, &params.area_edges_ha)?,
        small_fraction: (!pred.is_empty()).then(|| small as f64 / pred.len() as f64),
    };
    Ok((report, matches))
}

/// Reports for every layer, ordered by layer key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub reports: Vec<MetricsReport>,
    pub matches: Vec<(LayerKey, Vec<MatchResult>)>,
    pub gt_histogram: AreaHistogram,
}

pub fn level_report(layers: &[PredictionLayer], gt: Option<&PredictionLayer>, params: &MetricsParams) -> Result<LevelReport> {
    let gt = gt.ok_or_else(|| Error::Config("level report needs a ground-truth layer".into()))?;
    let mut evaluated: Vec<(MetricsReport, Vec<MatchResult>)> = layers
        .par_iter()
        .map(|l| evaluate_layer(l, gt, params))
        .collect::<Result<_>>()?;
    evaluated.sort_by(|a, b| a.0.key.cmp(&b.0.key));
    let (reports, matches): (Vec<_>, Vec<_>) = evaluated
        .into_iter()
        .map(|(r, m)| {
            let k = r.key.clone();
            (r, (k, m))
        })
        .unzip();
    Ok(LevelReport {
        reports,
        matches,
        gt_histogram: area_histogram(gt, &params.area_edges_ha)?,
    })
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "*".to_string(), ToString::to_string)
}

fn fixed(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.decimals$}"))
}

pub const CSV_HEADER: &str = "level,checkpoint,size,date,variant,detection_pct,mean_iou,precision,recall,f1,gt_total,matched,predictions";

/// One row per layer; combined-over dimensions print as `*`, undefined means as `NA`.
pub fn report_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let k = &r.key;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.2},{},{},{},{},{},{},{}",
            k.level,
            opt_str(&k.checkpoint),
            opt_str(&k.tile_size),
            opt_str(&k.date_id),
            opt_str(&k.variant),
            r.detection_pct,
            fixed(r.mean_iou, 4),
            fixed(r.mean_precision, 4),
            fixed(r.mean_recall, 4),
            fixed(r.mean_f1, 4),
            r.gt_total,
            r.matched,
            r.predictions_total,
        );
    }
    out
}

fn histogram_csv(label: &str, h: &AreaHistogram, out: &mut String) {
    let _ = writeln!(out, "{label},<{},{}", h.edges_ha[0], h.below);
    for (i, c) in h.counts.iter().enumerate() {
        let _ = writeln!(out, "{label},{}-{},{c}", h.edges_ha[i], h.edges_ha[i + 1]);
    }
    let _ = writeln!(out, "{label},>={},{}", h.edges_ha[h.edges_ha.len() - 1], h.above);
}

const PALETTE: [&str; 6] = ["#4878a8", "#e07b39", "#5a9e5a", "#b85450", "#8c6bb1", "#7f7f7f"];

/// Grouped bar chart of detection % for one level: groups by date, one
/// bar per remaining configuration, mean IoU ×100 as a dot on each bar.
pub fn level_svg(reports: &[MetricsReport], level: Level) -> String {
    let rows: Vec<&MetricsReport> = reports.iter().filter(|r| r.key.level == level).collect();
    let mut groups: BTreeMap<String, Vec<&MetricsReport>> = BTreeMap::new();
    for r in &rows {
        groups.entry(opt_str(&r.key.date_id)).or_default().push(r);
    }
    let series: Vec<String> = {
        let mut s: Vec<String> = rows.iter().map(|r| series_label(&r.key)).collect();
        s.sort();
        s.dedup();
        s
    };
    let (bar, gap, left, top, plot_h) = (14.0, 24.0, 56.0, 40.0, 240.0);
    let per_group = series.len().max(1) as f64 * bar;
    let width = left + groups.len().max(1) as f64 * (per_group + gap) + 20.0 + 180.0;
    let height = top + plot_h + 60.0;
    let y_of = |pct: f64| top + plot_h * (1.0 - pct.clamp(0.0, 100.0) / 100.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="13">Level {level}: detection % (bars), mean IoU x100 (dots)</text>"#);
    for tick in (0..=100).step_by(20) {
        let y = y_of(tick as f64);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##, width - 190.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick}</text>"#, left - 6.0, y + 3.0);
    }
    for (gi, (date, members)) in groups.iter().enumerate() {
        let gx = left + gap / 2.0 + gi as f64 * (per_group + gap);
        for r in members {
            let si = series.iter().position(|x| *x == series_label(&r.key)).unwrap_or(0);
            let x = gx + si as f64 * bar;
            let y = y_of(r.detection_pct);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{} {:.2}%</title></rect>"#,
                bar - 2.0,
                top + plot_h - y,
                PALETTE[si % PALETTE.len()],
                r.key,
                r.detection_pct
            );
            if let Some(iou) = r.mean_iou {
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="black"/>"#, x + (bar - 2.0) / 2.0, y_of(iou * 100.0));
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{date}</text>"#,
            gx + per_group / 2.0,
            top + plot_h + 16.0
        );
    }
    for (si, label) in series.iter().enumerate() {
        let x = width - 180.0;
        let y = top + si as f64 * 14.0;
        let _ = writeln!(s, r#"<rect x="{x:.1}" y="{y:.1}" width="10" height="10" fill="{}"/>"#, PALETTE[si % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{label}</text>"#, x + 14.0, y + 9.0);
    }
    s.push_str("</svg>\n");
    s
}

fn series_label(k: &LayerKey) -> String {
    format!("{} / {} / {}", opt_str(&k.variant), opt_str(&k.tile_size), opt_str(&k.checkpoint))
}

#[derive(Serialize)]
struct MatchDump<'a> {
    layer: String,
    key: &'a LayerKey,
    matches: &'a [MatchResult],
}

/// Writes `metrics.csv`, `level_<L>.svg` per level present, `matches.json`,
/// `areas.csv` (histograms) and `scatter.csv` (matched areas, ha).
pub fn write_report(dir: &Path, report: &LevelReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("metrics.csv", report_csv(&report.reports))?;

    let mut levels: Vec<Level> = report.reports.iter().map(|r| r.key.level).collect();
    levels.sort();
    levels.dedup();
    for level in levels {
        write(&format!("level_{level}.svg"), level_svg(&report.reports, level))?;
    }

    let dump: Vec<MatchDump> = report
        .matches
        .iter()
        .map(|(k, m)| MatchDump {
            layer: k.to_string(),
            key: k,
            matches: m,
        })
        .collect();
    let json = serde_json::to_string_pretty(&dump).map_err(|e| Error::json("matches.json", e))?;
    write("matches.json", json + "\n")?;

    let mut areas = String::from("layer,bin_ha,count\n");
    histogram_csv("reference", &report.gt_histogram, &mut areas);
    for r in &report.reports {
        histogram_csv(&r.key.to_string(), &r.histogram, &mut areas);
    }
    write("areas.csv", areas)?;

    let mut scatter = String::from("layer,gt_id,pred_id,gt_area_ha,pred_area_ha,polygon_iou\n");
    for (k, ms) in &report.matches {
        for m in ms {
            let _ = writeln!(
                scatter,
                "{k},{},{},{:.6},{:.6},{:.6}",
                m.gt_id,
                m.pred_id,
                m.gt_area / M2_PER_HA,
                m.pred_area / M2_PER_HA,
                m.polygon_iou
            );
        }
    }
    write("scatter.csv", scatter)
}
