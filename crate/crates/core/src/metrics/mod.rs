//! Ground-truth matching, accuracy measures and report files.

mod matching;
mod report;

pub use matching::{
    delineation_accuracy, detection_accuracy, detection_accuracy_with, match_detections, DetectionDenominator,
    MatchResult, DEFAULT_BBOX_IOU,
};
pub use report::{
    area_histogram, evaluate_layer, level_report, level_svg, report_csv, write_report, AreaHistogram, LevelReport,
    MetricsParams, MetricsReport, CSV_HEADER, DEFAULT_AREA_EDGES_HA, M2_PER_HA,
};
