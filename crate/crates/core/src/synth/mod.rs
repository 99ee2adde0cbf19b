//! Synthetic fieldscapes and a degradable mock segmenter.

mod fieldscape;
mod imagery;
mod mock;
mod stream;

pub use fieldscape::{generate_ground_truth, FieldscapeSpec, GroundTruth};
pub use imagery::{bund_mask, render_dates, DateScene};
pub use mock::{
    analytic_staircase, mock_segment, pooled_miss, DegradationSpec, MockSegmenter, Redundancy, SegmentConfig,
};

use crate::error::Result;

/// A generated scene: ground truth plus raw rasters for every date.
#[derive(Debug, Clone, PartialEq)]
pub struct Fieldscape {
    pub truth: GroundTruth,
    pub dates: Vec<DateScene>,
}

/// Ground truth and per-date imagery for `spec`; deterministic in the seed.
pub fn generate_fieldscape(spec: &FieldscapeSpec) -> Result<Fieldscape> {
    let truth = generate_ground_truth(spec)?;
    let dates = render_dates(spec, &truth)?;
    Ok(Fieldscape { truth, dates })
}
