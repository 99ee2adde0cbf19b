//! The run configuration and the staged workflow:
//! synth → preprocess → tile → segment → vectorize → merge-tiles → fuse →
//! evaluate → report.

mod config;
mod layout;
mod runlog;
mod stages;

pub use config::{AdapterSpec, DateRasters, PreprocessParams, RunConfig, SceneInput};
pub use layout::Layout;
pub use runlog::RunLog;
pub use stages::{Pipeline, SegmentSummary};
