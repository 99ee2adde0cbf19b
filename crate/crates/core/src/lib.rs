//! fieldfuse-core: field-boundary delineation around any mask-producing segmenter.
//!
//! Stages, each in its own module:
//!
//! 1. [`raster`]: percentile byte stretch, ratio pansharpening, tie-point
//!    georectification, Gaussian unsharp edge enhancement, tiling.
//! 2. [`protocol`]: file-exchange contract with external segmenters.
//! 3. [`vector`]: mask vectorization, exact polygon IoU, spatial index, GeoJSON.
//! 4. [`mosaic`]: reassembling tile fragments and pooling layers across
//!    checkpoints, tile sizes, dates and variants.
//! 5. [`metrics`]: detection / delineation accuracy and reports.
//! 6. [`synth`]: synthetic fieldscapes and a degradable mock segmenter.
//! 7. [`pipeline`]: the run configuration and the staged workflow.

pub mod error;
pub mod metrics;
pub mod mosaic;
pub mod pipeline;
pub mod protocol;
pub mod raster;
pub mod synth;
pub mod vector;

pub use error::{Error, Result};
