//! File-exchange contract with external segmenters.
//!
//! A job directory holds `manifest.json` and `tiles/<id>.png` (8-bit RGB).
//! The adapter is invoked as `<cmd> --manifest <path> --out <dir> --checkpoint <name>`
//! and must write `masks/<id>.png` (single-channel 16-bit, 0 = background,
//! labels dense `1..N`) plus `done.json`, exiting 0 iff `done.json` was written.
//! Adapters flatten overlapping instance masks so that smaller masks
//! overwrite larger ones.

mod adapter;
mod dispatch;
mod job;
mod mask;

pub use adapter::{run_mock_adapter, write_results, ExternalAdapter, MockAdapter, MockAdapterConfig, Segmenter};
pub use dispatch::{collect_results, dispatch, AdapterCommand, DispatchOptions, TileFailure, TileOutcome};
pub use job::{
    DoneEntry, DoneFile, Manifest, SegmentJob, TileRecord, TileStatus, DONE_FILE, MANIFEST_FILE, MASKS_DIR, TILES_DIR,
};
pub use mask::{check_dense, validate_mask, write_mask, MaskError, MaskResult};
