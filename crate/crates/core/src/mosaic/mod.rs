//! Tile reassembly and multi-configuration pooling.

mod border;
mod combine;
mod merge;

pub use border::{border_contact, contact_segments, tile_borders, Contact, IntervalSet, Orientation, TileBorder, DEFAULT_SNAP};
pub use combine::{combine_layers, dedup, DEFAULT_DEDUP_IOU};
pub use merge::{
    merge_adjacent, merge_candidates, split_to_tiles, tile_valid_rect, MergeCandidate, MergeParams, MergeStats,
    DEFAULT_MERGE_THRESHOLD,
};
