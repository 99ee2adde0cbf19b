//! Polygons in world space: vectorization, exact overlap, indexing, interchange.

pub mod geojson;
mod geometry;
mod index;
mod iou;
mod polygon;
mod rasterize;
mod vectorize;

pub use geometry::{bbox_iou, clean_ring, point_in_ring, ring_is_simple, signed_area, Point, Rect};
pub use index::SpatialIndex;
pub use iou::{clip_to_rect, polygon_iou, polygon_overlap, rasterized_intersection, union_polygons, Overlap, FALLBACK_CELL};
pub use polygon::{Checkpoint, FieldPolygon, LayerKey, Level, PredictionLayer, Provenance, TileRef};
pub use rasterize::{burn_polygon, rasterize_polygons};
pub use vectorize::{vectorize_labels, vectorize_mask, LabeledPolygon, DEFAULT_MIN_AREA_PX};
pub(crate) use vectorize::label_components;
