//! Fixtures shared by the benchmarks.

use fieldfuse_core::mosaic::split_to_tiles;
use fieldfuse_core::raster::{ByteComposite, TileGrid, Variant};
use fieldfuse_core::synth::{generate_ground_truth, FieldscapeSpec, GroundTruth};
use fieldfuse_core::vector::{FieldPolygon, LayerKey, PredictionLayer, Provenance};

/// Ground truth over a square scene of `extent_m` meters.
pub fn truth(extent_m: f64) -> GroundTruth {
    generate_ground_truth(&FieldscapeSpec {
        extent_m: [extent_m, extent_m],
        ..Default::default()
    })
    .expect("valid fieldscape")
}

/// The truth labels as a label raster, with the matching grid size.
pub fn label_raster(t: &GroundTruth) -> (&[u32], usize, usize) {
    (&t.labels, t.width, t.height)
}

/// A deterministic patterned composite.
pub fn composite(side: usize) -> ByteComposite {
    let plane = |k: usize| (0..side * side).map(|i| ((i * k + i / side * 7) % 251) as u8).collect();
    ByteComposite::new(
        side,
        side,
        [plane(3), plane(5), plane(11)],
        fieldfuse_core::raster::GeoTransform::new(0.0, side as f64, 1.0).expect("transform"),
        32645,
        Variant::Original,
        "T1",
    )
    .expect("composite")
}

/// Truth polygons cut into per-tile fragments.
pub fn fragments(t: &GroundTruth, tile: usize) -> (TileGrid, Vec<Vec<FieldPolygon>>) {
    let grid = TileGrid::new(t.width, t.height, tile, t.transform).expect("grid");
    let tiles = split_to_tiles(t.gt.polygons(), &grid);
    (grid, tiles)
}

/// The truth with every polygon shifted by `dx` meters, as a prediction layer.
pub fn shifted(t: &GroundTruth, dx: f64) -> PredictionLayer {
    let polys = t
        .gt
        .polygons()
        .iter()
        .filter_map(|p| {
            let ring = p.exterior().iter().map(|q| fieldfuse_core::vector::Point::new(q.x + dx, q.y)).collect();
            FieldPolygon::new(p.id.clone(), ring, vec![], Provenance::default()).ok()
        })
        .collect();
    PredictionLayer::new(LayerKey::reference(), polys).expect("layer")
}
