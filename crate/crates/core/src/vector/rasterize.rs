//! Scanline burn of polygons into label rasters, sampled at pixel centers.

use super::polygon::FieldPolygon;
use crate::raster::GeoTransform;

/// Columns whose pixel centers fall inside the polygon on row `row`, as
/// half-open `[start, end)` spans clipped to `width`.
fn row_spans(p: &FieldPolygon, row: usize, width: usize, t: &GeoTransform) -> Vec<(usize, usize)> {
    let (_, y) = t.pixel_center(0, row);
    let mut xs = Vec::new();
    for ring in std::iter::once(p.exterior()).chain(p.holes().iter().map(|h| h.as_slice())) {
        let n = ring.len();
        for i in 0..n {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    let mut spans = Vec::new();
    for pair in xs.chunks_exact(2) {
        // first column whose center x = ox + (c + 0.5)·s lies in [x0, x1)
        let c0 = ((pair[0] - t.origin_x) / t.pixel_size - 0.5).ceil().max(0.0);
        let c1 = ((pair[1] - t.origin_x) / t.pixel_size - 0.5).ceil().max(0.0);
        let (c0, c1) = ((c0 as usize).min(width), (c1 as usize).min(width));
        if c1 > c0 {
            spans.push((c0, c1));
        }
    }
    spans
}

/// Burns `label` into `raster` for every pixel whose center lies inside `polygon`.
pub fn burn_polygon(raster: &mut [u32], width: usize, height: usize, t: &GeoTransform, polygon: &FieldPolygon, label: u32) {
    let bb = polygon.bbox();
    let (_, r0f) = t.world_to_grid(0.0, bb.max_y);
    let (_, r1f) = t.world_to_grid(0.0, bb.min_y);
    let r0 = r0f.floor().max(0.0) as usize;
    let r1 = (r1f.ceil().max(0.0) as usize).min(height);
    for row in r0..r1 {
        for (c0, c1) in row_spans(polygon, row, width, t) {
            raster[row * width + c0..row * width + c1].fill(label);
        }
    }
}

/// Label raster with polygon `i` burned as `i + 1`; later polygons overwrite earlier ones.
pub fn rasterize_polygons(polygons: &[FieldPolygon], width: usize, height: usize, t: &GeoTransform) -> Vec<u32> {
    let mut raster = vec![0u32; width * height];
    for (i, p) in polygons.iter().enumerate() {
        burn_polygon(&mut raster, width, height, t, p, i as u32 + 1);
    }
    raster
}
