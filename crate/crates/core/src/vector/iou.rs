//! Exact polygon overlap via boolean clipping.

use geo::{Area, BooleanOps, Coord, LineString, MultiPolygon};

use super::geometry::{Point, Rect};
use super::polygon::{FieldPolygon, Provenance};
use crate::error::Result;

/// Cell size of the rasterized fallback, in meters.
pub const FALLBACK_CELL: f64 = 0.01;
const MAX_FALLBACK_CELLS: f64 = 4e7;
const CONTAINMENT_SNAP: f64 = 1e-6;

/// Intersection and union areas of two polygons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub intersection: f64,
    pub union: f64,
    pub iou: f64,
    /// False when the clip was numerically degenerate and the rasterized
    /// estimate was used instead.
    pub exact: bool,
}

/// Converts to geo coordinates relative to `origin`; clipping at UTM
/// magnitudes loses several digits otherwise.
pub(crate) fn to_geo(p: &FieldPolygon, origin: Point) -> geo::Polygon<f64> {
    let ring = |pts: &[Point]| {
        let mut coords: Vec<Coord<f64>> = pts
            .iter()
            .map(|p| Coord {
                x: p.x - origin.x,
                y: p.y - origin.y,
            })
            .collect();
        coords.push(coords[0]);
        LineString::new(coords)
    };
    geo::Polygon::new(ring(p.exterior()), p.holes().iter().map(|h| ring(h)).collect())
}

/// Converts clipping output back to polygons, one per part.
pub(crate) fn from_geo(
    mp: &MultiPolygon<f64>,
    origin: Point,
    id_prefix: &str,
    provenance: &Provenance,
) -> Vec<FieldPolygon> {
    let pts = |ls: &LineString<f64>| {
        ls.coords()
            .map(|c| Point::new(c.x + origin.x, c.y + origin.y))
            .collect::<Vec<_>>()
    };
    mp.0.iter()
        .enumerate()
        .filter_map(|(i, poly)| {
            let id = if mp.0.len() == 1 {
                id_prefix.to_string()
            } else {
                format!("{id_prefix}.{i}")
            };
            FieldPolygon::new(
                id,
                pts(poly.exterior()),
                poly.interiors().iter().map(pts).collect(),
                provenance.clone(),
            )
            .ok()
        })
        .collect()
}

fn overlap_from_intersection(a: &FieldPolygon, b: &FieldPolygon, mut inter: f64, exact: bool) -> Overlap {
    let smaller = a.area().min(b.area());
    // the clipper works on a fixed-point grid; absorb its round-off when one
    // polygon covers the other
    if (inter - smaller).abs() <= CONTAINMENT_SNAP * smaller {
        inter = smaller;
    }
    inter = inter.clamp(0.0, smaller);
    let union = a.area() + b.area() - inter;
    Overlap {
        intersection: inter,
        union,
        iou: if union > 0.0 { inter / union } else { 0.0 },
        exact,
    }
}

/// Exact overlap, falling back to a rasterized estimate when clipping
/// returns an inconsistent area.
pub fn polygon_overlap(a: &FieldPolygon, b: &FieldPolygon) -> Overlap {
    if a.bbox().intersection_area(b.bbox()) == 0.0 {
        return overlap_from_intersection(a, b, 0.0, true);
    }
    let o = Point::new(a.bbox().min_x, a.bbox().min_y);
    let inter = to_geo(a, o).intersection(&to_geo(b, o)).unsigned_area();
    let smaller = a.area().min(b.area());
    if inter.is_finite() && inter <= smaller * (1.0 + 1e-4) {
        return overlap_from_intersection(a, b, inter, true);
    }
    log::warn!(
        "degenerate clip between {} and {} (got {inter}); using rasterized estimate",
        a.id,
        b.id
    );
    overlap_from_intersection(a, b, rasterized_intersection(a, b, FALLBACK_CELL), false)
}

/// Intersection over union of two polygons.
pub fn polygon_iou(a: &FieldPolygon, b: &FieldPolygon) -> f64 {
    polygon_overlap(a, b).iou
}

/// Area of cells (of side `cell`, coarsened if the grid would be huge) whose
/// centers lie in both polygons.
pub fn rasterized_intersection(a: &FieldPolygon, b: &FieldPolygon, cell: f64) -> f64 {
    let bb = a.bbox();
    let other = b.bbox();
    let r = Rect::new(
        bb.min_x.max(other.min_x),
        bb.min_y.max(other.min_y),
        bb.max_x.min(other.max_x),
        bb.max_y.min(other.max_y),
    );
    if r.width() <= 0.0 || r.height() <= 0.0 {
        return 0.0;
    }
    let mut cell = cell;
    while (r.width() / cell) * (r.height() / cell) > MAX_FALLBACK_CELLS {
        cell *= 2.0;
    }
    let nx = (r.width() / cell).ceil() as usize;
    let ny = (r.height() / cell).ceil() as usize;
    let mut count = 0usize;
    for j in 0..ny {
        let y = r.min_y + (j as f64 + 0.5) * cell;
        for i in 0..nx {
            let p = Point::new(r.min_x + (i as f64 + 0.5) * cell, y);
            if a.contains(&p) && b.contains(&p) {
                count += 1;
            }
        }
    }
    count as f64 * cell * cell
}

/// Geometric union of polygons; one polygon per connected part.
pub fn union_polygons(parts: &[&FieldPolygon], id: &str, provenance: &Provenance) -> Result<Vec<FieldPolygon>> {
    let o = Point::new(parts[0].bbox().min_x, parts[0].bbox().min_y);
    let mut acc = MultiPolygon::new(vec![to_geo(parts[0], o)]);
    for p in &parts[1..] {
        acc = acc.union(&MultiPolygon::new(vec![to_geo(p, o)]));
    }
    Ok(from_geo(&acc, o, id, provenance))
}

/// Clips a polygon to an axis-aligned rectangle.
pub fn clip_to_rect(p: &FieldPolygon, r: &Rect) -> Vec<FieldPolygon> {
    if r.contains_rect(p.bbox(), 0.0) {
        return vec![p.clone()];
    }
    if p.bbox().intersection_area(r) == 0.0 {
        return vec![];
    }
    let o = Point::new(r.min_x, r.min_y);
    let rect = geo::Rect::new(Coord { x: 0.0, y: 0.0 }, Coord { x: r.width(), y: r.height() }).to_polygon();
    let out = to_geo(p, o).intersection(&rect);
    from_geo(&out, o, &p.id, &p.provenance)
        .into_iter()
        .filter_map(|part| snap_to_rect(&part, r))
        .collect()
}

/// Moves vertices lying on the rectangle's edges (up to round-off from the
/// local frame) exactly onto them, so fragments on either side of a cut
/// share bit-identical border coordinates.
fn snap_to_rect(p: &FieldPolygon, r: &Rect) -> Option<FieldPolygon> {
    let tol = CONTAINMENT_SNAP * r.width().max(r.height()).max(1.0) * 1e-3;
    let snap = |v: f64, edges: [f64; 2]| edges.into_iter().find(|e| (v - e).abs() <= tol).unwrap_or(v);
    let ring = |pts: &[Point]| -> Vec<Point> {
        pts.iter()
            .map(|q| Point::new(snap(q.x, [r.min_x, r.max_x]), snap(q.y, [r.min_y, r.max_y])))
            .collect()
    };
    FieldPolygon::new(
        p.id.clone(),
        ring(p.exterior()),
        p.holes().iter().map(|h| ring(h)).collect(),
        p.provenance.clone(),
    )
    .ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(id: &str, x: f64, y: f64, s: f64) -> FieldPolygon {
        FieldPolygon::rectangle(id, Rect::new(x, y, x + s, y + s), Provenance::default()).unwrap()
    }

    #[test]
    fn identical_is_one() {
        let a = square("a", 500_000.0, 2_900_000.0, 12.8);
        let o = polygon_overlap(&a, &a.clone().with_id("b"));
        assert_eq!(o.iou, 1.0);
        assert!(o.exact);
    }

    #[test]
    fn diagonal_offset_is_one_seventh() {
        let a = square("a", 0.0, 0.0, 1.0);
        let b = square("b", 0.5, 0.5, 1.0);
        assert!((polygon_iou(&a, &b) - 1.0 / 7.0).abs() < 1e-12);
        assert!((polygon_iou(&b, &a) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_and_touching_are_zero() {
        let a = square("a", 0.0, 0.0, 1.0);
        assert_eq!(polygon_iou(&a, &square("b", 3.0, 3.0, 1.0)), 0.0);
        assert_eq!(polygon_iou(&a, &square("c", 1.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn holes_reduce_intersection() {
        let outer = FieldPolygon::new(
            "o",
            square("x", 0.0, 0.0, 4.0).exterior().to_vec(),
            vec![square("y", 1.0, 1.0, 2.0).exterior().to_vec()],
            Provenance::default(),
        )
        .unwrap();
        let inner = square("i", 1.0, 1.0, 2.0);
        assert_eq!(polygon_overlap(&outer, &inner).intersection, 0.0);
        let o = polygon_overlap(&outer, &square("s", 0.0, 0.0, 4.0));
        assert!((o.iou - 12.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn union_of_halves_restores_square() {
        let left = FieldPolygon::rectangle("l", Rect::new(0.0, 0.0, 10.0, 20.0), Provenance::default()).unwrap();
        let right = FieldPolygon::rectangle("r", Rect::new(10.0, 0.0, 20.0, 20.0), Provenance::default()).unwrap();
        let u = union_polygons(&[&left, &right], "u", &Provenance::default()).unwrap();
        assert_eq!(u.len(), 1);
        assert!((u[0].area() - 400.0).abs() < 1e-9);
        assert_eq!(u[0].exterior().len(), 4);
    }

    #[test]
    fn clip_to_rect_cuts() {
        let a = square("a", 0.0, 0.0, 10.0);
        let parts = clip_to_rect(&a, &Rect::new(5.0, -1.0, 20.0, 20.0));
        assert_eq!(parts.len(), 1);
        assert!((parts[0].area() - 50.0).abs() < 1e-9);
        assert!(clip_to_rect(&a, &Rect::new(20.0, 20.0, 30.0, 30.0)).is_empty());
    }
}
