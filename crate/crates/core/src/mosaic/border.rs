use serde::{Deserialize, Serialize};

use crate::raster::TileGrid;
use crate::vector::{FieldPolygon, Point};

/// Default snap tolerance for "lies on the border", meters.
pub const DEFAULT_SNAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Vertical,
    Horizontal,
}

/// The edge shared by two adjacent tiles. For a vertical border
/// `line` is the world x and `[start, end]` spans y; for a horizontal
/// border `line` is the world y and the span runs along x. `negative` is
/// the tile on the lower-coordinate side (left, or below).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileBorder {
    pub orientation: Orientation,
    pub line: f64,
    pub start: f64,
    pub end: f64,
    pub negative: usize,
    pub positive: usize,
}

impl TileBorder {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// All borders of `grid` with the given orientation, in tile order.
pub fn tile_borders(grid: &TileGrid, orientation: Orientation) -> Vec<TileBorder> {
    let t = &grid.transform;
    let s = grid.tile_size as f64;
    let mut out = Vec::new();
    match orientation {
        Orientation::Vertical => {
            for row in 0..grid.rows {
                for col in 1..grid.cols {
                    let (x, y_top) = t.grid_to_world(col as f64 * s, row as f64 * s);
                    let (_, y_bottom) = t.grid_to_world(col as f64 * s, (row + 1) as f64 * s);
                    out.push(TileBorder {
                        orientation,
                        line: x,
                        start: y_bottom,
                        end: y_top,
                        negative: grid.tile_index(col - 1, row),
                        positive: grid.tile_index(col, row),
                    });
                }
            }
        }
        Orientation::Horizontal => {
            for row in 1..grid.rows {
                for col in 0..grid.cols {
                    let (x_left, y) = t.grid_to_world(col as f64 * s, row as f64 * s);
                    let (x_right, _) = t.grid_to_world((col + 1) as f64 * s, row as f64 * s);
                    out.push(TileBorder {
                        orientation,
                        line: y,
                        start: x_left,
                        end: x_right,
                        // image row `row` lies below row - 1 in world space
                        negative: grid.tile_index(col, row),
                        positive: grid.tile_index(col, row - 1),
                    });
                }
            }
        }
    }
    out
}

/// Sorted, disjoint closed intervals along a border.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    spans: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Normalizes arbitrary spans, joining ones separated by at most `snap`.
    pub fn from_spans(mut spans: Vec<(f64, f64)>, snap: f64) -> Self {
        spans.retain(|(a, b)| b > a);
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
        for (a, b) in spans {
            match merged.last_mut() {
                Some(last) if a <= last.1 + snap => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Self { spans: merged }
    }

    pub fn spans(&self) -> &[(f64, f64)] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.spans.iter().map(|(a, b)| b - a).sum()
    }

    pub fn intersection_length(&self, other: &IntervalSet) -> f64 {
        let (mut i, mut j, mut total) = (0, 0, 0.0);
        while i < self.spans.len() && j < other.spans.len() {
            let (a0, a1) = self.spans[i];
            let (b0, b1) = other.spans[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                total += hi - lo;
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }
}

/// Contact of a polygon with one border, split by which side of the line
/// the polygon interior lies on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Contact {
    pub negative: IntervalSet,
    pub positive: IntervalSet,
}

/// Intervals where the polygon boundary lies on `border` (within `snap`),
/// classified by the side its interior is on.
pub fn border_contact(p: &FieldPolygon, border: &TileBorder, snap: f64) -> Contact {
    let bb = p.bbox();
    let (lo, hi) = match border.orientation {
        Orientation::Vertical => (bb.min_x, bb.max_x),
        Orientation::Horizontal => (bb.min_y, bb.max_y),
    };
    if lo > border.line + snap || hi < border.line - snap {
        return Contact::default();
    }
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    // rings are CCW exterior / CW holes, so the interior is left of every edge
    for ring in std::iter::once(p.exterior()).chain(p.holes().iter().map(Vec::as_slice)) {
        let n = ring.len();
        for i in 0..n {
            let (a, b): (Point, Point) = (ring[i], ring[(i + 1) % n]);
            let (across_a, across_b, along_a, along_b) = match border.orientation {
                Orientation::Vertical => (a.x, b.x, a.y, b.y),
                Orientation::Horizontal => (a.y, b.y, a.x, b.x),
            };
            if (across_a - border.line).abs() > snap || (across_b - border.line).abs() > snap {
                continue;
            }
            let s0 = along_a.min(along_b).max(border.start);
            let s1 = along_a.max(along_b).min(border.end);
            if s1 <= s0 {
                continue;
            }
            let increasing = along_b > along_a;
            // left of an upward edge is -x; left of an eastward edge is +y
            let interior_negative = match border.orientation {
                Orientation::Vertical => increasing,
                Orientation::Horizontal => !increasing,
            };
            if interior_negative {
                neg.push((s0, s1));
            } else {
                pos.push((s0, s1));
            }
        }
    }
    Contact {
        negative: IntervalSet::from_spans(neg, snap),
        positive: IntervalSet::from_spans(pos, snap),
    }
}

/// Union of the intervals where the polygon boundary lies on `border`,
/// regardless of side.
pub fn contact_segments(p: &FieldPolygon, border: &TileBorder) -> IntervalSet {
    let c = border_contact(p, border, DEFAULT_SNAP);
    let mut spans = c.negative.spans().to_vec();
    spans.extend_from_slice(c.positive.spans());
    IntervalSet::from_spans(spans, DEFAULT_SNAP)
}
