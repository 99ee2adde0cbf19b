//! Label raster → polygons, traced along pixel edges.
//!
//! Each 4-connected component of a nonzero label becomes one polygon whose
//! area is exactly `pixel_count · pixel_size²`. Boundary edges are directed
//! with the component on their right, so traced exteriors are clockwise and
//! holes counter-clockwise until [`FieldPolygon::new`] flips them. Where a
//! component touches itself only diagonally the tracer turns toward the
//! component, which keeps every ring free of repeated vertices.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::geometry::{point_in_ring, signed_area, Point};
use super::polygon::{FieldPolygon, Provenance};
use crate::error::{Error, Result};
use crate::raster::GeoTransform;

/// Default speckle threshold in pixels.
pub const DEFAULT_MIN_AREA_PX: usize = 25;

/// A vectorized component together with the label it came from.
#[derive(Debug, Clone)]
pub struct LabeledPolygon {
    pub label: u32,
    pub pixel_count: usize,
    pub polygon: FieldPolygon,
}

#[derive(Debug, Clone)]
pub(crate) struct Component {
    pub(crate) label: u32,
    pub(crate) pixels: usize,
    min_c: usize,
    min_r: usize,
    max_c: usize,
    max_r: usize,
}

/// 4-connected components of equal nonzero labels, numbered from 1 in
/// raster-scan order of their first pixel.
pub(crate) fn label_components(labels: &[u32], width: usize, height: usize) -> (Vec<u32>, Vec<Component>) {
    let mut comp = vec![0u32; labels.len()];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if labels[start] == 0 || comp[start] != 0 {
            continue;
        }
        let label = labels[start];
        let id = comps.len() as u32 + 1;
        let (c0, r0) = (start % width, start / width);
        let mut info = Component {
            label,
            pixels: 0,
            min_c: c0,
            min_r: r0,
            max_c: c0,
            max_r: r0,
        };
        comp[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (c, r) = (i % width, i / width);
            info.pixels += 1;
            info.min_c = info.min_c.min(c);
            info.max_c = info.max_c.max(c);
            info.min_r = info.min_r.min(r);
            info.max_r = info.max_r.max(r);
            let mut visit = |j: usize| {
                if labels[j] == label && comp[j] == 0 {
                    comp[j] = id;
                    queue.push_back(j);
                }
            };
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < width {
                visit(i + 1);
            }
            if r > 0 {
                visit(i - width);
            }
            if r + 1 < height {
                visit(i + width);
            }
        }
        comps.push(info);
    }
    (comp, comps)
}

// direction bits; image space, y down
const EAST: u8 = 1;
const SOUTH: u8 = 2;
const WEST: u8 = 4;
const NORTH: u8 = 8;

fn step(dir: u8) -> (isize, isize) {
    match dir {
        EAST => (1, 0),
        SOUTH => (0, 1),
        WEST => (-1, 0),
        _ => (0, -1),
    }
}

/// Right turn in image space (clockwise on screen).
fn turn_right(dir: u8) -> u8 {
    match dir {
        EAST => SOUTH,
        SOUTH => WEST,
        WEST => NORTH,
        _ => EAST,
    }
}

fn turn_left(dir: u8) -> u8 {
    match dir {
        EAST => NORTH,
        NORTH => WEST,
        WEST => SOUTH,
        _ => EAST,
    }
}

/// Traces all boundary rings of component `id` in local bbox coordinates.
fn trace_component(comp: &[u32], width: usize, id: u32, info: &Component) -> Vec<Vec<(usize, usize)>> {
    let bw = info.max_c - info.min_c + 1;
    let bh = info.max_r - info.min_r + 1;
    let vw = bw + 1;
    let mut out_edges = vec![0u8; vw * (bh + 1)];
    let inside = |c: isize, r: isize| -> bool {
        if c < info.min_c as isize || r < info.min_r as isize || c > info.max_c as isize || r > info.max_r as isize {
            return false;
        }
        comp[r as usize * width + c as usize] == id
    };
    for lr in 0..bh {
        for lc in 0..bw {
            let (c, r) = ((info.min_c + lc) as isize, (info.min_r + lr) as isize);
            if !inside(c, r) {
                continue;
            }
            if !inside(c, r - 1) {
                out_edges[lr * vw + lc] |= EAST;
            }
            if !inside(c + 1, r) {
                out_edges[lr * vw + lc + 1] |= SOUTH;
            }
            if !inside(c, r + 1) {
                out_edges[(lr + 1) * vw + lc + 1] |= WEST;
            }
            if !inside(c - 1, r) {
                out_edges[(lr + 1) * vw + lc] |= NORTH;
            }
        }
    }

    let mut rings = Vec::new();
    for start in 0..out_edges.len() {
        while out_edges[start] != 0 {
            let bits = out_edges[start];
            let start_dir = [EAST, SOUTH, WEST, NORTH].into_iter().find(|d| bits & d != 0).unwrap();
            let mut ring = Vec::new();
            let (mut vx, mut vy) = (start % vw, start / vw);
            let mut dir = start_dir;
            out_edges[start] &= !dir;
            loop {
                ring.push((vx, vy));
                let (dx, dy) = step(dir);
                vx = (vx as isize + dx) as usize;
                vy = (vy as isize + dy) as usize;
                let v = vy * vw + vx;
                let mut next = None;
                for cand in [turn_right(dir), dir, turn_left(dir)] {
                    if v == start && cand == start_dir {
                        break;
                    }
                    if out_edges[v] & cand != 0 {
                        next = Some(cand);
                        break;
                    }
                }
                match next {
                    Some(d) => {
                        out_edges[v] &= !d;
                        dir = d;
                    }
                    None => break,
                }
            }
            rings.push(ring);
        }
    }
    rings
}

/// Vectorizes every 4-connected component of each nonzero label, keeping
/// the label each polygon came from. Components with area below
/// `min_area` (m²) are dropped; ids are `<id_prefix><n>`.
pub fn vectorize_labels(
    labels: &[u32],
    width: usize,
    height: usize,
    transform: &GeoTransform,
    min_area: f64,
    provenance: &Provenance,
    id_prefix: &str,
) -> Result<Vec<LabeledPolygon>> {
    if labels.len() != width * height {
        return Err(Error::InvalidParameter(format!(
            "mask has {} values, expected {width}x{height}",
            labels.len()
        )));
    }
    let (comp, comps) = label_components(labels, width, height);
    let px2 = transform.pixel_size * transform.pixel_size;
    let results: Vec<Option<Result<LabeledPolygon>>> = comps
        .par_iter()
        .enumerate()
        .map(|(k, info)| {
            if (info.pixels as f64) * px2 < min_area {
                return None;
            }
            let id = k as u32 + 1;
            let rings = trace_component(&comp, width, id, info);
            let world: Vec<Vec<Point>> = rings
                .iter()
                .map(|ring| {
                    ring.iter()
                        .map(|&(lx, ly)| {
                            let (x, y) = transform.grid_to_world(
                                (info.min_c + lx) as f64,
                                (info.min_r + ly) as f64,
                            );
                            Point::new(x, y)
                        })
                        .collect()
                })
                .collect();
            Some(assemble(world, transform.pixel_size, provenance, format!("{id_prefix}{k}")).map(
                |polygon| LabeledPolygon {
                    label: info.label,
                    pixel_count: info.pixels,
                    polygon,
                },
            ))
        })
        .collect();
    results.into_iter().flatten().collect()
}

/// Splits traced rings into one exterior and its holes.
fn assemble(rings: Vec<Vec<Point>>, pixel_size: f64, provenance: &Provenance, id: String) -> Result<FieldPolygon> {
    let (mut exteriors, holes): (Vec<_>, Vec<_>) = rings.into_iter().partition(|r| signed_area(r) < 0.0);
    if exteriors.len() != 1 {
        // a 4-connected component has one outer boundary
        return Err(Error::Geometry(format!(
            "component {id} traced {} outer rings",
            exteriors.len()
        )));
    }
    let exterior = exteriors.pop().unwrap();
    debug_assert!(holes.iter().all(|h| {
        let (a, b) = (h[0], h[1]);
        // sample just right of the first hole edge, which is polygon interior
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len = (dx * dx + dy * dy).sqrt();
        let m = Point::new(
            (a.x + b.x) / 2.0 + dy / len * 0.25 * pixel_size,
            (a.y + b.y) / 2.0 - dx / len * 0.25 * pixel_size,
        );
        point_in_ring(&m, &exterior)
    }));
    FieldPolygon::new(id, exterior, holes, provenance.clone())
}

/// Polygons for every retained component; see [`vectorize_labels`].
pub fn vectorize_mask(
    labels: &[u32],
    width: usize,
    height: usize,
    transform: &GeoTransform,
    min_area: f64,
) -> Result<Vec<FieldPolygon>> {
    Ok(vectorize_labels(labels, width, height, transform, min_area, &Provenance::default(), "p")?
        .into_iter()
        .map(|l| l.polygon)
        .collect())
}
