//! Reassembling polygons cut by tile borders.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::border::{border_contact, tile_borders, Orientation, TileBorder, DEFAULT_SNAP};
use crate::error::{Error, Result};
use crate::raster::TileGrid;
use crate::vector::{clip_to_rect, union_polygons, FieldPolygon, LayerKey, PredictionLayer, Rect, TileRef};

pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.85;
const MAX_PASSES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MergeParams {
    /// Both contact fractions must exceed this.
    pub threshold: f64,
    pub snap: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_MERGE_THRESHOLD,
            snap: DEFAULT_SNAP,
        }
    }
}

/// A pair of fragments on opposite sides of one border.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeCandidate {
    pub a: String,
    pub b: String,
    pub border: TileBorder,
    /// Shared contact length, meters.
    pub contact: f64,
    pub fraction_a: f64,
    pub fraction_b: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStats {
    pub passes: usize,
    pub merges: usize,
    /// Fragments cut back to the valid part of a padded tile.
    pub clipped: usize,
    /// Fragments lying entirely in padding.
    pub dropped: usize,
}

fn tile_rect(grid: &TileGrid, index: usize, valid_only: bool) -> Rect {
    let w = grid.window(index);
    let (cw, ch) = if valid_only {
        (w.valid_width, w.valid_height)
    } else {
        (w.size, w.size)
    };
    let (x0, y0) = grid.transform.grid_to_world(w.offset_x as f64, w.offset_y as f64);
    let (x1, y1) = grid.transform.grid_to_world((w.offset_x + cw) as f64, (w.offset_y + ch) as f64);
    Rect::new(x0, y1, x1, y0)
}

/// World rectangle of the scene pixels covered by tile `index`.
pub fn tile_valid_rect(grid: &TileGrid, index: usize) -> Rect {
    tile_rect(grid, index, true)
}

/// Clips scene-level polygons to each tile's valid region, the way a
/// segmenter run on tiles would see them. Fragment ids are `<id>@<tile>`.
pub fn split_to_tiles(polygons: &[FieldPolygon], grid: &TileGrid) -> Vec<Vec<FieldPolygon>> {
    (0..grid.len())
        .into_par_iter()
        .map(|t| {
            let r = tile_valid_rect(grid, t);
            let mut out = Vec::new();
            for p in polygons.iter().filter(|p| p.bbox().intersection_area(&r) > 0.0) {
                let parts = clip_to_rect(p, &r);
                let many = parts.len() > 1;
                for (k, part) in parts.into_iter().enumerate() {
                    let id = if many {
                        format!("{}.{k}@{t}", p.id)
                    } else {
                        format!("{}@{t}", p.id)
                    };
                    let mut prov = part.provenance.clone();
                    prov.tile = Some(TileRef::Index(t));
                    out.push(part.with_id(id).with_provenance(prov));
                }
            }
            out
        })
        .collect()
}

/// Merge candidates on one border whose contact fractions both exceed the threshold.
fn border_candidates(
    slots: &[Option<FieldPolygon>],
    border: &TileBorder,
    params: &MergeParams,
    skip: impl Fn(usize) -> bool,
) -> Vec<(usize, usize, MergeCandidate)> {
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for (i, p) in slots.iter().enumerate() {
        let Some(p) = p else { continue };
        if skip(i) {
            continue;
        }
        let c = border_contact(p, border, params.snap);
        if !c.negative.is_empty() {
            neg.push((i, c.negative));
        }
        if !c.positive.is_empty() {
            pos.push((i, c.positive));
        }
    }
    let mut out = Vec::new();
    for (ia, ca) in &neg {
        for (ib, cb) in &pos {
            if ia == ib {
                continue;
            }
            let shared = ca.intersection_length(cb);
            if shared <= 0.0 {
                continue;
            }
            let fa = shared / ca.length();
            let fb = shared / cb.length();
            if fa > params.threshold && fb > params.threshold {
                let (a, b) = (slots[*ia].as_ref().unwrap(), slots[*ib].as_ref().unwrap());
                out.push((
                    *ia,
                    *ib,
                    MergeCandidate {
                        a: a.id.clone(),
                        b: b.id.clone(),
                        border: *border,
                        contact: shared,
                        fraction_a: fa,
                        fraction_b: fb,
                    },
                ));
            }
        }
    }
    out
}

/// Every candidate pair across the borders of one orientation.
pub fn merge_candidates(
    polygons: &[FieldPolygon],
    grid: &TileGrid,
    orientation: Orientation,
    params: &MergeParams,
) -> Vec<MergeCandidate> {
    let slots: Vec<Option<FieldPolygon>> = polygons.iter().cloned().map(Some).collect();
    tile_borders(grid, orientation)
        .iter()
        .flat_map(|b| border_candidates(&slots, b, params, |_| false))
        .map(|(_, _, c)| c)
        .collect()
}

/// Borders a slot has already been reassembled across, as (orientation, index).
type Crossed = Vec<Vec<(u8, usize)>>;

/// One pass over all borders of an orientation; returns the number of merges.
fn merge_pass(
    slots: &mut Vec<Option<FieldPolygon>>,
    crossed: &mut Crossed,
    borders: &[TileBorder],
    tag: u8,
    params: &MergeParams,
    next_id: &mut usize,
) -> Result<usize> {
    let seen: &Crossed = crossed;
    let mut cands: Vec<(usize, usize, usize, MergeCandidate)> = borders
        .par_iter()
        .enumerate()
        .flat_map_iter(|(bi, b)| {
            // leftover notches of a merged polygon must not pull in its neighbours
            border_candidates(slots, b, params, |i| seen[i].contains(&(tag, bi)))
                .into_iter()
                .map(move |(i, j, c)| (bi, i, j, c))
        })
        .collect();
    cands.sort_by(|x, y| {
        y.3.contact
            .total_cmp(&x.3.contact)
            .then(x.0.cmp(&y.0))
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut used = vec![false; slots.len()];
    let mut merges = 0;
    for (bi, i, j, _) in cands {
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        let (a, b) = (slots[i].take().unwrap(), slots[j].take().unwrap());
        let mut prov = a.provenance.clone();
        prov.tile = Some(TileRef::Merged);
        let id = format!("m{next_id}");
        *next_id += 1;
        let mut history = std::mem::take(&mut crossed[i]);
        history.append(&mut std::mem::take(&mut crossed[j]));
        history.push((tag, bi));
        let mut parts = union_polygons(&[&a, &b], &id, &prov)?.into_iter();
        slots[i] = parts.next();
        crossed[i] = history.clone();
        // touching fragments union to one part; keep any others rather than lose area
        for part in parts {
            slots.push(Some(part));
            crossed.push(history.clone());
        }
        merges += 1;
    }
    Ok(merges)
}

/// Reassembles per-tile polygons (world coordinates, one list per tile in
/// grid order) into one scene layer. Fragments in padded tiles are first
/// clipped to the valid region; pairs across a border merge when both
/// contact fractions exceed the threshold, vertical borders before
/// horizontal, until a full round makes no merge.
pub fn merge_adjacent(
    tiles: &[Vec<FieldPolygon>],
    grid: &TileGrid,
    key: LayerKey,
    params: &MergeParams,
) -> Result<(PredictionLayer, MergeStats)> {
    if tiles.len() != grid.len() {
        return Err(Error::Geometry(format!(
            "got polygons for {} tiles, grid has {}",
            tiles.len(),
            grid.len()
        )));
    }
    let mut stats = MergeStats::default();
    let mut slots: Vec<Option<FieldPolygon>> = Vec::new();
    let tol = params.snap.max(1e-9 * grid.transform.pixel_size);
    for (t, polys) in tiles.iter().enumerate() {
        let full = tile_rect(grid, t, false);
        let valid = tile_valid_rect(grid, t);
        for p in polys {
            if !full.contains_rect(p.bbox(), tol) {
                return Err(Error::Geometry(format!(
                    "polygon {} extends outside tile {t} of the grid",
                    p.id
                )));
            }
            if valid.contains_rect(p.bbox(), tol) {
                slots.push(Some(p.clone()));
                continue;
            }
            let parts = clip_to_rect(p, &valid);
            if parts.is_empty() {
                stats.dropped += 1;
            } else {
                stats.clipped += 1;
            }
            slots.extend(parts.into_iter().map(Some));
        }
    }

    let vertical = tile_borders(grid, Orientation::Vertical);
    let horizontal = tile_borders(grid, Orientation::Horizontal);
    let mut crossed: Crossed = vec![Vec::new(); slots.len()];
    let mut next_id = 0;
    loop {
        let mut round = 0;
        for (tag, borders) in [(0u8, &vertical), (1u8, &horizontal)] {
            if borders.is_empty() {
                continue;
            }
            round += merge_pass(&mut slots, &mut crossed, borders, tag, params, &mut next_id)?;
            stats.passes += 1;
        }
        stats.merges += round;
        if round == 0 || stats.passes >= MAX_PASSES {
            break;
        }
    }
    let layer = PredictionLayer::new(key, slots.into_iter().flatten().collect())?;
    Ok((layer, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GeoTransform;
    use crate::vector::{polygon_iou, Provenance};
    use proptest::prelude::*;

    fn grid(px: usize, tile: usize) -> TileGrid {
        TileGrid::new(px, px, tile, GeoTransform::new(0.0, px as f64, 1.0).unwrap()).unwrap()
    }

    fn rect(id: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> FieldPolygon {
        FieldPolygon::rectangle(id, Rect::new(x0, y0, x1, y1), Provenance::default()).unwrap()
    }

    fn key() -> LayerKey {
        LayerKey::reference()
    }

    #[test]
    fn notches_left_by_a_merge_do_not_chain_neighbours() {
        let g = grid(64, 32);
        let tiles = vec![
            vec![rect("a0", 20.0, 36.0, 32.0, 46.0), rect("b0", 20.0, 46.0, 32.0, 58.0)],
            vec![rect("a1", 32.0, 36.0, 44.0, 46.5), rect("b1", 32.0, 46.5, 44.0, 58.0)],
            vec![],
            vec![],
        ];
        let (layer, stats) = merge_adjacent(&tiles, &g, key(), &MergeParams::default()).unwrap();
        assert_eq!(stats.merges, 2);
        assert_eq!(layer.len(), 2);
        let areas: Vec<f64> = layer.polygons().iter().map(|p| p.area()).collect();
        assert!(areas.iter().any(|a| (a - (120.0 + 126.0)).abs() < 1e-9));
    }

    #[test]
    fn bisected_square_is_restored() {
        let g = grid(64, 32);
        let sq = rect("s", 22.0, 38.0, 42.0, 58.0);
        let tiles = split_to_tiles(std::slice::from_ref(&sq), &g);
        assert_eq!(tiles.iter().map(Vec::len).sum::<usize>(), 2);
        let c = merge_candidates(&tiles.concat(), &g, Orientation::Vertical, &MergeParams::default());
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].fraction_a, c[0].fraction_b), (1.0, 1.0));
        let (layer, stats) = merge_adjacent(&tiles, &g, key(), &MergeParams::default()).unwrap();
        assert_eq!(layer.len(), 1);
        assert_eq!(stats.merges, 1);
        assert!((layer.polygons()[0].area() - 400.0).abs() < 1e-9);
        assert!((polygon_iou(&layer.polygons()[0], &sq) - 1.0).abs() < 1e-9);
        assert_eq!(layer.polygons()[0].provenance.tile, Some(TileRef::Merged));
    }

    #[test]
    fn half_contact_does_not_merge() {
        let g = grid(64, 32);
        let a = rect("a", 20.0, 40.0, 32.0, 50.0);
        let b = rect("b", 32.0, 45.0, 44.0, 55.0);
        let c = merge_candidates(&[a.clone(), b.clone()], &g, Orientation::Vertical, &MergeParams::default());
        assert!(c.is_empty());
        let tiles = vec![vec![a], vec![b], vec![], vec![]];
        let (layer, stats) = merge_adjacent(&tiles, &g, key(), &MergeParams::default()).unwrap();
        assert_eq!(layer.len(), 2);
        assert_eq!(stats.merges, 0);
    }

    #[test]
    fn corner_square_reassembles() {
        let g = grid(64, 32);
        let sq = rect("s", 22.0, 22.0, 42.0, 42.0);
        let tiles = split_to_tiles(std::slice::from_ref(&sq), &g);
        assert_eq!(tiles.iter().map(Vec::len).sum::<usize>(), 4);
        let (layer, stats) = merge_adjacent(&tiles, &g, key(), &MergeParams::default()).unwrap();
        assert_eq!(layer.len(), 1);
        assert_eq!(stats.merges, 3);
        assert!((layer.total_area() - 400.0).abs() < 1e-9);
        assert_eq!(layer.polygons()[0].exterior().len(), 4);
    }

    #[test]
    fn wrong_tile_count_is_rejected() {
        let g = grid(64, 32);
        assert!(merge_adjacent(&[vec![]], &g, key(), &MergeParams::default()).is_err());
        let stray = vec![vec![rect("x", 40.0, 40.0, 50.0, 50.0)], vec![], vec![], vec![]];
        assert!(merge_adjacent(&stray, &g, key(), &MergeParams::default()).is_err());
    }

    #[test]
    fn padding_is_clipped_away() {
        // 40 px scene, 32 px tiles: the right column is 8 px wide
        let g = TileGrid::new(40, 40, 32, GeoTransform::new(0.0, 40.0, 1.0).unwrap()).unwrap();
        let hit_pad = rect("p", 34.0, 20.0, 50.0, 30.0);
        let only_pad = rect("q", 45.0, 20.0, 50.0, 30.0);
        let tiles = vec![vec![], vec![hit_pad, only_pad], vec![], vec![]];
        let (layer, stats) = merge_adjacent(&tiles, &g, key(), &MergeParams::default()).unwrap();
        assert_eq!((stats.clipped, stats.dropped), (1, 1));
        assert!((layer.total_area() - 60.0).abs() < 1e-9);
    }

    fn scattered_rects() -> impl Strategy<Value = Vec<FieldPolygon>> {
        // one rectangle per 20 px lattice cell, 1 px gap guaranteed
        proptest::collection::vec((any::<bool>(), 1usize..19, 1usize..19, 0usize..18, 0usize..18), 16).prop_map(|cells| {
            cells
                .into_iter()
                .enumerate()
                .filter(|(_, c)| c.0)
                .map(|(k, (_, w, h, dx, dy))| {
                    let (cx, cy) = ((k % 4) as f64 * 20.0, (k / 4) as f64 * 20.0);
                    let x0 = cx + dx.min(19 - w) as f64;
                    let y0 = cy + dy.min(19 - h) as f64;
                    rect(&format!("r{k}"), x0, y0, x0 + w as f64, y0 + h as f64)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn split_then_merge_round_trips(polys in scattered_rects(), tile in prop::sample::select(vec![8usize, 13, 32])) {
            let g = TileGrid::new(80, 80, tile, GeoTransform::new(0.0, 80.0, 1.0).unwrap()).unwrap();
            let tiles = split_to_tiles(&polys, &g);
            let (layer, _) = merge_adjacent(&tiles, &g, key(), &MergeParams::default()).unwrap();
            prop_assert_eq!(layer.len(), polys.len());
            let before: f64 = polys.iter().map(FieldPolygon::area).sum();
            prop_assert!((layer.total_area() - before).abs() <= 1e-6 * before.max(1.0));
            for p in &polys {
                let best = layer.polygons().iter().map(|q| polygon_iou(p, q)).fold(0.0, f64::max);
                prop_assert!(best >= 0.99);
            }
        }
    }
}
