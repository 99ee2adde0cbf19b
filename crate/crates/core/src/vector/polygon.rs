use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::geometry::{clean_ring, point_in_ring, ring_is_simple, signed_area, Point, Rect};
use crate::error::{Error, Result};
use crate::raster::Variant;

/// Segmenter checkpoint a prediction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checkpoint {
    VitB,
    VitH,
    VitL,
    Mock,
}

impl Checkpoint {
    pub const SAM: [Checkpoint; 3] = [Checkpoint::VitB, Checkpoint::VitH, Checkpoint::VitL];

    pub fn as_str(&self) -> &'static str {
        match self {
            Checkpoint::VitB => "vit_b",
            Checkpoint::VitH => "vit_h",
            Checkpoint::VitL => "vit_l",
            Checkpoint::Mock => "mock",
        }
    }
}

impl fmt::Display for Checkpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Checkpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vit_b" => Ok(Checkpoint::VitB),
            "vit_h" => Ok(Checkpoint::VitH),
            "vit_l" => Ok(Checkpoint::VitL),
            "mock" => Ok(Checkpoint::Mock),
            other => Err(Error::InvalidParameter(format!("unknown checkpoint '{other}'"))),
        }
    }
}

/// Which tile a fragment came from, or `Merged` once reassembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TileRef {
    Index(usize),
    Merged,
}

impl Serialize for TileRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TileRef::Index(i) => s.serialize_u64(*i as u64),
            TileRef::Merged => s.serialize_str("merged"),
        }
    }
}

impl<'de> Deserialize<'de> for TileRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(TileRef::Index(i as usize)),
            Raw::Text(t) if t == "merged" => Ok(TileRef::Merged),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad tile reference '{t}'"))),
        }
    }
}

/// Where a polygon came from. `None` fields are unknown or combined-over
/// (ground truth carries no provenance at all).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub checkpoint: Option<Checkpoint>,
    pub tile_size: Option<usize>,
    pub date_id: Option<String>,
    pub variant: Option<Variant>,
    pub tile: Option<TileRef>,
}

/// Simple polygon in world meters: CCW exterior, CW holes, cached area and bbox.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPolygon {
    pub id: String,
    exterior: Vec<Point>,
    holes: Vec<Vec<Point>>,
    pub provenance: Provenance,
    area: f64,
    bbox: Rect,
}

impl FieldPolygon {
    /// Validates and normalizes rings: orientation is fixed up, repeated and
    /// collinear vertices are dropped, holes must lie inside the exterior.
    pub fn new(
        id: impl Into<String>,
        exterior: Vec<Point>,
        holes: Vec<Vec<Point>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let id = id.into();
        let mut exterior = normalize_ring(&exterior, &id, "exterior")?;
        if signed_area(&exterior) < 0.0 {
            exterior.reverse();
        }
        let mut clean_holes = Vec::with_capacity(holes.len());
        for hole in holes {
            let mut h = normalize_ring(&hole, &id, "hole")?;
            if signed_area(&h) > 0.0 {
                h.reverse();
            }
            clean_holes.push(h);
        }
        let area = signed_area(&exterior) + clean_holes.iter().map(|h| signed_area(h)).sum::<f64>();
        if !(area > 0.0) {
            return Err(Error::Geometry(format!("polygon {id} has non-positive area {area}")));
        }
        let bbox = Rect::of_points(&exterior).expect("ring has vertices");
        Ok(Self {
            id,
            exterior,
            holes: clean_holes,
            provenance,
            area,
            bbox,
        })
    }

    /// Axis-aligned rectangle polygon.
    pub fn rectangle(id: impl Into<String>, r: Rect, provenance: Provenance) -> Result<Self> {
        Self::new(
            id,
            vec![
                Point::new(r.min_x, r.min_y),
                Point::new(r.max_x, r.min_y),
                Point::new(r.max_x, r.max_y),
                Point::new(r.min_x, r.max_y),
            ],
            vec![],
            provenance,
        )
    }

    pub fn exterior(&self) -> &[Point] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    /// Shoelace area with holes subtracted, in m².
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn bbox(&self) -> &Rect {
        &self.bbox
    }

    pub fn vertex_count(&self) -> usize {
        self.exterior.len() + self.holes.iter().map(Vec::len).sum::<usize>()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.bbox.contains_point(p)
            && point_in_ring(p, &self.exterior)
            && !self.holes.iter().any(|h| point_in_ring(p, h))
    }

    /// Full simplicity check: no ring self-crossings and holes inside the exterior.
    pub fn is_simple(&self) -> bool {
        ring_is_simple(&self.exterior)
            && self.holes.iter().all(|h| {
                ring_is_simple(h)
                    && h.iter().all(|p| self.bbox.contains_point(p))
            })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

fn normalize_ring(ring: &[Point], id: &str, what: &str) -> Result<Vec<Point>> {
    if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::Geometry(format!("polygon {id}: non-finite {what} vertex")));
    }
    let cleaned = clean_ring(ring, 1e-9);
    if cleaned.len() < 3 {
        return Err(Error::Geometry(format!(
            "polygon {id}: {what} ring has fewer than 3 distinct vertices"
        )));
    }
    Ok(cleaned)
}

/// Fusion level of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// Ground-truth reference.
    Reference,
    /// One checkpoint × size × date × variant.
    Raw,
    /// Checkpoints pooled.
    Checkpoints,
    /// Checkpoints and tile sizes pooled.
    Sizes,
    /// Everything but the variant pooled.
    Dates,
    /// Original and edge-enhanced pooled.
    Combined,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Reference => "reference",
            Level::Raw => "1",
            Level::Checkpoints => "2",
            Level::Sizes => "3",
            Level::Dates => "4",
            Level::Combined => "combined",
        }
    }

    /// The level reached by pooling layers of `self`.
    pub fn next(&self) -> Option<Level> {
        match self {
            Level::Raw => Some(Level::Checkpoints),
            Level::Checkpoints => Some(Level::Sizes),
            Level::Sizes => Some(Level::Dates),
            Level::Dates => Some(Level::Combined),
            Level::Combined | Level::Reference => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Level::Raw => s.serialize_u8(1),
            Level::Checkpoints => s.serialize_u8(2),
            Level::Sizes => s.serialize_u8(3),
            Level::Dates => s.serialize_u8(4),
            other => s.serialize_str(other.as_str()),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u8),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(1) => Ok(Level::Raw),
            Raw::N(2) => Ok(Level::Checkpoints),
            Raw::N(3) => Ok(Level::Sizes),
            Raw::N(4) => Ok(Level::Dates),
            Raw::S(s) if s == "combined" => Ok(Level::Combined),
            Raw::S(s) if s == "reference" => Ok(Level::Reference),
            _ => Err(serde::de::Error::custom("unknown level")),
        }
    }
}

/// Identifies a layer by level plus the configuration it was produced
/// under; `None` means combined over that dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LayerKey {
    pub level: Level,
    pub checkpoint: Option<Checkpoint>,
    pub tile_size: Option<usize>,
    pub date_id: Option<String>,
    pub variant: Option<Variant>,
}

impl LayerKey {
    pub fn reference() -> Self {
        Self {
            level: Level::Reference,
            checkpoint: None,
            tile_size: None,
            date_id: None,
            variant: None,
        }
    }

    pub fn raw(checkpoint: Checkpoint, tile_size: usize, date_id: impl Into<String>, variant: Variant) -> Self {
        Self {
            level: Level::Raw,
            checkpoint: Some(checkpoint),
            tile_size: Some(tile_size),
            date_id: Some(date_id.into()),
            variant: Some(variant),
        }
    }

    /// Key after pooling one more dimension, following the level order.
    pub fn pooled(&self) -> Option<LayerKey> {
        let level = self.level.next()?;
        let mut k = self.clone();
        k.level = level;
        match level {
            Level::Checkpoints => k.checkpoint = None,
            Level::Sizes => k.tile_size = None,
            Level::Dates => k.date_id = None,
            Level::Combined => k.variant = None,
            Level::Raw | Level::Reference => unreachable!(),
        }
        Some(k)
    }
}

impl fmt::Display for LayerKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "*".into());
        write!(
            f,
            "L{}/{}/{}/{}/{}",
            self.level,
            opt(self.date_id.clone()),
            opt(self.variant.map(|v| v.to_string())),
            opt(self.tile_size.map(|s| s.to_string())),
            opt(self.checkpoint.map(|c| c.to_string())),
        )
    }
}

/// A set of polygons tagged with level and configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionLayer {
    pub key: LayerKey,
    polygons: Vec<FieldPolygon>,
}

impl PredictionLayer {
    pub fn new(key: LayerKey, polygons: Vec<FieldPolygon>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(polygons.len());
        for p in &polygons {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Geometry(format!("duplicate polygon id '{}' in layer {key}", p.id)));
            }
        }
        Ok(Self { key, polygons })
    }

    pub fn empty(key: LayerKey) -> Self {
        Self { key, polygons: Vec::new() }
    }

    pub fn polygons(&self) -> &[FieldPolygon] {
        &self.polygons
    }

    pub fn into_polygons(self) -> Vec<FieldPolygon> {
        self.polygons
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.polygons.iter().map(FieldPolygon::area).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: f64, y: f64, s: f64) -> Vec<Point> {
        vec![
            Point::new(x, y),
            Point::new(x + s, y),
            Point::new(x + s, y + s),
            Point::new(x, y + s),
        ]
    }

    #[test]
    fn areas() {
        let p = FieldPolygon::new("a", sq(0.0, 0.0, 1.0), vec![], Provenance::default()).unwrap();
        assert_eq!(p.area(), 1.0);
        let tri = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert_eq!(FieldPolygon::new("t", tri, vec![], Provenance::default()).unwrap().area(), 0.5);
        let holed = FieldPolygon::new("h", sq(0.0, 0.0, 1.0), vec![sq(0.25, 0.25, 0.5)], Provenance::default()).unwrap();
        assert_eq!(holed.area(), 0.75);
        assert!(signed_area(&holed.holes()[0]) < 0.0);
        assert!(!holed.contains(&Point::new(0.5, 0.5)));
        assert!(holed.contains(&Point::new(0.1, 0.5)));
    }

    #[test]
    fn orientation_is_normalized() {
        let mut cw = sq(0.0, 0.0, 2.0);
        cw.reverse();
        let p = FieldPolygon::new("a", cw, vec![], Provenance::default()).unwrap();
        assert!(signed_area(p.exterior()) > 0.0);
        assert_eq!(p.bbox(), &Rect::new(0.0, 0.0, 2.0, 2.0));
    }

    #[test]
    fn degenerate_rings_rejected() {
        let line = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert!(FieldPolygon::new("l", line, vec![], Provenance::default()).is_err());
        let two = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(FieldPolygon::new("x", two, vec![], Provenance::default()).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let a = FieldPolygon::new("a", sq(0.0, 0.0, 1.0), vec![], Provenance::default()).unwrap();
        assert!(PredictionLayer::new(LayerKey::reference(), vec![a.clone(), a]).is_err());
    }

    #[test]
    fn pooling_follows_levels() {
        let k = LayerKey::raw(Checkpoint::VitB, 512, "T4", Variant::Original);
        let k2 = k.pooled().unwrap();
        assert_eq!(k2.level, Level::Checkpoints);
        assert_eq!(k2.checkpoint, None);
        let k5 = k2.pooled().unwrap().pooled().unwrap().pooled().unwrap();
        assert_eq!(k5.level, Level::Combined);
        assert_eq!(k5.variant, None);
        assert!(k5.pooled().is_none());
        assert_eq!(k.to_string(), "L1/T4/original/512/vit_b");
    }

    #[test]
    fn level_serde() {
        assert_eq!(serde_json::to_string(&Level::Sizes).unwrap(), "3");
        assert_eq!(serde_json::to_string(&Level::Combined).unwrap(), "\"combined\"");
        let l: Level = serde_json::from_str("2").unwrap();
        assert_eq!(l, Level::Checkpoints);
        let t: TileRef = serde_json::from_str("\"merged\"").unwrap();
        assert_eq!(t, TileRef::Merged);
    }
}
