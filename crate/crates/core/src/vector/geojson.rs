//! GeoJSON FeatureCollection reading and writing for prediction layers.
//!
//! The layer key goes in a top-level `properties` object; each feature
//! carries its polygon's provenance plus the layer level.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::Point;
use super::polygon::{Checkpoint, FieldPolygon, LayerKey, Level, PredictionLayer, Provenance, TileRef};
use crate::error::{Error, Result};
use crate::raster::Variant;

#[derive(Debug, Serialize, Deserialize)]
struct Collection {
    #[serde(rename = "type")]
    kind: String,
    properties: LayerKey,
    features: Vec<Feature>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Feature {
    #[serde(rename = "type")]
    kind: String,
    id: String,
    properties: FeatureProps,
    geometry: Geometry,
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureProps {
    checkpoint: Option<Checkpoint>,
    tile_size: Option<usize>,
    date_id: Option<String>,
    variant: Option<Variant>,
    level: Level,
    tile_index: Option<TileRef>,
    area_m2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Geometry {
    #[serde(rename = "type")]
    kind: String,
    coordinates: Vec<Vec<[f64; 2]>>,
}

fn closed(ring: &[Point]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = ring.iter().map(|p| [p.x, p.y]).collect();
    out.push(out[0]);
    out
}

pub fn layer_to_string(layer: &PredictionLayer) -> Result<String> {
    let features = layer
        .polygons()
        .iter()
        .map(|p| Feature {
            kind: "Feature".into(),
            id: p.id.clone(),
            properties: FeatureProps {
                checkpoint: p.provenance.checkpoint,
                tile_size: p.provenance.tile_size,
                date_id: p.provenance.date_id.clone(),
                variant: p.provenance.variant,
                level: layer.key.level,
                tile_index: p.provenance.tile,
                area_m2: p.area(),
            },
            geometry: Geometry {
                kind: "Polygon".into(),
                coordinates: std::iter::once(closed(p.exterior()))
                    .chain(p.holes().iter().map(|h| closed(h)))
                    .collect(),
            },
        })
        .collect();
    let fc = Collection {
        kind: "FeatureCollection".into(),
        properties: layer.key.clone(),
        features,
    };
    serde_json::to_string(&fc).map_err(|e| Error::json("layer", e))
}

pub fn layer_from_str(text: &str) -> Result<PredictionLayer> {
    let fc: Collection = serde_json::from_str(text).map_err(|e| Error::json("layer", e))?;
    if fc.kind != "FeatureCollection" {
        return Err(Error::Geometry(format!("expected a FeatureCollection, got '{}'", fc.kind)));
    }
    let mut polys = Vec::with_capacity(fc.features.len());
    for f in fc.features {
        if f.geometry.kind != "Polygon" || f.geometry.coordinates.is_empty() {
            return Err(Error::Geometry(format!("feature {}: unsupported geometry '{}'", f.id, f.geometry.kind)));
        }
        let mut rings = f
            .geometry
            .coordinates
            .into_iter()
            .map(|r| r.into_iter().map(|[x, y]| Point::new(x, y)).collect::<Vec<_>>());
        let exterior = rings.next().unwrap();
        let prov = Provenance {
            checkpoint: f.properties.checkpoint,
            tile_size: f.properties.tile_size,
            date_id: f.properties.date_id,
            variant: f.properties.variant,
            tile: f.properties.tile_index,
        };
        polys.push(FieldPolygon::new(f.id, exterior, rings.collect(), prov)?);
    }
    PredictionLayer::new(fc.properties, polys)
}

pub fn write_layer(path: &Path, layer: &PredictionLayer) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = layer_to_string(layer)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_layer(path: &Path) -> Result<PredictionLayer> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    layer_from_str(&text).map_err(|e| match e {
        Error::Json { source, .. } => Error::json(path.display().to_string(), source),
        other => other,
    })
}
