//! A segmenter stand-in that degrades ground truth instead of reading pixels.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::stream::Key;
use crate::error::{Error, Result};
use crate::raster::{GeoTransform, Tile, TileWindow, Variant};
use crate::vector::{burn_polygon, Checkpoint, LayerKey, PredictionLayer, Rect, SpatialIndex};

/// One cell of the configuration grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub checkpoint: Checkpoint,
    pub tile_size: usize,
    pub date_id: String,
    pub variant: Variant,
}

impl SegmentConfig {
    pub fn new(checkpoint: Checkpoint, tile_size: usize, date_id: impl Into<String>, variant: Variant) -> Self {
        Self {
            checkpoint,
            tile_size,
            date_id: date_id.into(),
            variant,
        }
    }

    pub fn layer_key(&self) -> LayerKey {
        LayerKey::raw(self.checkpoint, self.tile_size, self.date_id.clone(), self.variant)
    }
}

/// Per-dimension probability that, for a given field, a configuration's
/// whole sub-grid (everything nested below that dimension) reproduces a
/// shared template sub-grid instead of drawing independently. Nesting runs
/// variant → date → tile size → checkpoint. All zeros means fully
/// independent streams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Redundancy {
    pub checkpoint: f64,
    pub tile_size: f64,
    pub date: f64,
    pub variant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationSpec {
    pub seed: u64,
    pub dropout_rate: f64,
    /// Standard deviation of boundary pixel displacement, pixels.
    pub boundary_jitter_sigma: f64,
    /// Probability that two adjacent surviving fields come out as one mask.
    pub aggregation_rate: f64,
    /// Detection multiplier per tile size; missing sizes use 1.
    pub size_response: BTreeMap<usize, f64>,
    /// Detection multiplier per date; missing dates use 1.
    pub date_response: BTreeMap<String, f64>,
    pub redundancy: Redundancy,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            dropout_rate: 0.0,
            boundary_jitter_sigma: 0.0,
            aggregation_rate: 0.0,
            size_response: BTreeMap::new(),
            date_response: BTreeMap::new(),
            redundancy: Redundancy::default(),
        }
    }
}

impl DegradationSpec {
    pub fn validate(&self) -> Result<()> {
        let r = &self.redundancy;
        let rates = [
            ("dropout_rate", self.dropout_rate),
            ("aggregation_rate", self.aggregation_rate),
            ("redundancy.checkpoint", r.checkpoint),
            ("redundancy.tile_size", r.tile_size),
            ("redundancy.date", r.date),
            ("redundancy.variant", r.variant),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(self.boundary_jitter_sigma >= 0.0) {
            return Err(Error::InvalidParameter("boundary_jitter_sigma must be >= 0".into()));
        }
        let multipliers = self.size_response.values().chain(self.date_response.values());
        if let Some(m) = multipliers.into_iter().find(|m| !(**m > 0.0)) {
            return Err(Error::InvalidParameter(format!("response multipliers must be > 0, got {m}")));
        }
        Ok(())
    }

    /// Survival probability of any field under `config`.
    pub fn detectability(&self, config: &SegmentConfig) -> f64 {
        let size = self.size_response.get(&config.tile_size).copied().unwrap_or(1.0);
        let date = self.date_response.get(&config.date_id).copied().unwrap_or(1.0);
        ((1.0 - self.dropout_rate) * size * date).clamp(0.0, 1.0)
    }
}

/// Analytic pooled detection for uniform detectability `p`: the miss
/// probability after pooling `m` children, a fraction `rho` of which are
/// template clones, is Σⱼ C(m,j) ρʲ (1-ρ)^(m-j) q^((m-j) + [j>0]).
pub fn pooled_miss(q: f64, m: usize, rho: f64) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=m {
        if j > 0 {
            binom *= (m - j + 1) as f64 / j as f64;
        }
        let exp = (m - j) + usize::from(j > 0);
        total += binom * rho.powi(j as i32) * (1.0 - rho).powi((m - j) as i32) * q.powi(exp as i32);
    }
    total
}

/// Expected detection % at levels 1–4 and after combining variants for a
/// `checkpoints × sizes × dates × variants` grid with uniform detectability `p`.
pub fn analytic_staircase(p: f64, dims: [usize; 4], redundancy: &Redundancy) -> [f64; 5] {
    let rhos = [redundancy.checkpoint, redundancy.tile_size, redundancy.date, redundancy.variant];
    let mut q = 1.0 - p;
    let mut out = [100.0 * p, 0.0, 0.0, 0.0, 0.0];
    for (i, (&m, &rho)) in dims.iter().zip(&rhos).enumerate() {
        q = pooled_miss(q, m, rho);
        out[i + 1] = 100.0 * (1.0 - q);
    }
    out
}

/// Mock segmenter over a fixed ground truth.
#[derive(Debug, Clone)]
pub struct MockSegmenter {
    gt: PredictionLayer,
    index: SpatialIndex,
    deg: DegradationSpec,
}

fn config_key(seed: u64, c: &SegmentConfig) -> Key {
    Key::new(seed)
        .with_str(c.checkpoint.as_str())
        .with(c.tile_size as u64)
        .with_str(&c.date_id)
        .with_str(c.variant.as_str())
}

impl MockSegmenter {
    pub fn new(gt: PredictionLayer, deg: DegradationSpec) -> Result<Self> {
        deg.validate()?;
        let index = SpatialIndex::build(gt.polygons());
        Ok(Self { gt, index, deg })
    }

    pub fn degradation(&self) -> &DegradationSpec {
        &self.deg
    }

    /// Whether field `field_id` survives under `config`; identical for
    /// every tile that sees the field.
    pub fn field_survives(&self, field_id: &str, config: &SegmentConfig) -> bool {
        let p = self.deg.detectability(config);
        if p >= 1.0 {
            return true;
        }
        let r = &self.deg.redundancy;
        let mut path = Key::new(self.deg.seed).with_str("field").with_str(field_id);
        let size = config.tile_size.to_string();
        let levels = [
            (r.variant, config.variant.as_str()),
            (r.date, config.date_id.as_str()),
            (r.tile_size, size.as_str()),
            (r.checkpoint, config.checkpoint.as_str()),
        ];
        for (rho, value) in levels {
            let clone = rho > 0.0 && path.with_str("clone").with_str(value).uniform() < rho;
            path = path.with_str(if clone { "*" } else { value });
        }
        path.with_str("survive").uniform() < p
    }

    /// Label mask for a `size × size` tile whose top-left corner is at
    /// `transform`'s origin (row-major). Pixels outside the leading
    /// `valid.0 × valid.1` block are 0; labels are dense from 1 in raster order.
    pub fn segment_region(&self, transform: &GeoTransform, size: usize, valid: (usize, usize), config: &SegmentConfig) -> Vec<u32> {
        let n = size;
        let (vw, vh) = (valid.0.min(n), valid.1.min(n));
        let (x0, y0) = transform.grid_to_world(0.0, 0.0);
        let (x1, y1) = transform.grid_to_world(vw as f64, vh as f64);
        let valid = Rect::new(x0, y1, x1, y0);
        let polys = self.gt.polygons();

        let mut raster = vec![0u32; n * n];
        let mut ids: Vec<usize> = Vec::new();
        for slot in self.index.query(&valid) {
            if polys[slot].bbox().intersection_area(&valid) <= 0.0 || !self.field_survives(&polys[slot].id, config) {
                continue;
            }
            ids.push(slot);
            burn_polygon(&mut raster, n, n, transform, &polys[slot], slot as u32 + 1);
        }
        for r in 0..n {
            for c in 0..n {
                if c >= vw || r >= vh {
                    raster[r * n + c] = 0;
                }
            }
        }

        let key = config_key(self.deg.seed, config);
        if self.deg.aggregation_rate > 0.0 {
            self.aggregate(&mut raster, n, (vw, vh), &key);
        }
        if self.deg.boundary_jitter_sigma > 0.0 {
            raster = self.jitter(&raster, n, (vw, vh), transform, &key);
        }
        compact_labels(&mut raster);
        raster
    }

    pub fn segment_window(&self, window: &TileWindow, transform: &GeoTransform, config: &SegmentConfig) -> Vec<u32> {
        self.segment_region(transform, window.size, (window.valid_width, window.valid_height), config)
    }

    pub fn segment(&self, tile: &Tile, config: &SegmentConfig) -> Vec<u32> {
        self.segment_window(&tile.window, &tile.transform, config)
    }

    fn aggregate(&self, raster: &mut [u32], n: usize, (vw, vh): (usize, usize), key: &Key) {
        let polys = self.gt.polygons();
        let mut parent: HashMap<u32, u32> = HashMap::new();
        fn find(parent: &mut HashMap<u32, u32>, x: u32) -> u32 {
            let p = *parent.get(&x).unwrap_or(&x);
            if p == x {
                return x;
            }
            let root = find(parent, p);
            parent.insert(x, root);
            root
        }
        let mut pairs = std::collections::BTreeSet::new();
        for r in 0..vh {
            for c in 0..vw {
                let a = raster[r * n + c];
                for b in [(c + 1 < vw).then(|| raster[r * n + c + 1]), (r + 1 < vh).then(|| raster[(r + 1) * n + c])]
                    .into_iter()
                    .flatten()
                {
                    if a != 0 && b != 0 && a != b {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
        for (a, b) in pairs {
            let (ida, idb) = (&polys[a as usize - 1].id, &polys[b as usize - 1].id);
            let (lo, hi) = if ida <= idb { (ida, idb) } else { (idb, ida) };
            if key.with_str("aggregate").with_str(lo).with_str(hi).uniform() < self.deg.aggregation_rate {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent.insert(ra.max(rb), ra.min(rb));
                }
            }
        }
        if parent.is_empty() {
            return;
        }
        for v in raster.iter_mut() {
            if *v != 0 {
                *v = find(&mut parent, *v);
            }
        }
    }

    /// Displacements are keyed by the pixel's position on the global grid so
    /// overlapping or adjacent tiles agree.
    fn jitter(&self, raster: &[u32], n: usize, (vw, vh): (usize, usize), transform: &GeoTransform, key: &Key) -> Vec<u32> {
        let gx0 = (transform.origin_x / transform.pixel_size).round() as i64;
        let gy0 = (-transform.origin_y / transform.pixel_size).round() as i64;
        let mut out = raster.to_vec();
        let sigma = self.deg.boundary_jitter_sigma;
        for r in 0..vh {
            for c in 0..vw {
                let v = raster[r * n + c];
                let boundary = (c > 0 && raster[r * n + c - 1] != v)
                    || (c + 1 < vw && raster[r * n + c + 1] != v)
                    || (r > 0 && raster[(r - 1) * n + c] != v)
                    || (r + 1 < vh && raster[(r + 1) * n + c] != v);
                if !boundary {
                    continue;
                }
                let pix = key
                    .with_str("jitter")
                    .with((gx0 + c as i64) as u64)
                    .with((gy0 + r as i64) as u64);
                let dx = (pix.with(0).normal() * sigma).round() as isize;
                let dy = (pix.with(1).normal() * sigma).round() as isize;
                let sc = (c as isize + dx).clamp(0, vw as isize - 1) as usize;
                let sr = (r as isize + dy).clamp(0, vh as isize - 1) as usize;
                out[r * n + c] = raster[sr * n + sc];
            }
        }
        out
    }
}

fn compact_labels(raster: &mut [u32]) {
    let mut map = HashMap::new();
    for v in raster.iter_mut() {
        if *v != 0 {
            let next = map.len() as u32 + 1;
            *v = *map.entry(*v).or_insert(next);
        }
    }
}

/// One-off segmentation of a tile against `gt`.
pub fn mock_segment(tile: &Tile, gt: &PredictionLayer, deg: &DegradationSpec, config: &SegmentConfig) -> Result<Vec<u32>> {
    Ok(MockSegmenter::new(gt.clone(), deg.clone())?.segment(tile, config))
}
