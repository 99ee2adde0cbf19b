//! Synthetic smallholder field mosaics.
//!
//! Fields are cells of a power diagram: seed points with weights drawn from
//! a log-normal area distribution, each pixel assigned to the seed with the
//! smallest `|x - s|² - w`. Disconnected fragments and cells below
//! `min_field_px` are folded into their neighbours, so every label is one
//! 4-connected component and the ground truth is the exact vectorization
//! of the label raster.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stream::Key;
use crate::error::{Error, Result};
use crate::raster::GeoTransform;
use crate::vector::{label_components, vectorize_labels, FieldPolygon, LayerKey, PredictionLayer, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldscapeSpec {
    pub seed: u64,
    /// Width and height, meters.
    pub extent_m: [f64; 2],
    /// World coordinates of the top-left corner.
    pub origin: [f64; 2],
    pub crs_id: u32,
    /// Fine (panchromatic) pixel size, meters.
    pub pixel_size: f64,
    /// Multispectral pixel size, meters.
    pub ms_pixel_size: f64,
    pub median_ha: f64,
    pub sigma: f64,
    pub n_dates: usize,
    pub bund_width_px: usize,
    pub noise_sigma: f64,
    pub min_field_px: usize,
}

impl Default for FieldscapeSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            extent_m: [1000.0, 1000.0],
            origin: [500_000.0, 2_900_000.0],
            crs_id: 32645,
            pixel_size: 0.8,
            ms_pixel_size: 2.0,
            median_ha: 0.05,
            sigma: 0.5,
            n_dates: 4,
            bund_width_px: 1,
            noise_sigma: 0.01,
            min_field_px: 50,
        }
    }
}

fn whole(v: f64, what: &str) -> Result<usize> {
    let r = v.round();
    if r < 1.0 || (v - r).abs() > 1e-6 * r.max(1.0) {
        return Err(Error::InvalidParameter(format!("{what} must be a positive whole number of pixels, got {v}")));
    }
    Ok(r as usize)
}

impl FieldscapeSpec {
    /// Fine-grid dimensions.
    pub fn dimensions(&self) -> Result<(usize, usize)> {
        Ok((
            whole(self.extent_m[0] / self.pixel_size, "extent / pixel_size")?,
            whole(self.extent_m[1] / self.pixel_size, "extent / pixel_size")?,
        ))
    }

    pub fn ms_dimensions(&self) -> Result<(usize, usize)> {
        Ok((
            whole(self.extent_m[0] / self.ms_pixel_size, "extent / ms_pixel_size")?,
            whole(self.extent_m[1] / self.ms_pixel_size, "extent / ms_pixel_size")?,
        ))
    }

    pub fn transform(&self) -> Result<GeoTransform> {
        GeoTransform::new(self.origin[0], self.origin[1], self.pixel_size)
    }

    pub fn date_ids(&self) -> Vec<String> {
        (1..=self.n_dates).map(|d| format!("T{d}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pixel_size > 0.0) || !(self.ms_pixel_size >= self.pixel_size) {
            return Err(Error::InvalidParameter("pixel sizes must be positive with ms_pixel_size >= pixel_size".into()));
        }
        if !(self.median_ha > 0.0) || !(self.sigma >= 0.0) {
            return Err(Error::InvalidParameter("median_ha must be > 0 and sigma >= 0".into()));
        }
        if self.n_dates == 0 || !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter("n_dates must be >= 1 and noise_sigma >= 0".into()));
        }
        self.dimensions()?;
        self.ms_dimensions()?;
        Ok(())
    }
}

/// The label raster a fieldscape was built from plus its vectorization.
/// Label `i` (1-based) is polygon `i - 1` of `gt`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    pub transform: GeoTransform,
    pub crs_id: u32,
    pub labels: Vec<u32>,
    pub gt: PredictionLayer,
}

struct Seed {
    x: f64,
    y: f64,
    w: f64,
}

/// Seeds in grid pixel units, bucketed for nearest-power queries.
struct SeedGrid {
    seeds: Vec<Seed>,
    bucket: f64,
    nbx: usize,
    nby: usize,
    cells: Vec<Vec<u32>>,
    w_max: f64,
}

impl SeedGrid {
    fn new(seeds: Vec<Seed>, width: usize, height: usize, bucket: f64) -> Self {
        let nbx = (width as f64 / bucket).ceil().max(1.0) as usize;
        let nby = (height as f64 / bucket).ceil().max(1.0) as usize;
        let mut cells = vec![Vec::new(); nbx * nby];
        for (i, s) in seeds.iter().enumerate() {
            let bx = ((s.x / bucket) as usize).min(nbx - 1);
            let by = ((s.y / bucket) as usize).min(nby - 1);
            cells[by * nbx + bx].push(i as u32);
        }
        let w_max = seeds.iter().map(|s| s.w).fold(0.0, f64::max);
        Self {
            seeds,
            bucket,
            nbx,
            nby,
            cells,
            w_max,
        }
    }

    fn nearest(&self, x: f64, y: f64) -> u32 {
        let bx = ((x / self.bucket) as isize).min(self.nbx as isize - 1);
        let by = ((y / self.bucket) as isize).min(self.nby as isize - 1);
        let mut best = (f64::INFINITY, u32::MAX);
        let max_r = self.nbx.max(self.nby) as isize;
        for r in 0..=max_r {
            for cy in by - r..=by + r {
                for cx in bx - r..=bx + r {
                    let ring = (cx - bx).abs() == r || (cy - by).abs() == r;
                    if !ring || cx < 0 || cy < 0 || cx >= self.nbx as isize || cy >= self.nby as isize {
                        continue;
                    }
                    for &i in &self.cells[cy as usize * self.nbx + cx as usize] {
                        let s = &self.seeds[i as usize];
                        let d = (x - s.x).powi(2) + (y - s.y).powi(2) - s.w;
                        if d < best.0 || (d == best.0 && i < best.1) {
                            best = (d, i);
                        }
                    }
                }
            }
            // any seed in ring r + 1 is at least r buckets away
            let reach = r as f64 * self.bucket;
            if best.1 != u32::MAX && reach * reach - self.w_max > best.0 {
                break;
            }
        }
        best.1 + 1
    }
}

fn power_partition(spec: &FieldscapeSpec, width: usize, height: usize) -> Vec<u32> {
    let px2 = spec.pixel_size * spec.pixel_size;
    let total_px = (width * height) as f64;
    let median_px = spec.median_ha * 10_000.0 / px2;
    let dist = LogNormal::new(median_px.ln(), spec.sigma).expect("validated sigma");
    let mut rng = Key::new(spec.seed).with_str("fieldscape").rng();
    let mut seeds = Vec::new();
    let mut covered = 0.0;
    while covered < total_px {
        let a: f64 = dist.sample(&mut rng);
        seeds.push(Seed {
            x: rng.random_range(0.0..width as f64),
            y: rng.random_range(0.0..height as f64),
            w: a / std::f64::consts::PI,
        });
        covered += a;
    }
    let mean_px = covered / seeds.len() as f64;
    let grid = SeedGrid::new(seeds, width, height, (2.0 * mean_px.sqrt()).max(4.0));
    (0..height)
        .into_par_iter()
        .flat_map_iter(|r| {
            let g = &grid;
            (0..width).map(move |c| g.nearest(c as f64 + 0.5, r as f64 + 0.5))
        })
        .collect()
}

fn neighbours(i: usize, width: usize, height: usize) -> impl Iterator<Item = usize> {
    let (c, r) = (i % width, i / width);
    [
        (c > 0).then(|| i - 1),
        (c + 1 < width).then(|| i + 1),
        (r > 0).then(|| i - width),
        (r + 1 < height).then(|| i + width),
    ]
    .into_iter()
    .flatten()
}

/// Folds fragments and small cells into neighbours until every label is a
/// single component of at least `min_px` pixels (or the only one left).
fn consolidate(labels: &mut [u32], width: usize, height: usize, min_px: usize) {
    loop {
        let (comp, comps) = label_components(labels, width, height);
        let mut largest = std::collections::HashMap::<u32, (usize, u32)>::new();
        for (k, c) in comps.iter().enumerate() {
            let e = largest.entry(c.label).or_insert((0, 0));
            if c.pixels > e.0 {
                *e = (c.pixels, k as u32 + 1);
            }
        }
        // pixel lists per component, in raster order
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
        for (i, &k) in comp.iter().enumerate() {
            if k > 0 {
                members[k as usize - 1].push(i);
            }
        }
        let mut order: Vec<usize> = (0..comps.len())
            .filter(|&k| {
                let c = &comps[k];
                largest[&c.label].1 != k as u32 + 1 || c.pixels < min_px
            })
            .collect();
        if order.is_empty() || comps.len() < 2 {
            return;
        }
        order.sort_by_key(|&k| (comps[k].pixels, k));
        let mut touched = std::collections::HashSet::new();
        let mut changed = false;
        for k in order {
            let own = comps[k].label;
            if touched.contains(&own) {
                continue;
            }
            let mut shared = std::collections::BTreeMap::<u32, usize>::new();
            for &i in &members[k] {
                for j in neighbours(i, width, height) {
                    if labels[j] != own {
                        *shared.entry(labels[j]).or_default() += 1;
                    }
                }
            }
            let Some((&target, _)) = shared.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) else {
                continue;
            };
            for &i in &members[k] {
                labels[i] = target;
            }
            touched.insert(target);
            changed = true;
        }
        if !changed {
            return;
        }
    }
}

/// Renumbers labels 1..n in raster order of first appearance.
fn compact(labels: &mut [u32]) -> usize {
    let mut map = std::collections::HashMap::new();
    for v in labels.iter_mut() {
        let n = map.len() as u32 + 1;
        *v = *map.entry(*v).or_insert(n);
    }
    map.len()
}

/// Builds the field label raster and its exact polygons.
pub fn generate_ground_truth(spec: &FieldscapeSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let (width, height) = spec.dimensions()?;
    let transform = spec.transform()?;
    let mut labels = power_partition(spec, width, height);
    consolidate(&mut labels, width, height, spec.min_field_px);
    let n = compact(&mut labels);
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "extent {}x{} m holds fewer than 2 fields at median {} ha",
            spec.extent_m[0], spec.extent_m[1], spec.median_ha
        )));
    }
    let mut found = vectorize_labels(&labels, width, height, &transform, 0.0, &Provenance::default(), "")?;
    found.sort_by_key(|l| l.label);
    debug_assert_eq!(found.len(), n);
    let polys: Vec<FieldPolygon> = found
        .into_iter()
        .map(|l| l.polygon.with_id(format!("f{}", l.label)))
        .collect();
    Ok(GroundTruth {
        width,
        height,
        transform,
        crs_id: spec.crs_id,
        labels,
        gt: PredictionLayer::new(LayerKey::reference(), polys)?,
    })
}
