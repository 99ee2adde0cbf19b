//! Per-date multispectral and panchromatic rasters for a fieldscape.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::fieldscape::{FieldscapeSpec, GroundTruth};
use super::stream::Key;
use crate::error::Result;
use crate::raster::{Band, GeoTransform, RasterGrid, MS_BANDS};

/// Blue, green, NIR reflectance by growth stage: bright bare soil before
/// sowing, sparse early canopy, dense mid-season canopy, senescing.
const PROFILES: [[f32; 3]; 4] = [
    [0.12, 0.15, 0.24],
    [0.08, 0.12, 0.30],
    [0.04, 0.08, 0.46],
    [0.07, 0.10, 0.32],
];
const BUND_FACTOR: f32 = 0.6;
const MIN_REFLECTANCE: f32 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct DateScene {
    pub date_id: String,
    pub ms: RasterGrid,
    pub pan: RasterGrid,
}

/// Pixels within `width` steps (4-neighbourhood) of a different label.
pub fn bund_mask(truth: &GroundTruth, width: usize) -> Vec<bool> {
    let (w, h) = (truth.width, truth.height);
    let l = &truth.labels;
    let mut mask: Vec<bool> = (0..w * h)
        .map(|i| {
            let (c, r) = (i % w, i / w);
            (c > 0 && l[i - 1] != l[i])
                || (c + 1 < w && l[i + 1] != l[i])
                || (r > 0 && l[i - w] != l[i])
                || (r + 1 < h && l[i + w] != l[i])
        })
        .collect();
    for _ in 1..width {
        let prev = mask.clone();
        for i in 0..w * h {
            let (c, r) = (i % w, i / w);
            if (c > 0 && prev[i - 1]) || (c + 1 < w && prev[i + 1]) || (r > 0 && prev[i - w]) || (r + 1 < h && prev[i + w]) {
                mask[i] = true;
            }
        }
    }
    mask
}

/// Area weights of fine cells overlapping each coarse cell along one axis.
fn overlap_weights(n_coarse: usize, n_fine: usize, ratio: f64) -> Vec<Vec<(usize, f64)>> {
    (0..n_coarse)
        .map(|j| {
            let (lo, hi) = (j as f64 * ratio, (j + 1) as f64 * ratio);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n_fine);
            (first..last)
                .filter_map(|i| {
                    let o = hi.min(i as f64 + 1.0) - lo.max(i as f64);
                    (o > 1e-12).then(|| (i, o / ratio))
                })
                .collect()
        })
        .collect()
}

fn box_average(fine: &[f32], fw: usize, fh: usize, cw: usize, ch: usize, ratio: f64) -> Vec<f32> {
    let wx = overlap_weights(cw, fw, ratio);
    let wy = overlap_weights(ch, fh, ratio);
    (0..ch)
        .into_par_iter()
        .flat_map_iter(|j| {
            let (wx, wy) = (&wx, &wy);
            (0..cw).map(move |i| {
                let mut acc = 0.0f64;
                for &(y, ay) in &wy[j] {
                    for &(x, ax) in &wx[i] {
                        acc += ay * ax * f64::from(fine[y * fw + x]);
                    }
                }
                acc as f32
            })
        })
        .collect()
}

/// Renders every date: per-field reflectance from the growth profile with
/// field-level variation, darkened bunds and Gaussian pixel noise. Pan is
/// the fine-grid band sum; the multispectral bands are area averages onto
/// the coarse grid.
pub fn render_dates(spec: &FieldscapeSpec, truth: &GroundTruth) -> Result<Vec<DateScene>> {
    let (fw, fh) = (truth.width, truth.height);
    let (cw, ch) = spec.ms_dimensions()?;
    let ratio = spec.ms_pixel_size / spec.pixel_size;
    let bunds = bund_mask(truth, spec.bund_width_px.max(1));
    let n_fields = truth.gt.len();
    let ms_t = GeoTransform::new(spec.origin[0], spec.origin[1], spec.ms_pixel_size)?;
    spec.date_ids()
        .into_iter()
        .enumerate()
        .map(|(d, date_id)| {
            let base = PROFILES[d % PROFILES.len()];
            let key = Key::new(spec.seed).with_str("imagery").with(d as u64);
            let mut rng = key.rng();
            let jitter = Normal::new(0.0f32, 0.12).expect("finite");
            // each field sits at its own point of the growth curve
            let field_refl: Vec<[f32; 3]> = (0..n_fields)
                .map(|_| {
                    let g = 1.0 + jitter.sample(&mut rng);
                    let soil: f32 = rng.random_range(0.9..1.1);
                    [base[0] * soil, base[1] * soil * g.sqrt(), base[2] * g]
                })
                .collect();
            let noise = Normal::new(0.0f32, spec.noise_sigma as f32).expect("validated noise");
            let rows: Vec<[Vec<f32>; 3]> = (0..fh)
                .into_par_iter()
                .map(|r| {
                    let mut rng = key.with(r as u64 + 1).rng();
                    let mut row: [Vec<f32>; 3] = Default::default();
                    for c in 0..fw {
                        let i = r * fw + c;
                        let refl = field_refl[truth.labels[i] as usize - 1];
                        let f = if bunds[i] { BUND_FACTOR } else { 1.0 };
                        for b in 0..3 {
                            row[b].push((refl[b] * f + noise.sample(&mut rng)).max(MIN_REFLECTANCE));
                        }
                    }
                    row
                })
                .collect();
            let mut fine: [Vec<f32>; 3] = Default::default();
            for row in rows {
                for b in 0..3 {
                    fine[b].extend_from_slice(&row[b]);
                }
            }
            let pan: Vec<f32> = (0..fw * fh).map(|i| fine[0][i] + fine[1][i] + fine[2][i]).collect();
            let ms_bands = fine
                .iter()
                .zip(MS_BANDS)
                .map(|(band, name)| Band {
                    name: name.to_string(),
                    data: box_average(band, fw, fh, cw, ch, ratio),
                })
                .collect();
            Ok(DateScene {
                date_id,
                ms: RasterGrid::new(cw, ch, ms_bands, ms_t, spec.crs_id)?,
                pan: RasterGrid::new(fw, fh, vec![Band { name: "pan".into(), data: pan }], truth.transform, spec.crs_id)?,
            })
        })
        .collect()
}
