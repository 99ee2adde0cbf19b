//! Ratio pansharpening of blue/green/NIR against a panchromatic band.

use serde::{Deserialize, Serialize};

use super::grid::{Band, GeoTransform, RasterGrid};
use crate::error::{Error, Result};

pub const MS_BANDS: [&str; 3] = ["blue", "green", "nir"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resampling {
    Nearest,
    #[default]
    Bilinear,
}

/// Pansharpened bands on the panchromatic grid.
#[derive(Debug, Clone)]
pub struct Pansharpened {
    pub raster: RasterGrid,
    /// Pixels whose blue+green+NIR denominator was zero (weight forced to 0).
    pub flagged: Vec<bool>,
}

impl Pansharpened {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

/// Samples `src` (on `src_t`, `src_w × src_h`) at the centers of a destination grid.
pub fn resample_plane(
    src: &[f32],
    src_w: usize,
    src_h: usize,
    src_t: &GeoTransform,
    dst_w: usize,
    dst_h: usize,
    dst_t: &GeoTransform,
    method: Resampling,
) -> Vec<f32> {
    let mut out = vec![0.0f32; dst_w * dst_h];
    for row in 0..dst_h {
        for col in 0..dst_w {
            let (x, y) = dst_t.pixel_center(col, row);
            let (gx, gy) = src_t.world_to_grid(x, y);
            out[row * dst_w + col] = match method {
                Resampling::Nearest => {
                    let c = (gx.floor().max(0.0) as usize).min(src_w - 1);
                    let r = (gy.floor().max(0.0) as usize).min(src_h - 1);
                    src[r * src_w + c]
                }
                Resampling::Bilinear => bilinear_clamped(src, src_w, src_h, gx - 0.5, gy - 0.5),
            };
        }
    }
    out
}

/// Bilinear interpolation in pixel-center coordinates with edge clamping.
pub(crate) fn bilinear_clamped(src: &[f32], w: usize, h: usize, cx: f64, cy: f64) -> f32 {
    let cx = cx.clamp(0.0, (w - 1) as f64);
    let cy = cy.clamp(0.0, (h - 1) as f64);
    let x0 = cx.floor() as usize;
    let y0 = cy.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = cx - x0 as f64;
    let fy = cy - y0 as f64;
    let v = |x: usize, y: usize| f64::from(src[y * w + x]);
    let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
    let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
    (top * (1.0 - fy) + bottom * fy) as f32
}

/// Resamples the `blue`, `green` and `nir` bands of `ms` onto the grid of
/// `pan` and scales each by `pan / (blue + green + nir)`.
///
/// Both rasters must cover the same extent in the same CRS. The first band
/// of `pan` is used.
pub fn pansharpen(ms: &RasterGrid, pan: &RasterGrid, method: Resampling) -> Result<Pansharpened> {
    if ms.crs_id() != pan.crs_id() {
        return Err(Error::RasterMismatch(format!(
            "CRS differs: {} vs {}",
            ms.crs_id(),
            pan.crs_id()
        )));
    }
    let (a0, a1, a2, a3) = ms.extent();
    let (b0, b1, b2, b3) = pan.extent();
    let tol = 1e-6 * ms.transform().pixel_size;
    if (a0 - b0).abs() > tol || (a1 - b1).abs() > tol || (a2 - b2).abs() > tol || (a3 - b3).abs() > tol
    {
        return Err(Error::RasterMismatch(format!(
            "multispectral extent ({a0}, {a1}, {a2}, {a3}) does not match panchromatic extent ({b0}, {b1}, {b2}, {b3})"
        )));
    }
    let pan_band = pan
        .bands()
        .first()
        .ok_or_else(|| Error::RasterMismatch("panchromatic raster has no band".into()))?;
    let (w, h) = (pan.width(), pan.height());
    let resampled: Vec<Vec<f32>> = MS_BANDS
        .iter()
        .map(|name| {
            let band = ms.band_required(name)?;
            Ok(resample_plane(
                &band.data,
                ms.width(),
                ms.height(),
                ms.transform(),
                w,
                h,
                pan.transform(),
                method,
            ))
        })
        .collect::<Result<_>>()?;

    let n = w * h;
    let mut flagged = vec![false; n];
    let mut out: [Vec<f32>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let (b, g, nir) = (
            f64::from(resampled[0][i]),
            f64::from(resampled[1][i]),
            f64::from(resampled[2][i]),
        );
        let denom = b + g + nir;
        let weight = if denom == 0.0 || !denom.is_finite() {
            flagged[i] = true;
            0.0
        } else {
            f64::from(pan_band.data[i]) / denom
        };
        out[0][i] = (weight * b) as f32;
        out[1][i] = (weight * g) as f32;
        out[2][i] = (weight * nir) as f32;
    }
    let [ob, og, on] = out;
    let bands = vec![
        Band { name: MS_BANDS[0].into(), data: ob },
        Band { name: MS_BANDS[1].into(), data: og },
        Band { name: MS_BANDS[2].into(), data: on },
    ];
    let raster = RasterGrid::new(w, h, bands, *pan.transform(), pan.crs_id())?;
    Ok(Pansharpened { raster, flagged })
}
