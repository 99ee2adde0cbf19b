use serde::{Deserialize, Serialize};

use super::affine::{warp, AffineTransform};
use super::grid::{ByteComposite, RasterGrid, Variant};
use super::normalize::percentile_normalize;
use super::pansharpen::{pansharpen, Resampling, MS_BANDS};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositeParams {
    pub p_low: f64,
    pub p_high: f64,
    pub resampling: Resampling,
}

impl Default for CompositeParams {
    fn default() -> Self {
        Self {
            p_low: 2.0,
            p_high: 98.0,
            resampling: Resampling::Bilinear,
        }
    }
}

/// Diagnostics collected while building one composite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    pub flagged_pixels: usize,
    pub degenerate_bands: Vec<String>,
    /// Worst relative deviation of Σ(pansharpened) from pan over unflagged pixels.
    pub pan_identity_error: f64,
}

/// Pansharpens, optionally warps onto a reference frame, and stretches the
/// blue/green/NIR bands into an `original` byte composite.
pub fn build_composite(
    ms: &RasterGrid,
    pan: &RasterGrid,
    warp_to_reference: Option<&AffineTransform>,
    params: &CompositeParams,
    date_id: &str,
) -> Result<(ByteComposite, CompositeReport)> {
    let sharpened = pansharpen(ms, pan, params.resampling)?;
    let mut report = CompositeReport {
        flagged_pixels: sharpened.flagged_count(),
        ..Default::default()
    };
    let pan_data = &pan.bands()[0].data;
    for (i, flagged) in sharpened.flagged.iter().enumerate() {
        if *flagged {
            continue;
        }
        let sum: f64 = sharpened.raster.bands().iter().map(|b| f64::from(b.data[i])).sum();
        let p = f64::from(pan_data[i]);
        let rel = (sum - p).abs() / p.abs().max(f64::MIN_POSITIVE);
        report.pan_identity_error = report.pan_identity_error.max(rel);
    }

    let (raster, nodata) = match warp_to_reference {
        Some(t) => (warp(&sharpened.raster, t, params.resampling, f32::NAN)?, None),
        None => (sharpened.raster, None),
    };
    let mut channels: [Vec<u8>; 3] = Default::default();
    for (slot, name) in channels.iter_mut().zip(MS_BANDS) {
        let band = raster.band_required(name)?;
        let norm = percentile_normalize(&band.data, params.p_low, params.p_high, nodata)?;
        if norm.degenerate {
            report.degenerate_bands.push(name.to_string());
        }
        *slot = norm.data;
    }
    let composite = ByteComposite::new(
        raster.width(),
        raster.height(),
        channels,
        *raster.transform(),
        raster.crs_id(),
        Variant::Original,
        date_id,
    )?;
    Ok((composite, report))
}
