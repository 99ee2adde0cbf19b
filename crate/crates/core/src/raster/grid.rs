use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned, north-up mapping from pixel indices to world meters.
///
/// Pixel `(col, row)` covers `[ox + col·px, ox + (col+1)·px] × [oy − (row+1)·px, oy − row·px]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_size: f64,
}

impl GeoTransform {
    pub fn new(origin_x: f64, origin_y: f64, pixel_size: f64) -> Result<Self> {
        if !(pixel_size > 0.0) || !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "geotransform needs finite origin and pixel_size > 0 (got {origin_x}, {origin_y}, {pixel_size})"
            )));
        }
        Ok(Self {
            origin_x,
            origin_y,
            pixel_size,
        })
    }

    /// World coordinates of a pixel-grid corner (fractional indices allowed).
    #[inline]
    pub fn grid_to_world(&self, gx: f64, gy: f64) -> (f64, f64) {
        (
            self.origin_x + gx * self.pixel_size,
            self.origin_y - gy * self.pixel_size,
        )
    }

    /// Inverse of [`grid_to_world`](Self::grid_to_world).
    #[inline]
    pub fn world_to_grid(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin_x) / self.pixel_size,
            (self.origin_y - y) / self.pixel_size,
        )
    }

    /// World coordinates of the center of pixel `(col, row)`.
    #[inline]
    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        self.grid_to_world(col as f64 + 0.5, row as f64 + 0.5)
    }

    /// Transform of a sub-grid whose top-left pixel is `(col, row)` of this grid.
    pub fn offset(&self, col: usize, row: usize) -> Self {
        let (x, y) = self.grid_to_world(col as f64, row as f64);
        Self {
            origin_x: x,
            origin_y: y,
            pixel_size: self.pixel_size,
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.origin_x, self.origin_y, self.pixel_size]
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        Self::new(a[0], a[1], a[2])
    }
}

/// One named floating-point value plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub name: String,
    pub data: Vec<f32>,
}

/// Georeferenced multi-band floating-point raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    width: usize,
    height: usize,
    bands: Vec<Band>,
    transform: GeoTransform,
    crs_id: u32,
    nodata: Option<f32>,
}

impl RasterGrid {
    pub fn new(
        width: usize,
        height: usize,
        bands: Vec<Band>,
        transform: GeoTransform,
        crs_id: u32,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "raster dimensions must be positive (got {width}x{height})"
            )));
        }
        for b in &bands {
            if b.data.len() != width * height {
                return Err(Error::RasterMismatch(format!(
                    "band '{}' has {} values, expected {}",
                    b.name,
                    b.data.len(),
                    width * height
                )));
            }
        }
        Ok(Self {
            width,
            height,
            bands,
            transform,
            crs_id,
            nodata: None,
        })
    }

    pub fn with_nodata(mut self, nodata: Option<f32>) -> Self {
        self.nodata = nodata;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    pub fn crs_id(&self) -> u32 {
        self.crs_id
    }

    pub fn nodata(&self) -> Option<f32> {
        self.nodata
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band(&self, name: &str) -> Option<&Band> {
        self.bands.iter().find(|b| b.name == name)
    }

    pub fn band_required(&self, name: &str) -> Result<&Band> {
        self.band(name)
            .ok_or_else(|| Error::RasterMismatch(format!("missing band '{name}'")))
    }

    pub fn into_bands(self) -> Vec<Band> {
        self.bands
    }

    /// World-space extent `(min_x, min_y, max_x, max_y)`.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        let (x0, y1) = self.transform.grid_to_world(0.0, 0.0);
        let (x1, y0) = self
            .transform
            .grid_to_world(self.width as f64, self.height as f64);
        (x0, y0, x1, y1)
    }
}

/// Output variant of a byte composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    EdgeEnhanced,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::EdgeEnhanced => "edge_enhanced",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Variant::Original),
            "edge_enhanced" => Ok(Variant::EdgeEnhanced),
            other => Err(Error::InvalidParameter(format!("unknown variant '{other}'"))),
        }
    }
}

/// Three 8-bit channels, row-major, sharing one geotransform.
#[derive(Debug, Clone, PartialEq)]
pub struct ByteComposite {
    width: usize,
    height: usize,
    channels: [Vec<u8>; 3],
    transform: GeoTransform,
    crs_id: u32,
    pub variant: Variant,
    pub date_id: String,
}

impl ByteComposite {
    pub fn new(
        width: usize,
        height: usize,
        channels: [Vec<u8>; 3],
        transform: GeoTransform,
        crs_id: u32,
        variant: Variant,
        date_id: impl Into<String>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "composite dimensions must be positive (got {width}x{height})"
            )));
        }
        if channels.iter().any(|c| c.len() != width * height) {
            return Err(Error::RasterMismatch(
                "composite channel length does not match width x height".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            channels,
            transform,
            crs_id,
            variant,
            date_id: date_id.into(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> &[Vec<u8>; 3] {
        &self.channels
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    pub fn crs_id(&self) -> u32 {
        self.crs_id
    }

    /// Interleaved RGB bytes, as written to PNG.
    pub fn interleaved(&self) -> Vec<u8> {
        let n = self.width * self.height;
        let mut out = Vec::with_capacity(n * 3);
        for i in 0..n {
            out.push(self.channels[0][i]);
            out.push(self.channels[1][i]);
            out.push(self.channels[2][i]);
        }
        out
    }

    pub fn from_interleaved(
        width: usize,
        height: usize,
        rgb: &[u8],
        transform: GeoTransform,
        crs_id: u32,
        variant: Variant,
        date_id: impl Into<String>,
    ) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::RasterMismatch(format!(
                "interleaved buffer has {} bytes, expected {}",
                rgb.len(),
                width * height * 3
            )));
        }
        let mut channels = [Vec::new(), Vec::new(), Vec::new()];
        for (c, ch) in channels.iter_mut().enumerate() {
            *ch = rgb.iter().skip(c).step_by(3).copied().collect();
        }
        Self::new(width, height, channels, transform, crs_id, variant, date_id)
    }
}

/// Half-sample symmetric index reflection (`d c b a | a b c d | d c b a`).
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}
