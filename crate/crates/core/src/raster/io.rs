//! Sidecar-header raster interchange.
//!
//! `<stem>.rasterjson` describes the grid; pixel data lives next to it in
//! `<stem>.rasterbin` (little-endian, row-major, band-sequential) or, for
//! byte composites, in `<stem>.png`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{Band, ByteComposite, GeoTransform, RasterGrid, Variant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    U8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<String>,
    pub dtype: Dtype,
    pub geotransform: [f64; 3],
    pub crs_id: u32,
    pub nodata: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_id: Option<String>,
}

fn with_ext(header: &Path, ext: &str) -> PathBuf {
    header.with_extension(ext)
}

fn write_header(path: &Path, header: &RasterHeader) -> Result<()> {
    let text = serde_json::to_string_pretty(header).map_err(|e| Error::json(path.display().to_string(), e))?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_header(path: &Path) -> Result<RasterHeader> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

/// Writes `<path>` (.rasterjson) and its `.rasterbin` payload as f32.
pub fn write_raster(path: &Path, raster: &RasterGrid) -> Result<()> {
    let header = RasterHeader {
        width: raster.width(),
        height: raster.height(),
        bands: raster.bands().iter().map(|b| b.name.clone()).collect(),
        dtype: Dtype::F32,
        geotransform: raster.transform().to_array(),
        crs_id: raster.crs_id(),
        nodata: raster.nodata().map(f64::from),
        variant: None,
        date_id: None,
    };
    write_header(path, &header)?;
    let mut bytes = Vec::with_capacity(raster.width() * raster.height() * 4 * raster.bands().len());
    for band in raster.bands() {
        for v in &band.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let bin = with_ext(path, "rasterbin");
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))
}

/// Reads a raster; `u8` payloads are widened to f32.
pub fn read_raster(path: &Path) -> Result<RasterGrid> {
    let header = read_header(path)?;
    let n = header.width * header.height;
    let bin = with_ext(path, "rasterbin");
    let bands: Vec<Vec<f32>> = if bin.exists() {
        let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        let per = match header.dtype {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        };
        if bytes.len() != n * per * header.bands.len() {
            return Err(Error::RasterMismatch(format!(
                "{} holds {} bytes, header implies {}",
                bin.display(),
                bytes.len(),
                n * per * header.bands.len()
            )));
        }
        bytes
            .chunks(n * per)
            .map(|chunk| match header.dtype {
                Dtype::F32 => chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect(),
                Dtype::U8 => chunk.iter().map(|&v| f32::from(v)).collect(),
            })
            .collect()
    } else {
        let c = read_composite(path)?;
        c.channels()
            .iter()
            .map(|ch| ch.iter().map(|&v| f32::from(v)).collect())
            .collect()
    };
    let bands = header
        .bands
        .iter()
        .zip(bands)
        .map(|(name, data)| Band { name: name.clone(), data })
        .collect();
    Ok(RasterGrid::new(
        header.width,
        header.height,
        bands,
        GeoTransform::from_array(header.geotransform)?,
        header.crs_id,
    )?
    .with_nodata(header.nodata.map(|v| v as f32)))
}

fn composite_header(c: &ByteComposite) -> RasterHeader {
    RasterHeader {
        width: c.width(),
        height: c.height(),
        bands: vec!["blue".into(), "green".into(), "nir".into()],
        dtype: Dtype::U8,
        geotransform: c.transform().to_array(),
        crs_id: c.crs_id(),
        nodata: None,
        variant: Some(c.variant),
        date_id: Some(c.date_id.clone()),
    }
}

/// Writes a byte composite as `<stem>.png` plus the `.rasterjson` sidecar.
pub fn write_composite_png(path: &Path, c: &ByteComposite) -> Result<()> {
    write_header(path, &composite_header(c))?;
    let png = with_ext(path, "png");
    write_rgb_png(&png, c.width(), c.height(), &c.interleaved())
}

/// Writes a byte composite as a band-sequential u8 `.rasterbin`.
pub fn write_composite_bin(path: &Path, c: &ByteComposite) -> Result<()> {
    write_header(path, &composite_header(c))?;
    let bin = with_ext(path, "rasterbin");
    let bytes: Vec<u8> = c.channels().iter().flatten().copied().collect();
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))
}

/// Reads a byte composite from its sidecar, preferring a `.png` payload.
pub fn read_composite(path: &Path) -> Result<ByteComposite> {
    let header = read_header(path)?;
    if header.dtype != Dtype::U8 || header.bands.len() != 3 {
        return Err(Error::RasterMismatch(format!(
            "{} is not a 3-band u8 composite",
            path.display()
        )));
    }
    let t = GeoTransform::from_array(header.geotransform)?;
    let variant = header.variant.unwrap_or(Variant::Original);
    let date = header.date_id.clone().unwrap_or_default();
    let png = with_ext(path, "png");
    if png.exists() {
        let (w, h, rgb) = read_rgb_png(&png)?;
        if (w, h) != (header.width, header.height) {
            return Err(Error::RasterMismatch(format!(
                "{} is {w}x{h}, sidecar says {}x{}",
                png.display(),
                header.width,
                header.height
            )));
        }
        return ByteComposite::from_interleaved(w, h, &rgb, t, header.crs_id, variant, date);
    }
    let bin = with_ext(path, "rasterbin");
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let n = header.width * header.height;
    if bytes.len() != 3 * n {
        return Err(Error::RasterMismatch(format!("{} has wrong length", bin.display())));
    }
    let channels = [bytes[..n].to_vec(), bytes[n..2 * n].to_vec(), bytes[2 * n..].to_vec()];
    ByteComposite::new(header.width, header.height, channels, t, header.crs_id, variant, date)
}

/// 8-bit RGB PNG with fast compression; tiles are written in bulk.
pub fn write_rgb_png(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    use image::codecs::png::{CompressionType, FilterType, PngEncoder};
    use image::ImageEncoder;

    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let encoder = PngEncoder::new_with_quality(std::io::BufWriter::new(file), CompressionType::Fast, FilterType::Sub);
    encoder
        .write_image(rgb, width as u32, height as u32, image::ExtendedColorType::Rgb8)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })
}

pub fn read_rgb_png(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })?;
    let rgb = img.to_rgb8();
    Ok((rgb.width() as usize, rgb.height() as usize, rgb.into_raw()))
}
