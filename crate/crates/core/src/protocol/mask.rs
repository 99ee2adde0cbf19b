use std::fs;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::error::{Error, Result};

/// A validated label raster for one tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskResult {
    pub tile_id: String,
    pub width: usize,
    pub height: usize,
    /// Row-major; 0 is background, instances are exactly `1..=n_masks`.
    pub labels: Vec<u32>,
    pub n_masks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaskError {
    #[error("unreadable mask: {0}")]
    Unreadable(String),
    #[error("bit depth: expected 16-bit single channel, found {0}")]
    BitDepth(String),
    #[error("dimensions: expected {expected:?}, found {found:?}")]
    Dimensions {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("labels not dense: max label {max}, missing {missing:?}")]
    NotDense { max: u32, missing: Vec<u32> },
    #[error("mask count: done.json says {reported}, mask has {found}")]
    CountMismatch { reported: usize, found: usize },
}

/// Labels must be exactly `{1..N}` for some `N ≥ 0`; an all-background mask has `N = 0`.
pub fn check_dense(labels: &[u32]) -> std::result::Result<usize, MaskError> {
    let max = labels.iter().copied().max().unwrap_or(0);
    let mut present = vec![false; max as usize + 1];
    for &l in labels {
        present[l as usize] = true;
    }
    let missing: Vec<u32> = (1..=max).filter(|&l| !present[l as usize]).take(16).collect();
    if missing.is_empty() {
        Ok(max as usize)
    } else {
        Err(MaskError::NotDense { max, missing })
    }
}

/// Checks a 16-bit PNG mask against the tile's dimensions and the label rules.
/// All problems found are reported together.
pub fn validate_mask(path: &Path, tile_id: &str, expected: (usize, usize)) -> std::result::Result<MaskResult, Vec<MaskError>> {
    let img = image::open(path).map_err(|e| vec![MaskError::Unreadable(format!("{}: {e}", path.display()))])?;
    let found = (img.width() as usize, img.height() as usize);
    let mut errors = Vec::new();
    if found != expected {
        errors.push(MaskError::Dimensions { expected, found });
    }
    let labels: Vec<u32> = match img {
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(u32::from).collect(),
        other => {
            errors.push(MaskError::BitDepth(format!("{:?}", other.color())));
            return Err(errors);
        }
    };
    let n_masks = match check_dense(&labels) {
        Ok(n) => n,
        Err(e) => {
            errors.push(e);
            0
        }
    };
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(MaskResult {
        tile_id: tile_id.to_string(),
        width: found.0,
        height: found.1,
        labels,
        n_masks,
    })
}

/// Writes a single-channel 16-bit PNG; labels above 65535 are an error.
pub fn write_mask(path: &Path, width: usize, height: usize, labels: &[u32]) -> Result<()> {
    if labels.len() != width * height {
        return Err(Error::InvalidParameter(format!(
            "mask has {} labels for {width}x{height}",
            labels.len()
        )));
    }
    let data = labels
        .iter()
        .map(|&l| u16::try_from(l).map_err(|_| Error::InvalidParameter(format!("label {l} exceeds 16 bits"))))
        .collect::<Result<Vec<u16>>>()?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_ne_bytes()).collect();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    PngEncoder::new_with_quality(std::io::BufWriter::new(file), CompressionType::Fast, FilterType::Sub)
        .write_image(&bytes, width as u32, height as u32, ExtendedColorType::L16)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_background_is_valid_with_zero_masks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        write_mask(&p, 8, 4, &[0; 32]).unwrap();
        let r = validate_mask(&p, "t", (8, 4)).unwrap();
        assert_eq!((r.n_masks, r.width, r.height), (0, 8, 4));
    }

    #[test]
    fn wrong_dimensions_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        write_mask(&p, 8, 4, &[0; 32]).unwrap();
        let errs = validate_mask(&p, "t", (4, 8)).unwrap_err();
        assert!(matches!(errs[0], MaskError::Dimensions { .. }));
    }

    #[test]
    fn skipped_label_is_not_dense() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        write_mask(&p, 3, 1, &[1, 0, 3]).unwrap();
        let errs = validate_mask(&p, "t", (3, 1)).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].to_string().contains("labels not dense"), "{}", errs[0]);
    }

    #[test]
    fn many_dense_labels_survive_16_bits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let labels: Vec<u32> = (0..400u32).map(|i| if i < 300 { i + 1 } else { 0 }).collect();
        write_mask(&p, 20, 20, &labels).unwrap();
        let r = validate_mask(&p, "t", (20, 20)).unwrap();
        assert_eq!(r.n_masks, 300);
        assert_eq!(r.labels, labels);
    }

    #[test]
    fn eight_bit_masks_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        image::GrayImage::from_raw(2, 2, vec![0, 1, 1, 2]).unwrap().save(&p).unwrap();
        let errs = validate_mask(&p, "t", (2, 2)).unwrap_err();
        assert!(matches!(errs[0], MaskError::BitDepth(_)));
    }

    #[test]
    fn labels_beyond_16_bits_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_mask(&dir.path().join("m.png"), 1, 1, &[70_000]).is_err());
    }
}
