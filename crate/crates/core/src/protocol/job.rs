use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::io::write_rgb_png;
use crate::raster::{GeoTransform, Tile, Variant};
use crate::vector::Checkpoint;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DONE_FILE: &str = "done.json";
pub const TILES_DIR: &str = "tiles";
pub const MASKS_DIR: &str = "masks";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileRecord {
    pub tile_id: String,
    /// Relative to the job directory.
    pub image: String,
    pub width: usize,
    pub height: usize,
    pub geotransform: [f64; 3],
    /// In-scene extent of a padded tile; absent means the whole tile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<[usize; 2]>,
}

impl TileRecord {
    pub fn transform(&self) -> Result<GeoTransform> {
        GeoTransform::from_array(self.geotransform)
    }

    pub fn valid_extent(&self) -> (usize, usize) {
        self.valid.map_or((self.width, self.height), |[w, h]| (w, h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub job_id: String,
    pub checkpoint: Checkpoint,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile_size: Option<usize>,
    pub tiles: Vec<TileRecord>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Unique tile ids and, relative to `dir`, existing image files.
    pub fn validate(&self, dir: &Path) -> Result<()> {
        self.validate_ids()?;
        for t in &self.tiles {
            if !dir.join(&t.image).is_file() {
                return Err(Error::Protocol(format!("tile image {} missing", dir.join(&t.image).display())));
            }
        }
        Ok(())
    }

    fn validate_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        match self.tiles.iter().find(|t| !seen.insert(t.tile_id.as_str())) {
            Some(t) => Err(Error::Protocol(format!("duplicate tile_id '{}'", t.tile_id))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TileStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoneEntry {
    pub tile_id: String,
    #[serde(default)]
    pub mask: Option<String>,
    #[serde(default)]
    pub n_masks: Option<usize>,
    pub status: TileStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoneFile {
    pub job_id: String,
    pub results: Vec<DoneEntry>,
}

impl DoneFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    /// Written to a temporary name and renamed, so readers never see a partial file.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        write_json(&tmp, self)?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// A job directory holding `manifest.json` and the tile images it names.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentJob {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl SegmentJob {
    /// Writes tile PNGs and the manifest under `dir`.
    pub fn prepare(dir: &Path, job_id: &str, checkpoint: Checkpoint, tiles: &[Tile]) -> Result<Self> {
        let first = tiles
            .first()
            .ok_or_else(|| Error::InvalidParameter("a job needs at least one tile".into()))?;
        if tiles.iter().any(|t| t.variant != first.variant || t.date_id != first.date_id || t.size() != first.size()) {
            return Err(Error::InvalidParameter("tiles of one job must share date, variant and size".into()));
        }
        let mut records = Vec::with_capacity(tiles.len());
        for t in tiles {
            let image = format!("{TILES_DIR}/{}.png", t.id());
            write_rgb_png(&dir.join(&image), t.size(), t.size(), &t.interleaved())?;
            records.push(TileRecord {
                tile_id: t.id(),
                image,
                width: t.size(),
                height: t.size(),
                geotransform: t.transform.to_array(),
                valid: t.window.is_padded().then_some([t.window.valid_width, t.window.valid_height]),
            });
        }
        let manifest = Manifest {
            job_id: job_id.to_string(),
            checkpoint,
            variant: first.variant,
            date_id: Some(first.date_id.clone()),
            tile_size: Some(first.size()),
            tiles: records,
        };
        manifest.validate_ids()?;
        manifest.write(&dir.join(MANIFEST_FILE))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    /// Creates a job whose images already exist under `source`: each
    /// record's `image` path is resolved against `source` and hard-linked
    /// (or copied) into `dir`.
    pub fn link(dir: &Path, manifest: Manifest, source: &Path) -> Result<Self> {
        manifest.validate_ids()?;
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        for t in &manifest.tiles {
            let (from, to) = (source.join(&t.image), dir.join(&t.image));
            if let Some(parent) = to.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            if fs::hard_link(&from, &to).is_err() {
                fs::copy(&from, &to).map_err(|e| Error::io(&from, e))?;
            }
        }
        manifest.write(&dir.join(MANIFEST_FILE))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = Manifest::read(&dir.join(MANIFEST_FILE))?;
        manifest.validate(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(MANIFEST_FILE)
    }
}
