use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dispatch::{dispatch, AdapterCommand, DispatchOptions, TileOutcome, TileFailure};
use super::job::{DoneEntry, DoneFile, Manifest, SegmentJob, TileRecord, TileStatus, DONE_FILE, MASKS_DIR};
use super::mask::{check_dense, write_mask, MaskResult};
use crate::error::{Error, Result};
use crate::synth::{DegradationSpec, MockSegmenter, SegmentConfig};
use crate::vector::geojson::read_layer;
use crate::vector::Checkpoint;

/// Anything that turns a prepared job into per-tile masks.
pub trait Segmenter: Send + Sync {
    fn run(&self, job: &SegmentJob) -> Result<Vec<TileOutcome>>;
}

/// A subprocess speaking the file protocol.
#[derive(Debug, Clone)]
pub struct ExternalAdapter {
    pub command: AdapterCommand,
    pub options: DispatchOptions,
}

impl Segmenter for ExternalAdapter {
    fn run(&self, job: &SegmentJob) -> Result<Vec<TileOutcome>> {
        dispatch(job, &self.command, &self.options)
    }
}

/// The mock segmenter called in-process; no files are read or written.
#[derive(Debug, Clone)]
pub struct MockAdapter {
    segmenter: Arc<MockSegmenter>,
}

impl MockAdapter {
    pub fn new(segmenter: MockSegmenter) -> Self {
        Self {
            segmenter: Arc::new(segmenter),
        }
    }
}

fn mock_tile(segmenter: &MockSegmenter, manifest: &Manifest, checkpoint: Checkpoint, t: &TileRecord) -> Result<MaskResult> {
    let config = SegmentConfig::new(
        checkpoint,
        manifest.tile_size.unwrap_or(t.width),
        manifest.date_id.clone().unwrap_or_default(),
        manifest.variant,
    );
    if t.width != t.height {
        return Err(Error::Protocol(format!("tile {} is not square", t.tile_id)));
    }
    let labels = segmenter.segment_region(&t.transform()?, t.width, t.valid_extent(), &config);
    let n_masks = check_dense(&labels).map_err(|e| Error::Protocol(e.to_string()))?;
    Ok(MaskResult {
        tile_id: t.tile_id.clone(),
        width: t.width,
        height: t.height,
        labels,
        n_masks,
    })
}

impl Segmenter for MockAdapter {
    fn run(&self, job: &SegmentJob) -> Result<Vec<TileOutcome>> {
        let m = &job.manifest;
        Ok(m.tiles
            .iter()
            .map(|t| {
                mock_tile(&self.segmenter, m, m.checkpoint, t).map_err(|e| TileFailure {
                    tile_id: t.tile_id.clone(),
                    errors: vec![e.to_string()],
                })
            })
            .collect())
    }
}

/// Configuration of the file-backed mock adapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockAdapterConfig {
    /// Ground-truth GeoJSON layer.
    pub gt: PathBuf,
    #[serde(default)]
    pub degradation: DegradationSpec,
}

impl MockAdapterConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn segmenter(&self) -> Result<MockSegmenter> {
        MockSegmenter::new(read_layer(&self.gt)?, self.degradation.clone())
    }
}

/// Persists outcomes the way an adapter would: `masks/<tile_id>.png` for
/// each success and a `done.json` listing every tile.
pub fn write_results(out_dir: &Path, job_id: &str, outcomes: &[TileOutcome]) -> Result<()> {
    let mut results = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        results.push(match outcome {
            Ok(r) => {
                let rel = format!("{MASKS_DIR}/{}.png", r.tile_id);
                write_mask(&out_dir.join(&rel), r.width, r.height, &r.labels)?;
                DoneEntry {
                    tile_id: r.tile_id.clone(),
                    mask: Some(rel),
                    n_masks: Some(r.n_masks),
                    status: TileStatus::Ok,
                    message: None,
                }
            }
            Err(f) => DoneEntry {
                tile_id: f.tile_id.clone(),
                mask: None,
                n_masks: None,
                status: TileStatus::Error,
                message: Some(f.errors.join("; ")),
            },
        });
    }
    DoneFile {
        job_id: job_id.to_string(),
        results,
    }
    .write(&out_dir.join(DONE_FILE))
}

/// Adapter side of the protocol for the mock segmenter, as run by an
/// external process: reads the manifest, writes masks and `done.json`.
pub fn run_mock_adapter(manifest_path: &Path, out_dir: &Path, checkpoint: &str, segmenter: &MockSegmenter) -> Result<()> {
    let manifest = Manifest::read(manifest_path)?;
    let checkpoint: Checkpoint = checkpoint.parse()?;
    let outcomes: Vec<TileOutcome> = manifest
        .tiles
        .iter()
        .map(|t| {
            mock_tile(segmenter, &manifest, checkpoint, t).map_err(|e| TileFailure {
                tile_id: t.tile_id.clone(),
                errors: vec![e.to_string()],
            })
        })
        .collect();
    write_results(out_dir, &manifest.job_id, &outcomes)
}
