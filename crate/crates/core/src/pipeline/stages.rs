use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AdapterSpec, RunConfig, SceneInput};
use super::layout::Layout;
use super::runlog::RunLog;
use crate::error::{Error, Result};
use crate::metrics::{level_report, write_report, LevelReport};
use crate::mosaic::{combine_layers, dedup, merge_adjacent, MergeStats};
use crate::protocol::{
    collect_results, write_results, DoneFile, ExternalAdapter, Manifest, MockAdapter, SegmentJob, Segmenter,
    TileRecord, DONE_FILE, TILES_DIR,
};
use crate::raster::io::{read_composite, read_raster, write_composite_bin, write_raster, write_rgb_png};
use crate::raster::{build_composite, enhance_edges, fit_affine, make_tiles, CompositeReport, TileGrid, Variant};
use crate::synth::{generate_fieldscape, MockSegmenter, SegmentConfig};
use crate::vector::geojson::{read_layer, write_layer};
use crate::vector::{vectorize_labels, FieldPolygon, LayerKey, Level, PredictionLayer, Provenance, TileRef};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

fn missing(path: &Path, stage: &str) -> Error {
    Error::Config(format!("{} not found; run `{stage}` first", path.display()))
}

/// Outcome counts of the segment stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub jobs: usize,
    pub failed_jobs: usize,
    pub tiles: usize,
    pub failed_tiles: usize,
}

/// Staged workflow over one [`RunConfig`]. Every stage reads its inputs
/// from the output directory, so stages can also run one at a time.
pub struct Pipeline {
    config: RunConfig,
    layout: Layout,
    log: RunLog,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config.output_dir);
        fs::create_dir_all(layout.root())
            .map_err(|e| Error::Config(format!("output dir {} is not writable: {e}", layout.root().display())))?;
        write_json(&layout.resolved_config(), &config)
            .map_err(|e| Error::Config(format!("output dir {} is not writable: {e}", layout.root().display())))?;
        let log = RunLog::open(&layout.run_log())?;
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = config.workers {
            pool = pool.num_threads(n);
        }
        let pool = pool
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            config,
            layout,
            log,
            pool,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Every (checkpoint, size, date, variant) cell, ordered by date, variant, size, checkpoint.
    pub fn cells(&self) -> Vec<SegmentConfig> {
        let mut cells = Vec::new();
        for date in self.config.date_ids() {
            for &variant in &self.config.variants {
                for &size in &self.config.tile_sizes {
                    for &ck in &self.config.checkpoints {
                        cells.push(SegmentConfig::new(ck, size, date.clone(), variant));
                    }
                }
            }
        }
        cells
    }

    pub fn gt_path(&self) -> Result<PathBuf> {
        match &self.config.scene {
            SceneInput::Synthetic(_) => Ok(self.layout.synthetic_gt()),
            SceneInput::Rasters { ground_truth, .. } => ground_truth
                .clone()
                .ok_or_else(|| Error::Config("no ground truth configured".into())),
        }
    }

    fn read_gt(&self) -> Result<PredictionLayer> {
        let path = self.gt_path()?;
        if !path.is_file() {
            return Err(Error::Config(format!("ground truth {} missing", path.display())));
        }
        read_layer(&path)
    }

    fn read_grid(&self, date: &str, variant: Variant, size: usize) -> Result<TileGrid> {
        let path = self.layout.grid(date, variant, size);
        if !path.is_file() {
            return Err(missing(&path, "tile"));
        }
        read_json(&path)
    }

    /// Writes the ground truth and per-date raw rasters of the synthetic scene.
    pub fn synth(&self) -> Result<usize> {
        let spec = self
            .config
            .fieldscape()
            .ok_or_else(|| Error::Config("`synth` needs a synthetic scene".into()))?;
        let scene = self.pool.install(|| generate_fieldscape(&spec))?;
        write_layer(&self.layout.synthetic_gt(), &scene.truth.gt)?;
        write_json(&self.layout.scene_dir().join("fieldscape.json"), &spec)?;
        for d in &scene.dates {
            write_raster(&self.layout.scene_ms(&d.date_id), &d.ms)?;
            write_raster(&self.layout.scene_pan(&d.date_id), &d.pan)?;
        }
        self.log.info(format!(
            "synth: {} fields, {}x{} px, {} dates",
            scene.truth.gt.len(),
            scene.truth.width,
            scene.truth.height,
            scene.dates.len()
        ));
        Ok(scene.truth.gt.len())
    }

    fn date_inputs(&self, date: &str) -> Result<(PathBuf, PathBuf)> {
        match &self.config.scene {
            SceneInput::Synthetic(_) => {
                let (ms, pan) = (self.layout.scene_ms(date), self.layout.scene_pan(date));
                if !ms.is_file() || !pan.is_file() {
                    return Err(missing(&ms, "synth"));
                }
                Ok((ms, pan))
            }
            SceneInput::Rasters { dates, .. } => {
                let d = dates.iter().find(|d| d.date_id == date).expect("date from config");
                Ok((d.ms.clone(), d.pan.clone()))
            }
        }
    }

    /// Pansharpen, optional tie-point warp, byte stretch and, when
    /// requested, edge enhancement: one composite per date and variant.
    pub fn preprocess(&self) -> Result<()> {
        let pre = &self.config.preprocess;
        let reports: Vec<(String, CompositeReport)> = self.pool.install(|| {
            self.config
                .date_ids()
                .par_iter()
                .map(|date| {
                    let (ms_path, pan_path) = self.date_inputs(date)?;
                    let (ms, pan) = (read_raster(&ms_path)?, read_raster(&pan_path)?);
                    let warp = match pre.georectify.get(date) {
                        Some(ties) => Some(fit_affine(ties)?.transform),
                        None => None,
                    };
                    let (original, report) = build_composite(&ms, &pan, warp.as_ref(), &pre.composite, date)?;
                    for &variant in &self.config.variants {
                        let image = match variant {
                            Variant::Original => original.clone(),
                            Variant::EdgeEnhanced => enhance_edges(&original, &pre.enhance)?,
                        };
                        write_composite_bin(&self.layout.composite(date, variant), &image)?;
                    }
                    write_json(&self.layout.preprocess_report(date), &report)?;
                    Ok((date.clone(), report))
                })
                .collect::<Result<_>>()
        })?;
        for (date, r) in reports {
            self.log.info(format!(
                "preprocess {date}: {} flagged px, pan identity error {:.3e}, degenerate {:?}",
                r.flagged_pixels, r.pan_identity_error, r.degenerate_bands
            ));
        }
        Ok(())
    }

    /// Cuts every composite at every tile size and writes the tile PNGs and grid.
    pub fn tile(&self) -> Result<()> {
        let mut work = Vec::new();
        for date in self.config.date_ids() {
            for &variant in &self.config.variants {
                for &size in &self.config.tile_sizes {
                    work.push((date.clone(), variant, size));
                }
            }
        }
        self.pool.install(|| {
            work.par_iter().try_for_each(|(date, variant, size)| {
                let path = self.layout.composite(date, *variant);
                if !path.is_file() {
                    return Err(missing(&path, "preprocess"));
                }
                let image = read_composite(&path)?;
                let (grid, tiles) = make_tiles(&image, *size)?;
                let dir = self.layout.tiles_dir(date, *variant, *size);
                tiles.par_iter().try_for_each(|t| {
                    write_rgb_png(&dir.join(format!("{}.png", t.id())), t.size(), t.size(), &t.interleaved())
                })?;
                write_json(&self.layout.grid(date, *variant, *size), &grid)
            })
        })?;
        self.log.info(format!("tile: {} tile sets", work.len()));
        Ok(())
    }

    fn segmenter(&self) -> Result<(Arc<dyn Segmenter>, bool)> {
        match &self.config.adapter {
            AdapterSpec::Mock { .. } => {
                let deg = self.config.degradation().expect("mock adapter");
                let seg = MockSegmenter::new(self.read_gt()?, deg)?;
                Ok((Arc::new(MockAdapter::new(seg)), true))
            }
            AdapterSpec::Command { .. } => {
                let (command, options) = self.config.adapter.command()?.expect("command adapter");
                Ok((Arc::new(ExternalAdapter { command, options }), false))
            }
        }
    }

    fn job_manifest(&self, cell: &SegmentConfig, grid: &TileGrid) -> Manifest {
        let tiles = (0..grid.len())
            .map(|i| {
                let w = grid.window(i);
                TileRecord {
                    tile_id: w.id(),
                    image: format!("{TILES_DIR}/{}.png", w.id()),
                    width: w.size,
                    height: w.size,
                    geotransform: grid.tile_transform(i).to_array(),
                    valid: w.is_padded().then_some([w.valid_width, w.valid_height]),
                }
            })
            .collect();
        Manifest {
            job_id: format!("{}-{}-{}-{}", cell.date_id, cell.variant, cell.tile_size, cell.checkpoint),
            checkpoint: cell.checkpoint,
            variant: cell.variant,
            date_id: Some(cell.date_id.clone()),
            tile_size: Some(cell.tile_size),
            tiles,
        }
    }

    /// One segmenter job per cell. A failed job or tile is logged and the
    /// run continues; the stage fails only when every job failed.
    pub fn segment(&self) -> Result<SegmentSummary> {
        let (segmenter, in_process) = self.segmenter()?;
        let cells = self.cells();
        let results: Vec<Result<(usize, usize)>> = self.pool.install(|| {
            cells
                .par_iter()
                .map(|cell| {
                    let grid = self.read_grid(&cell.date_id, cell.variant, cell.tile_size)?;
                    let manifest = self.job_manifest(cell, &grid);
                    let source = self.layout.size_dir(&cell.date_id, cell.variant, cell.tile_size);
                    let job = SegmentJob::link(&self.layout.job_dir(cell), manifest, &source)?;
                    let outcomes = segmenter.run(&job).inspect_err(|e| {
                        self.log.warn(format!("segment {}: job failed: {e}", cell.layer_key()));
                    })?;
                    if in_process {
                        write_results(&job.dir, &job.manifest.job_id, &outcomes)?;
                    }
                    let failed = outcomes.iter().filter(|o| o.is_err()).count();
                    for f in outcomes.iter().filter_map(|o| o.as_ref().err()) {
                        self.log.warn(format!("segment {} tile {}: {}", cell.layer_key(), f.tile_id, f.errors.join("; ")));
                    }
                    Ok((outcomes.len(), failed))
                })
                .collect()
        });
        let mut summary = SegmentSummary::default();
        let mut first_error = None;
        for r in results {
            summary.jobs += 1;
            match r {
                Ok((tiles, failed)) => {
                    summary.tiles += tiles;
                    summary.failed_tiles += failed;
                }
                Err(e) => {
                    summary.failed_jobs += 1;
                    first_error.get_or_insert(e);
                }
            }
        }
        self.log.info(format!("segment: {summary:?}"));
        match first_error {
            Some(e) if summary.failed_jobs == summary.jobs => Err(e),
            _ => Ok(summary),
        }
    }

    /// Tile masks to georeferenced fragments, one GeoJSON per cell. Cells
    /// without results yield an empty layer.
    pub fn vectorize(&self) -> Result<()> {
        self.pool.install(|| {
            self.cells().par_iter().try_for_each(|cell| {
                let key = cell.layer_key();
                let job_dir = self.layout.job_dir(cell);
                let mut fragments = Vec::new();
                if job_dir.join(DONE_FILE).is_file() {
                    let job = SegmentJob::open(&job_dir)?;
                    let grid = self.read_grid(&cell.date_id, cell.variant, cell.tile_size)?;
                    let index: BTreeMap<String, usize> = (0..grid.len()).map(|i| (grid.window(i).id(), i)).collect();
                    let outcomes = collect_results(&job, &DoneFile::read(&job_dir.join(DONE_FILE))?)?;
                    for outcome in outcomes {
                        let mask = match outcome {
                            Ok(m) => m,
                            Err(f) => {
                                self.log.warn(format!("vectorize {key} tile {}: {}", f.tile_id, f.errors.join("; ")));
                                continue;
                            }
                        };
                        let i = *index
                            .get(&mask.tile_id)
                            .ok_or_else(|| Error::Protocol(format!("unknown tile {}", mask.tile_id)))?;
                        let prov = Provenance {
                            checkpoint: Some(cell.checkpoint),
                            tile_size: Some(cell.tile_size),
                            date_id: Some(cell.date_id.clone()),
                            variant: Some(cell.variant),
                            tile: Some(TileRef::Index(i)),
                        };
                        let polys = vectorize_labels(
                            &mask.labels,
                            mask.width,
                            mask.height,
                            &grid.tile_transform(i),
                            0.0,
                            &prov,
                            &format!("{}_", mask.tile_id),
                        )?;
                        fragments.extend(polys.into_iter().map(|l| l.polygon));
                    }
                } else {
                    self.log.warn(format!("vectorize {key}: no segmenter results"));
                }
                write_layer(&self.layout.fragments(cell), &PredictionLayer::new(key, fragments)?)
            })
        })
    }

    /// Reassembles fragments across tile borders, then drops speckle below
    /// `min_area_px`.
    pub fn merge_tiles(&self) -> Result<()> {
        let stats: Vec<(LayerKey, MergeStats, usize)> = self.pool.install(|| {
            self.cells()
                .par_iter()
                .map(|cell| {
                    let path = self.layout.fragments(cell);
                    if !path.is_file() {
                        return Err(missing(&path, "vectorize"));
                    }
                    let fragments = read_layer(&path)?;
                    let grid = self.read_grid(&cell.date_id, cell.variant, cell.tile_size)?;
                    let mut tiles: Vec<Vec<FieldPolygon>> = vec![Vec::new(); grid.len()];
                    for p in fragments.into_polygons() {
                        match p.provenance.tile {
                            Some(TileRef::Index(i)) if i < tiles.len() => tiles[i].push(p),
                            _ => return Err(Error::Geometry(format!("fragment {} has no tile index", p.id))),
                        }
                    }
                    let (merged, stats) = merge_adjacent(&tiles, &grid, cell.layer_key(), &self.config.merge)?;
                    let min_area = self.config.min_area_px * grid.transform.pixel_size.powi(2);
                    let before = merged.len();
                    let kept: Vec<FieldPolygon> = merged.into_polygons().into_iter().filter(|p| p.area() >= min_area).collect();
                    let layer = PredictionLayer::new(cell.layer_key(), kept)?;
                    let speckle = before - layer.len();
                    write_layer(&self.layout.layer(cell), &layer)?;
                    Ok((cell.layer_key(), stats, speckle))
                })
                .collect::<Result<_>>()
        })?;
        for (key, s, speckle) in stats {
            self.log.info(format!(
                "merge-tiles {key}: {} merges in {} passes, {} clipped, {} dropped, {speckle} below min area",
                s.merges, s.passes, s.clipped, s.dropped
            ));
        }
        Ok(())
    }

    fn raw_layers(&self) -> Result<Vec<PredictionLayer>> {
        self.pool.install(|| {
            self.cells()
                .par_iter()
                .map(|cell| {
                    let path = self.layout.layer(cell);
                    if !path.is_file() {
                        return Err(missing(&path, "merge-tiles"));
                    }
                    read_layer(&path)
                })
                .collect()
        })
    }

    /// Pools level by level: checkpoints, tile sizes, dates, then variants.
    /// Returns the pooled layers of every level in key order.
    pub fn fuse(&self) -> Result<Vec<PredictionLayer>> {
        let mut current = self.raw_layers()?;
        let mut all = Vec::new();
        while current.first().is_some_and(|l| l.key.level.next().is_some()) {
            let mut groups: BTreeMap<LayerKey, Vec<PredictionLayer>> = BTreeMap::new();
            for layer in current {
                let key = layer.key.pooled().expect("level has a successor");
                groups.entry(key).or_default().push(layer);
            }
            current = self.pool.install(|| {
                groups
                    .into_par_iter()
                    .map(|(key, inputs)| {
                        let mut pooled = combine_layers(&inputs, key.clone());
                        if let Some(t) = self.config.dedup_iou {
                            pooled = dedup(&pooled, t);
                        }
                        let path = self.layout.fused(&key).expect("pooled level");
                        write_layer(&path, &pooled)?;
                        Ok(pooled)
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            self.log.info(format!(
                "fuse: {} layers at level {}",
                current.len(),
                current.first().map_or("-".into(), |l| l.key.level.to_string())
            ));
            all.extend(current.iter().cloned());
        }
        Ok(all)
    }

    fn fused_layers(&self) -> Result<Vec<PredictionLayer>> {
        let mut keys: Vec<LayerKey> = self.cells().iter().map(SegmentConfig::layer_key).collect();
        let mut out = Vec::new();
        while keys.first().is_some_and(|k| k.level.next().is_some()) {
            keys = keys.iter().filter_map(LayerKey::pooled).collect();
            keys.sort();
            keys.dedup();
            for k in &keys {
                let path = self.layout.fused(k).expect("pooled level");
                if !path.is_file() {
                    return Err(missing(&path, "fuse"));
                }
                out.push(path);
            }
        }
        self.pool.install(|| out.par_iter().map(|p| read_layer(p)).collect())
    }

    /// Scores every raw and pooled layer against ground truth.
    pub fn evaluate(&self) -> Result<LevelReport> {
        let gt = self.read_gt()?;
        let mut layers = self.raw_layers()?;
        layers.extend(self.fused_layers()?);
        let report = self.pool.install(|| level_report(&layers, Some(&gt), &self.config.metrics))?;
        write_json(&self.layout.evaluation(), &report)?;
        for r in report.reports.iter().filter(|r| r.key.level != Level::Raw) {
            self.log.info(format!(
                "evaluate {}: detection {:.2}%, mean IoU {}",
                r.key,
                r.detection_pct,
                r.mean_iou.map_or("NA".into(), |v| format!("{v:.4}"))
            ));
        }
        Ok(report)
    }

    /// Renders CSV, JSON and SVG reports from the evaluation.
    pub fn report(&self) -> Result<LevelReport> {
        let path = self.layout.evaluation();
        if !path.is_file() {
            return Err(missing(&path, "evaluate"));
        }
        let report: LevelReport = read_json(&path)?;
        write_report(&self.layout.report_dir(), &report)?;
        self.log.info(format!("report: {}", self.layout.report_dir().display()));
        Ok(report)
    }

    pub fn run_all(&self) -> Result<LevelReport> {
        if matches!(self.config.scene, SceneInput::Synthetic(_)) {
            self.synth()?;
        }
        self.preprocess()?;
        self.tile()?;
        self.segment()?;
        self.vectorize()?;
        self.merge_tiles()?;
        self.fuse()?;
        self.evaluate()?;
        self.report()
    }
}
