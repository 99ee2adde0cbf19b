use std::path::{Path, PathBuf};

use crate::raster::Variant;
use crate::synth::SegmentConfig;
use crate::vector::{LayerKey, Level};

/// Where every artifact of a run lives. Per-configuration artifacts sit
/// under `<out>/<date>/<variant>/<size>/<checkpoint>/`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_log(&self) -> PathBuf {
        self.root.join("run.log")
    }

    pub fn resolved_config(&self) -> PathBuf {
        self.root.join("run_config.json")
    }

    pub fn scene_dir(&self) -> PathBuf {
        self.root.join("scene")
    }

    pub fn synthetic_gt(&self) -> PathBuf {
        self.scene_dir().join("gt.geojson")
    }

    pub fn scene_ms(&self, date: &str) -> PathBuf {
        self.scene_dir().join(date).join("ms.rasterjson")
    }

    pub fn scene_pan(&self, date: &str) -> PathBuf {
        self.scene_dir().join(date).join("pan.rasterjson")
    }

    pub fn variant_dir(&self, date: &str, variant: Variant) -> PathBuf {
        self.root.join(date).join(variant.as_str())
    }

    pub fn composite(&self, date: &str, variant: Variant) -> PathBuf {
        self.variant_dir(date, variant).join("composite.rasterjson")
    }

    pub fn preprocess_report(&self, date: &str) -> PathBuf {
        self.variant_dir(date, Variant::Original).join("preprocess.json")
    }

    pub fn size_dir(&self, date: &str, variant: Variant, size: usize) -> PathBuf {
        self.variant_dir(date, variant).join(size.to_string())
    }

    pub fn tiles_dir(&self, date: &str, variant: Variant, size: usize) -> PathBuf {
        self.size_dir(date, variant, size).join("tiles")
    }

    pub fn grid(&self, date: &str, variant: Variant, size: usize) -> PathBuf {
        self.size_dir(date, variant, size).join("grid.json")
    }

    pub fn cell_dir(&self, c: &SegmentConfig) -> PathBuf {
        self.size_dir(&c.date_id, c.variant, c.tile_size).join(c.checkpoint.as_str())
    }

    pub fn job_dir(&self, c: &SegmentConfig) -> PathBuf {
        self.cell_dir(c).join("job")
    }

    pub fn fragments(&self, c: &SegmentConfig) -> PathBuf {
        self.cell_dir(c).join("fragments.geojson")
    }

    pub fn layer(&self, c: &SegmentConfig) -> PathBuf {
        self.cell_dir(c).join("layer.geojson")
    }

    /// Pooled layers: `fused/level2/<date>/<variant>/<size>.geojson`,
    /// `fused/level3/<date>/<variant>.geojson`, `fused/level4/<variant>.geojson`
    /// and `fused/combined.geojson`.
    pub fn fused(&self, key: &LayerKey) -> Option<PathBuf> {
        let fused = self.root.join("fused");
        let date = key.date_id.as_deref().unwrap_or("all");
        let variant = key.variant.map_or("all", |v| v.as_str());
        Some(match key.level {
            Level::Checkpoints => fused
                .join("level2")
                .join(date)
                .join(variant)
                .join(format!("{}.geojson", key.tile_size?)),
            Level::Sizes => fused.join("level3").join(date).join(format!("{variant}.geojson")),
            Level::Dates => fused.join("level4").join(format!("{variant}.geojson")),
            Level::Combined => fused.join("combined.geojson"),
            Level::Raw | Level::Reference => return None,
        })
    }

    pub fn evaluation(&self) -> PathBuf {
        self.root.join("evaluation").join("evaluation.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}
