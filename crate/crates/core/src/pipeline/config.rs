use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsParams;
use crate::mosaic::MergeParams;
use crate::protocol::{AdapterCommand, DispatchOptions};
use crate::raster::{CompositeParams, EnhanceParams, TiePoint, Variant, TILE_SIZES};
use crate::synth::{DegradationSpec, FieldscapeSpec};
use crate::vector::{Checkpoint, DEFAULT_MIN_AREA_PX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DateRasters {
    pub date_id: String,
    pub ms: PathBuf,
    pub pan: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneInput {
    Synthetic(FieldscapeSpec),
    Rasters {
        dates: Vec<DateRasters>,
        #[serde(default)]
        ground_truth: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessParams {
    pub composite: CompositeParams,
    pub enhance: EnhanceParams,
    /// Per-date tie points onto the reference frame; dates without an entry are not warped.
    pub georectify: BTreeMap<String, Vec<TiePoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdapterSpec {
    /// The built-in mock, called in-process.
    Mock {
        #[serde(default)]
        degradation: DegradationSpec,
    },
    /// An external program speaking the file protocol.
    Command {
        command: String,
        #[serde(default = "default_timeout_s")]
        timeout_s: f64,
    },
}

fn default_timeout_s() -> f64 {
    3600.0
}

impl Default for AdapterSpec {
    fn default() -> Self {
        AdapterSpec::Mock {
            degradation: DegradationSpec::default(),
        }
    }
}

impl AdapterSpec {
    pub fn command(&self) -> Result<Option<(AdapterCommand, DispatchOptions)>> {
        match self {
            AdapterSpec::Mock { .. } => Ok(None),
            AdapterSpec::Command { command, timeout_s } => {
                if !(*timeout_s > 0.0) {
                    return Err(Error::Config("adapter timeout_s must be > 0".into()));
                }
                let options = DispatchOptions {
                    timeout: Duration::from_secs_f64(*timeout_s),
                    ..Default::default()
                };
                Ok(Some((AdapterCommand::parse(command)?, options)))
            }
        }
    }
}

fn default_seed() -> u64 {
    42
}
fn default_sizes() -> Vec<usize> {
    TILE_SIZES.to_vec()
}
fn default_checkpoints() -> Vec<Checkpoint> {
    Checkpoint::SAM.to_vec()
}
fn default_variants() -> Vec<Variant> {
    vec![Variant::Original, Variant::EdgeEnhanced]
}
fn default_min_area_px() -> f64 {
    DEFAULT_MIN_AREA_PX as f64
}

/// Everything one run needs. `seed` replaces the seeds of the synthetic
/// scene and of the mock degradation so a single number fixes the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub scene: SceneInput,
    #[serde(default)]
    pub preprocess: PreprocessParams,
    #[serde(default = "default_sizes")]
    pub tile_sizes: Vec<usize>,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<Checkpoint>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub adapter: AdapterSpec,
    #[serde(default)]
    pub metrics: MetricsParams,
    #[serde(default)]
    pub merge: MergeParams,
    /// Speckle filter on merged scene polygons, in working-resolution pixels.
    #[serde(default = "default_min_area_px")]
    pub min_area_px: f64,
    /// When set, pooled layers are deduplicated at this IoU.
    #[serde(default)]
    pub dedup_iou: Option<f64>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Synthetic-scene config with every grid dimension at its default.
    pub fn synthetic(output_dir: impl Into<PathBuf>, spec: FieldscapeSpec) -> Self {
        Self {
            output_dir: output_dir.into(),
            seed: spec.seed,
            scene: SceneInput::Synthetic(spec),
            preprocess: PreprocessParams::default(),
            tile_sizes: default_sizes(),
            checkpoints: default_checkpoints(),
            variants: default_variants(),
            adapter: AdapterSpec::default(),
            metrics: MetricsParams::default(),
            merge: MergeParams::default(),
            min_area_px: default_min_area_px(),
            dedup_iou: None,
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        // relative paths inside the file are relative to the file
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let SceneInput::Rasters { dates, ground_truth } = &mut self.scene {
            for d in dates {
                fix(&mut d.ms);
                fix(&mut d.pan);
            }
            if let Some(gt) = ground_truth {
                fix(gt);
            }
        }
    }

    /// Replaces the adapter with an external command, keeping any timeout.
    pub fn override_adapter(&mut self, command: &str) {
        let timeout_s = match &self.adapter {
            AdapterSpec::Command { timeout_s, .. } => *timeout_s,
            AdapterSpec::Mock { .. } => default_timeout_s(),
        };
        self.adapter = AdapterSpec::Command {
            command: command.to_string(),
            timeout_s,
        };
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        fn unique<T: Ord + Clone>(v: &[T]) -> bool {
            v.iter().cloned().collect::<BTreeSet<T>>().len() == v.len()
        }
        if self.tile_sizes.is_empty() || self.checkpoints.is_empty() || self.variants.is_empty() {
            return cfg("need at least one tile size, checkpoint and variant".into());
        }
        if !unique(&self.tile_sizes) || !unique(&self.checkpoints) || !unique(&self.variants) {
            return cfg("tile sizes, checkpoints and variants must not repeat".into());
        }
        if let Some(s) = self.tile_sizes.iter().find(|s| !TILE_SIZES.contains(s)) {
            return cfg(format!("tile size {s} not in {TILE_SIZES:?}"));
        }
        if !(self.min_area_px >= 0.0) {
            return cfg("min_area_px must be >= 0".into());
        }
        if let Some(t) = self.dedup_iou.filter(|t| !(*t > 0.0 && *t <= 1.0)) {
            return cfg(format!("dedup_iou must be in (0, 1], got {t}"));
        }
        if self.workers == Some(0) {
            return cfg("workers must be >= 1".into());
        }
        match &self.scene {
            SceneInput::Synthetic(spec) => spec.validate().map_err(|e| Error::Config(e.to_string()))?,
            SceneInput::Rasters { dates, .. } => {
                if dates.is_empty() {
                    return cfg("need at least one date".into());
                }
                let ids: Vec<&String> = dates.iter().map(|d| &d.date_id).collect();
                if !unique(&ids) {
                    return cfg("date ids must be unique".into());
                }
            }
        }
        if let AdapterSpec::Mock { degradation } = &self.adapter {
            degradation.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        self.adapter.command()?;
        Ok(())
    }

    pub fn date_ids(&self) -> Vec<String> {
        match &self.scene {
            SceneInput::Synthetic(spec) => spec.date_ids(),
            SceneInput::Rasters { dates, .. } => dates.iter().map(|d| d.date_id.clone()).collect(),
        }
    }

    /// The synthetic spec with the run seed applied.
    pub fn fieldscape(&self) -> Option<FieldscapeSpec> {
        match &self.scene {
            SceneInput::Synthetic(spec) => Some(FieldscapeSpec {
                seed: self.seed,
                ..spec.clone()
            }),
            SceneInput::Rasters { .. } => None,
        }
    }

    /// The mock degradation with the run seed applied.
    pub fn degradation(&self) -> Option<DegradationSpec> {
        match &self.adapter {
            AdapterSpec::Mock { degradation } => Some(DegradationSpec {
                seed: self.seed,
                ..degradation.clone()
            }),
            AdapterSpec::Command { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{"output_dir": "out", "scene": {"synthetic": {"extent_m": [100, 100]}}}"#
    }

    #[test]
    fn defaults_fill_the_full_grid() {
        let c = RunConfig::from_json(minimal()).unwrap();
        assert_eq!(c.tile_sizes, vec![256, 512, 768, 1024]);
        assert_eq!(c.checkpoints.len(), 3);
        assert_eq!(c.variants.len(), 2);
        assert_eq!(c.seed, 42);
        assert!(matches!(c.adapter, AdapterSpec::Mock { .. }));
        assert_eq!(c.min_area_px, 25.0);
    }

    #[test]
    fn rejects_empty_or_bad_grids() {
        for bad in [
            r#"{"output_dir": "o", "scene": {"synthetic": {}}, "tile_sizes": []}"#,
            r#"{"output_dir": "o", "scene": {"synthetic": {}}, "tile_sizes": [300]}"#,
            r#"{"output_dir": "o", "scene": {"synthetic": {}}, "checkpoints": ["vit_b", "vit_b"]}"#,
            r#"{"output_dir": "o", "scene": {"rasters": {"dates": []}}}"#,
            r#"{"output_dir": "o", "scene": {"synthetic": {}}, "adapter": {"kind": "command", "command": ""}}"#,
            r#"{"output_dir": "o", "scene": {"synthetic": {}}, "surprise": 1}"#,
        ] {
            let err = RunConfig::from_json(bad).unwrap_err();
            assert!(err.is_config_error(), "{bad}: {err}");
        }
    }

    #[test]
    fn run_seed_reaches_scene_and_mock() {
        let mut c = RunConfig::from_json(minimal()).unwrap();
        c.seed = 7;
        assert_eq!(c.fieldscape().unwrap().seed, 7);
        assert_eq!(c.degradation().unwrap().seed, 7);
    }

    #[test]
    fn adapter_override_keeps_timeout() {
        let mut c = RunConfig::from_json(
            r#"{"output_dir": "o", "scene": {"synthetic": {}}, "adapter": {"kind": "command", "command": "a", "timeout_s": 5}}"#,
        )
        .unwrap();
        c.override_adapter("python3 sam_adapter.py");
        let (cmd, opts) = c.adapter.command().unwrap().unwrap();
        assert_eq!(cmd.program, "python3");
        assert_eq!(opts.timeout, Duration::from_secs(5));
    }
}
