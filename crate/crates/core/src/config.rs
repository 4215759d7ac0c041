//! Shared pipeline configuration. Every field has a default, so an empty
//! document is a valid configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::{SynthParams, DEFAULT_RATIOS};
use crate::error::{Error, Result};
use crate::eval::PostprocessConfig;
use crate::schedules::{LrFinderConfig, OneCycleConfig, PlanOverrides};
use crate::tiler::{EdgePolicy, DEFAULT_TILE_HEIGHT, DEFAULT_TILE_WIDTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub dataset: PathBuf,
    pub predictions: PathBuf,
    pub reports: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            dataset: "data".into(),
            predictions: "predictions".into(),
            reports: "reports".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TileConfig {
    pub width: usize,
    pub height: usize,
    pub edge: EdgePolicy,
}

impl Default for TileConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_TILE_WIDTH,
            height: DEFAULT_TILE_HEIGHT,
            edge: EdgePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub seed: u64,
    pub ratios: [f64; 3],
}

impl Default for SplitConfig {
    fn default() -> Self {
        let (a, b, c) = DEFAULT_RATIOS;
        Self {
            seed: 0,
            ratios: [a, b, c],
        }
    }
}

impl SplitConfig {
    pub fn ratios(&self) -> (f64, f64, f64) {
        (self.ratios[0], self.ratios[1], self.ratios[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub stages: usize,
    pub plan: PlanOverrides,
    pub curve: OneCycleConfig,
    /// Run a range test before each stage and use its suggestion as lr_max.
    pub lr_find: bool,
    pub lr_finder: LrFinderConfig,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            stages: 3,
            plan: PlanOverrides::default(),
            curve: OneCycleConfig::default(),
            lr_find: true,
            lr_finder: LrFinderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub min_nuclei: usize,
    pub max_nuclei: usize,
    /// Semi-axis range as a fraction of the shorter side.
    pub min_radius: f64,
    pub max_radius: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let p = SynthParams::default();
        Self {
            width: p.width,
            height: p.height,
            min_nuclei: p.nuclei.0,
            max_nuclei: p.nuclei.1,
            min_radius: p.radius.0,
            max_radius: p.radius.1,
        }
    }
}

impl SynthConfig {
    pub fn params(&self) -> SynthParams {
        SynthParams {
            width: self.width,
            height: self.height,
            nuclei: (self.min_nuclei, self.max_nuclei),
            radius: (self.min_radius, self.max_radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seed for synthesis and training.
    pub seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub parallelism: usize,
    pub paths: PathsConfig,
    pub tile: TileConfig,
    pub split: SplitConfig,
    pub postprocess: PostprocessConfig,
    pub schedule: ScheduleConfig,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            parallelism: 0,
            paths: PathsConfig::default(),
            tile: TileConfig::default(),
            split: SplitConfig::default(),
            postprocess: PostprocessConfig::default(),
            schedule: ScheduleConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let r = self.split.ratios;
        if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split ratios must be non-negative and sum to 1, got {r:?}")));
        }
        if self.tile.width == 0 || self.tile.height == 0 {
            return Err(Error::invalid("tile size must be positive"));
        }
        if self.schedule.stages == 0 {
            return Err(Error::invalid("schedule needs at least one stage"));
        }
        if self.synth.width == 0 || self.synth.height == 0 || self.synth.min_nuclei > self.synth.max_nuclei {
            return Err(Error::invalid("synthetic sizes must be positive and min_nuclei <= max_nuclei"));
        }
        self.postprocess.validate()?;
        self.schedule.curve.validate_shape()?;
        if self.schedule.lr_find {
            self.schedule.lr_finder.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_ratios_rejected() {
        let mut cfg = PipelineConfig::default();
        cfg.split.ratios = [0.7, 0.2, 0.2];
        assert!(cfg.validate().is_err());
        cfg.split.ratios = [0.5, 0.5, 0.0];
        cfg.validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let cfg = PipelineConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&text).unwrap(), cfg);
        let partial: PipelineConfig = serde_json::from_str(r#"{"postprocess": {"threshold": 200}}"#).unwrap();
        assert_eq!(partial.postprocess.threshold, 200);
        assert_eq!(partial.postprocess.blur_kernel, 5);
    }
}
