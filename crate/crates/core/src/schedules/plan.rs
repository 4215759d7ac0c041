use std::path::Path;

use serde::{Deserialize, Serialize};

use super::one_cycle::{one_cycle_for_updates, OneCycleConfig, StepValue};
use crate::error::{Error, Result};
use crate::io::atomic_write;

pub const SCHEDULE_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_FROZEN_EPOCHS: usize = 5;
pub const DEFAULT_UNFROZEN_EPOCHS: usize = 10;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-3;

/// Learning rates by resolution, full size first: 1e-5 at full size, 1e-4 at
/// half, 1e-2 at a quarter and below.
const STAGE_LRS: [f64; 3] = [1e-5, 1e-4, 1e-2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Image size is the base size divided by this.
    pub downscale: usize,
    pub width: usize,
    pub height: usize,
    pub batch: usize,
    pub frozen_epochs: usize,
    pub unfrozen_epochs: usize,
    pub lr_max: f64,
    pub weight_decay: f64,
}

impl Stage {
    pub fn epochs(&self) -> usize {
        self.frozen_epochs + self.unfrozen_epochs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
}

impl StagePlan {
    pub fn total_epochs(&self) -> usize {
        self.stages.iter().map(Stage::epochs).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanOverrides {
    pub frozen_epochs: Option<usize>,
    pub unfrozen_epochs: Option<usize>,
    /// Per-stage batch sizes, first stage first.
    pub batches: Option<Vec<usize>>,
    /// Per-stage peak learning rates, first stage first.
    pub lr_max: Option<Vec<f64>>,
    pub weight_decay: Option<f64>,
}

fn per_stage<T: Copy>(values: &Option<Vec<T>>, stages: usize, what: &str) -> Result<Option<Vec<T>>> {
    match values {
        Some(v) if v.len() != stages => Err(Error::invalid(format!(
            "{what} override has {} entries for {stages} stages",
            v.len()
        ))),
        other => Ok(other.clone()),
    }
}

/// Progressive-resizing plan: each stage doubles both image dimensions,
/// ending at the base size.
pub fn progressive_plan(base_width: usize, base_height: usize, stages: usize, overrides: &PlanOverrides) -> Result<StagePlan> {
    if stages == 0 || stages > 16 {
        return Err(Error::invalid(format!("stage count must be in 1..=16, got {stages}")));
    }
    let factor = 1usize << (stages - 1);
    if base_width == 0 || base_height == 0 || base_width % factor != 0 || base_height % factor != 0 {
        return Err(Error::invalid(format!(
            "base size {base_width}x{base_height} is not divisible by {factor} for {stages} stages"
        )));
    }
    let batches = per_stage(&overrides.batches, stages, "batch")?;
    let lrs = per_stage(&overrides.lr_max, stages, "lr_max")?;
    let weight_decay = overrides.weight_decay.unwrap_or(DEFAULT_WEIGHT_DECAY);

    let mut out = Vec::with_capacity(stages);
    for s in 0..stages {
        // number of halvings below full size
        let k = stages - 1 - s;
        let downscale = 1usize << k;
        let batch = batches
            .as_ref()
            .map_or_else(|| 4usize.saturating_pow(k as u32), |b| b[s]);
        let lr_max = lrs.as_ref().map_or(STAGE_LRS[k.min(2)], |l| l[s]);
        if batch == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(lr_max.is_finite() && lr_max >= 0.0) {
            return Err(Error::invalid(format!("lr_max must be non-negative, got {lr_max}")));
        }
        out.push(Stage {
            downscale,
            width: base_width / downscale,
            height: base_height / downscale,
            batch,
            frozen_epochs: overrides.frozen_epochs.unwrap_or(DEFAULT_FROZEN_EPOCHS),
            unfrozen_epochs: overrides.unfrozen_epochs.unwrap_or(DEFAULT_UNFROZEN_EPOCHS),
            lr_max,
            weight_decay,
        });
    }
    Ok(StagePlan { stages: out })
}

/// One stage of a schedule file: the stage settings plus the per-step
/// learning rate and momentum for the frozen phase followed by the unfrozen phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub width: usize,
    pub height: usize,
    pub batch: usize,
    pub frozen_epochs: usize,
    pub unfrozen_epochs: usize,
    pub lr_max: f64,
    pub weight_decay: f64,
    pub steps_per_epoch: usize,
    pub steps: Vec<StepValue>,
}

impl StageSchedule {
    pub fn frozen_steps(&self) -> usize {
        self.frozen_epochs * self.steps_per_epoch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub stages: Vec<StageSchedule>,
}

fn default_version() -> u32 {
    SCHEDULE_FORMAT_VERSION
}

/// Per-step schedule for one stage: a one-cycle over the frozen epochs, then
/// a fresh one-cycle over the unfrozen epochs, both peaking at the stage lr.
pub fn stage_schedule(stage: &Stage, steps_per_epoch: usize, curve: &OneCycleConfig) -> Result<StageSchedule> {
    if steps_per_epoch == 0 {
        return Err(Error::invalid("steps per epoch must be positive"));
    }
    let cfg = OneCycleConfig {
        lr_max: stage.lr_max,
        weight_decay: stage.weight_decay,
        ..curve.clone()
    };
    let mut steps = one_cycle_for_updates(&cfg, stage.frozen_epochs * steps_per_epoch)?;
    steps.extend(one_cycle_for_updates(&cfg, stage.unfrozen_epochs * steps_per_epoch)?);
    Ok(StageSchedule {
        width: stage.width,
        height: stage.height,
        batch: stage.batch,
        frozen_epochs: stage.frozen_epochs,
        unfrozen_epochs: stage.unfrozen_epochs,
        lr_max: stage.lr_max,
        weight_decay: stage.weight_decay,
        steps_per_epoch,
        steps,
    })
}

/// Expand a stage plan into a schedule file. `steps_per_epoch` gives the
/// number of optimizer steps per epoch for each stage.
pub fn build_schedule(plan: &StagePlan, steps_per_epoch: &[usize], curve: &OneCycleConfig) -> Result<ScheduleFile> {
    if steps_per_epoch.len() != plan.stages.len() {
        return Err(Error::invalid(format!(
            "{} steps-per-epoch values for {} stages",
            steps_per_epoch.len(),
            plan.stages.len()
        )));
    }
    let stages = plan
        .stages
        .iter()
        .zip(steps_per_epoch)
        .map(|(stage, &spe)| stage_schedule(stage, spe, curve))
        .collect::<Result<_>>()?;
    Ok(ScheduleFile {
        format_version: SCHEDULE_FORMAT_VERSION,
        stages,
    })
}

impl ScheduleFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScheduleFile = serde_json::from_str(text).map_err(|e| Error::from_json(&e))?;
        if file.format_version != SCHEDULE_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "schedule file",
                found: file.format_version,
                expected: SCHEDULE_FORMAT_VERSION,
            });
        }
        for (i, s) in file.stages.iter().enumerate() {
            let expected = s.epochs_steps();
            if s.steps.len() != expected {
                return Err(Error::invalid(format!(
                    "stage {i} lists {} steps, expected {expected} ({} epochs x {} steps)",
                    s.steps.len(),
                    s.frozen_epochs + s.unfrozen_epochs,
                    s.steps_per_epoch
                )));
            }
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The stage settings without the per-step values.
    pub fn plan(&self) -> StagePlan {
        let base_w = self.stages.last().map_or(0, |s| s.width);
        StagePlan {
            stages: self
                .stages
                .iter()
                .map(|s| Stage {
                    downscale: if s.width > 0 { (base_w / s.width).max(1) } else { 1 },
                    width: s.width,
                    height: s.height,
                    batch: s.batch,
                    frozen_epochs: s.frozen_epochs,
                    unfrozen_epochs: s.unfrozen_epochs,
                    lr_max: s.lr_max,
                    weight_decay: s.weight_decay,
                })
                .collect(),
        }
    }
}

impl StageSchedule {
    fn epochs_steps(&self) -> usize {
        (self.frozen_epochs + self.unfrozen_epochs) * self.steps_per_epoch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_matches_reported_setup() {
        let plan = progressive_plan(1600, 1200, 3, &PlanOverrides::default()).unwrap();
        let sizes: Vec<_> = plan.stages.iter().map(|s| (s.width, s.height)).collect();
        assert_eq!(sizes, vec![(400, 300), (800, 600), (1600, 1200)]);
        let batches: Vec<_> = plan.stages.iter().map(|s| s.batch).collect();
        assert_eq!(batches, vec![16, 4, 1]);
        let lrs: Vec<_> = plan.stages.iter().map(|s| s.lr_max).collect();
        assert_eq!(lrs, vec![1e-2, 1e-4, 1e-5]);
        assert!(plan.stages.iter().all(|s| s.frozen_epochs == 5 && s.unfrozen_epochs == 10));
        assert_eq!(plan.total_epochs(), 45);
    }

    #[test]
    fn single_stage_is_full_size() {
        let plan = progressive_plan(1600, 1200, 1, &PlanOverrides::default()).unwrap();
        assert_eq!(plan.stages.len(), 1);
        assert_eq!((plan.stages[0].width, plan.stages[0].height), (1600, 1200));
    }

    #[test]
    fn rejects_indivisible_base() {
        assert!(progressive_plan(1602, 1200, 3, &PlanOverrides::default()).is_err());
        assert!(progressive_plan(1600, 1200, 0, &PlanOverrides::default()).is_err());
        let bad = PlanOverrides {
            batches: Some(vec![1, 2]),
            ..Default::default()
        };
        assert!(progressive_plan(1600, 1200, 3, &bad).is_err());
    }

    #[test]
    fn schedule_lengths_and_round_trip() {
        let plan = progressive_plan(400, 300, 3, &PlanOverrides::default()).unwrap();
        let file = build_schedule(&plan, &[3, 9, 35], &OneCycleConfig::default()).unwrap();
        assert_eq!(file.stages[0].steps.len(), 15 * 3);
        assert_eq!(file.stages[2].steps.len(), 15 * 35);
        assert_eq!(file.stages[1].frozen_steps(), 45);
        let parsed = ScheduleFile::from_json(&file.to_json()).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.plan(), plan);
    }

    #[test]
    fn schedule_rejects_wrong_version_and_step_count() {
        let plan = progressive_plan(400, 300, 1, &PlanOverrides::default()).unwrap();
        let mut file = build_schedule(&plan, &[2], &OneCycleConfig::default()).unwrap();
        file.stages[0].steps.pop();
        assert!(ScheduleFile::from_json(&file.to_json()).is_err());
        let text = r#"{"format_version": 7, "stages": []}"#;
        assert!(matches!(ScheduleFile::from_json(text), Err(Error::FormatVersion { found: 7, .. })));
    }
}
