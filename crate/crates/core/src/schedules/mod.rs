//! Training schedules as plain numeric sequences: the learning-rate range
//! test, one-cycle learning-rate/momentum curves, and progressive-resizing
//! stage plans, plus the JSON schedule file consumed by trainers.

mod lr_finder;
mod one_cycle;
mod plan;

pub use lr_finder::{lr_find, lr_sweep, LrFindResult, LrFinderConfig};
pub use one_cycle::{one_cycle, one_cycle_for_updates, OneCycleConfig, StepValue};
pub use plan::{
    build_schedule, progressive_plan, stage_schedule, PlanOverrides, ScheduleFile, Stage, StagePlan,
    StageSchedule, DEFAULT_FROZEN_EPOCHS, DEFAULT_UNFROZEN_EPOCHS, DEFAULT_WEIGHT_DECAY, SCHEDULE_FORMAT_VERSION,
};
