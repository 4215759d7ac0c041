//! SGD with classical momentum driven by the one-cycle schedule, over the
//! progressive-resizing stages.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::features::{extract_features, FeatureMap};
use super::model::{loss_and_grad_batch, BaselineWeights, Gradient};
use crate::dataset::{augment, sample_rng, AugmentConfig, DatasetLayout};
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, RasterImage};
use crate::schedules::{
    lr_find, lr_sweep, stage_schedule, LrFindResult, LrFinderConfig, OneCycleConfig, ScheduleFile, StagePlan, StageSchedule,
    SCHEDULE_FORMAT_VERSION,
};

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub seed: u64,
    /// Run the learning-rate range test before each stage and use its
    /// suggestion as the stage's peak learning rate.
    pub lr_finder: Option<LrFinderConfig>,
    /// Shape of the one-cycle curve; `lr_max` and `weight_decay` come from the plan.
    pub curve: OneCycleConfig,
    pub augment: Option<AugmentConfig>,
}

#[derive(Debug, Clone)]
pub struct StageReport {
    pub lr_max: f64,
    pub lr_find_stop: Option<usize>,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: BaselineWeights,
    /// The schedule as executed (learning rates after any range test).
    pub schedule: ScheduleFile,
    pub stages: Vec<StageReport>,
    /// Full-training-set loss at final resolution before and after training.
    pub initial_loss: f64,
    pub final_loss: f64,
}

impl TrainOutcome {
    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.stages.iter().flat_map(|s| s.losses.iter().copied())
    }
}

/// A training sample at base resolution.
pub struct Sample {
    pub image: RasterImage,
    pub mask: BinaryMask,
}

pub fn load_samples(layout: &DatasetLayout, ids: &[String]) -> Result<Vec<Sample>> {
    if ids.is_empty() {
        return Err(Error::EmptyInput("training split is empty".into()));
    }
    ids.par_iter()
        .map(|id| layout.load_pair(id).map(|(image, mask)| Sample { image, mask }))
        .collect()
}

fn scaled_dims(dims: (usize, usize), downscale: usize) -> (usize, usize) {
    let d = downscale.max(1);
    ((dims.0 / d).max(1), (dims.1 / d).max(1))
}

fn prepare(image: &RasterImage, mask: &BinaryMask, downscale: usize) -> (FeatureMap, BinaryMask) {
    let (w, h) = scaled_dims(image.dims(), downscale);
    let img = image.resize_box(w, h);
    let m = if (w, h) == mask.dims() { mask.clone() } else { mask.resize_nearest(w, h) };
    (extract_features(&img), m)
}

/// Samples of one stage, at the stage's resolution.
struct StageData<'a> {
    samples: &'a [Sample],
    downscale: usize,
    cached: Option<Vec<(FeatureMap, BinaryMask)>>,
    augment: Option<AugmentConfig>,
    seed: u64,
    draws: u64,
}

impl<'a> StageData<'a> {
    fn new(samples: &'a [Sample], downscale: usize, augment: Option<AugmentConfig>, seed: u64) -> Self {
        let cached = augment.is_none().then(|| {
            samples
                .par_iter()
                .map(|s| prepare(&s.image, &s.mask, downscale))
                .collect()
        });
        Self {
            samples,
            downscale,
            cached,
            augment,
            seed,
            draws: 0,
        }
    }

    fn loss(&mut self, weights: &BaselineWeights, indices: &[usize], wd: f64) -> Result<(f64, Gradient)> {
        if let Some(cache) = &self.cached {
            let refs: Vec<_> = indices.iter().map(|&i| (&cache[i].0, &cache[i].1)).collect();
            return loss_and_grad_batch(weights, &refs, wd);
        }
        let cfg = self.augment.as_ref().expect("augmentation is on when nothing is cached");
        let base = self.draws;
        self.draws += indices.len() as u64;
        let owned = indices
            .par_iter()
            .enumerate()
            .map(|(k, &i)| {
                let s = &self.samples[i];
                let mut rng = sample_rng(self.seed, base + k as u64);
                let (img, mask) = augment(&s.image, &s.mask, cfg, &mut rng)?;
                Ok(prepare(&img, &mask, self.downscale))
            })
            .collect::<Result<Vec<_>>>()?;
        batch_loss(weights, &owned, wd)
    }
}

/// Epoch-aligned mini-batch index stream: reshuffled at each epoch start.
struct Batches {
    n: usize,
    batch: usize,
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl Batches {
    fn new(n: usize, batch: usize, rng: ChaCha8Rng) -> Self {
        Self {
            n,
            batch: batch.max(1),
            order: Vec::new(),
            pos: n,
            rng,
        }
    }

    fn next_batch(&mut self) -> Vec<usize> {
        if self.pos >= self.n {
            self.order = (0..self.n).collect();
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let end = (self.pos + self.batch).min(self.n);
        let out = self.order[self.pos..end].to_vec();
        self.pos = end;
        out
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn batch_loss(weights: &BaselineWeights, batch: &[(FeatureMap, BinaryMask)], wd: f64) -> Result<(f64, Gradient)> {
    let refs: Vec<_> = batch.iter().map(|(f, m)| (f, m)).collect();
    loss_and_grad_batch(weights, &refs, wd)
}

pub fn steps_per_epoch(n_samples: usize, batch: usize) -> usize {
    n_samples.div_ceil(batch.max(1)).max(1)
}

/// Outcome of a learning-rate range test.
#[derive(Debug, Clone)]
pub struct RangeTest {
    /// Learning rates actually tried (the sweep, cut at divergence).
    pub lrs: Vec<f64>,
    pub losses: Vec<f64>,
    pub result: LrFindResult,
}

/// Learning-rate range test from the current weights (which are left untouched):
/// plain SGD over the geometric sweep, one mini-batch per learning rate.
fn range_test(
    weights: &BaselineWeights,
    data: &mut StageData<'_>,
    batch: usize,
    weight_decay: f64,
    cfg: &LrFinderConfig,
    rng: ChaCha8Rng,
) -> Result<RangeTest> {
    let mut lrs = lr_sweep(cfg)?;
    let mut batches = Batches::new(data.samples.len(), batch, rng);
    let mut trial = *weights;
    let mut losses = Vec::with_capacity(lrs.len());
    for &lr in &lrs {
        match data.loss(&trial, &batches.next_batch(), weight_decay) {
            Ok((loss, g)) => {
                losses.push(loss);
                for (w, gw) in trial.w.iter_mut().zip(&g.w) {
                    *w -= lr * gw;
                }
                trial.b -= lr * g.b;
            }
            Err(Error::NonFinite(_)) => {
                losses.push(f64::INFINITY);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    lrs.truncate(losses.len());
    let result = lr_find(&lrs, &losses, cfg)?;
    Ok(RangeTest { lrs, losses, result })
}

/// Range test from zero weights on `samples` downscaled by `downscale`.
pub fn lr_range_test(
    samples: &[Sample],
    downscale: usize,
    batch: usize,
    weight_decay: f64,
    cfg: &LrFinderConfig,
    seed: u64,
) -> Result<RangeTest> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("training split is empty".into()));
    }
    let mut data = StageData::new(samples, downscale, None, seed);
    range_test(&BaselineWeights::default(), &mut data, batch, weight_decay, cfg, stream_rng(seed, 1))
}

fn run_stage(
    weights: &mut BaselineWeights,
    data: &mut StageData<'_>,
    schedule: &StageSchedule,
    rng: ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut batches = Batches::new(data.samples.len(), schedule.batch, rng);
    let frozen = schedule.frozen_steps().min(schedule.steps.len());
    let mut losses = Vec::with_capacity(schedule.steps.len());
    let mut velocity = Gradient::default();
    for (k, step) in schedule.steps.iter().enumerate() {
        if k == 0 || k == frozen {
            // each phase starts with a fresh optimizer state
            velocity = Gradient::default();
        }
        let (loss, g) = data.loss(weights, &batches.next_batch(), schedule.weight_decay)?;
        losses.push(loss);
        if k >= frozen {
            for ((v, w), gw) in velocity.w.iter_mut().zip(weights.w.iter_mut()).zip(&g.w) {
                *v = step.mom * *v - step.lr * gw;
                *w += *v;
            }
        }
        velocity.b = step.mom * velocity.b - step.lr * g.b;
        weights.b += velocity.b;
        if !weights.is_finite() {
            return Err(Error::NonFinite("baseline weights"));
        }
    }
    Ok(losses)
}

fn full_loss(weights: &BaselineWeights, data: &[(FeatureMap, BinaryMask)], wd: f64) -> Result<f64> {
    batch_loss(weights, data, wd).map(|(l, _)| l)
}

/// Train from zero weights following `plan`, deriving each stage's per-step
/// schedule from the training-set size and (optionally) a range test.
pub fn train(samples: &[Sample], plan: &StagePlan, opts: &TrainOptions) -> Result<TrainOutcome> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("training split is empty".into()));
    }
    if plan.stages.is_empty() {
        return Err(Error::invalid("stage plan has no stages"));
    }
    let mut weights = BaselineWeights::default();
    let mut executed = Vec::with_capacity(plan.stages.len());
    let mut reports = Vec::with_capacity(plan.stages.len());
    let final_data: Vec<_> = samples.par_iter().map(|s| prepare(&s.image, &s.mask, 1)).collect();
    let wd_final = plan.stages.last().map_or(0.0, |s| s.weight_decay);
    let initial_loss = full_loss(&weights, &final_data, wd_final)?;

    for (i, stage) in plan.stages.iter().enumerate() {
        let mut data = StageData::new(samples, stage.downscale, opts.augment.clone(), opts.seed ^ ((i as u64) << 32));
        let mut stage = stage.clone();
        let mut stop = None;
        if let Some(cfg) = &opts.lr_finder {
            let rt = range_test(&weights, &mut data, stage.batch, stage.weight_decay, cfg, stream_rng(opts.seed, 2 * i as u64 + 1))?;
            let (lr, s) = (rt.result.suggested_lr, rt.result.stop_index);
            log::info!("stage {i}: range test suggests lr {lr:.3e} (stopped at {s})");
            stage.lr_max = lr;
            stop = Some(s);
        }
        let schedule = stage_schedule(&stage, steps_per_epoch(samples.len(), stage.batch), &opts.curve)?;
        let losses = run_stage(&mut weights, &mut data, &schedule, stream_rng(opts.seed, 2 * i as u64))?;
        log::info!(
            "stage {i}: {}x{} lr_max {:.3e}, {} steps, last loss {:.5}",
            schedule.width,
            schedule.height,
            schedule.lr_max,
            losses.len(),
            losses.last().copied().unwrap_or(f64::NAN)
        );
        reports.push(StageReport {
            lr_max: stage.lr_max,
            lr_find_stop: stop,
            losses,
        });
        executed.push(schedule);
    }

    let final_loss = full_loss(&weights, &final_data, wd_final)?;
    Ok(TrainOutcome {
        weights,
        schedule: ScheduleFile {
            format_version: SCHEDULE_FORMAT_VERSION,
            stages: executed,
        },
        stages: reports,
        initial_loss,
        final_loss,
    })
}

/// Train following an explicit schedule file, step by step.
pub fn train_with_schedule(samples: &[Sample], schedule: &ScheduleFile, opts: &TrainOptions) -> Result<TrainOutcome> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("training split is empty".into()));
    }
    if schedule.stages.is_empty() {
        return Err(Error::invalid("schedule has no stages"));
    }
    let plan = schedule.plan();
    let mut weights = BaselineWeights::default();
    let final_data: Vec<_> = samples.par_iter().map(|s| prepare(&s.image, &s.mask, 1)).collect();
    let wd_final = plan.stages.last().map_or(0.0, |s| s.weight_decay);
    let initial_loss = full_loss(&weights, &final_data, wd_final)?;
    let mut reports = Vec::new();
    for (i, (stage, sched)) in plan.stages.iter().zip(&schedule.stages).enumerate() {
        let mut data = StageData::new(samples, stage.downscale, opts.augment.clone(), opts.seed ^ ((i as u64) << 32));
        let losses = run_stage(&mut weights, &mut data, sched, stream_rng(opts.seed, 2 * i as u64))?;
        reports.push(StageReport {
            lr_max: sched.lr_max,
            lr_find_stop: None,
            losses,
        });
    }
    let final_loss = full_loss(&weights, &final_data, wd_final)?;
    Ok(TrainOutcome {
        weights,
        schedule: schedule.clone(),
        stages: reports,
        initial_loss,
        final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_cover_each_epoch() {
        let mut b = Batches::new(10, 4, stream_rng(1, 0));
        let mut seen: Vec<usize> = (0..3).flat_map(|_| b.next_batch()).collect();
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(steps_per_epoch(10, 4), 3);
        assert_eq!(steps_per_epoch(3, 16), 1);
    }
}
