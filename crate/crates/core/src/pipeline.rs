//! End-to-end run: synthesize (optionally), split, plan, train the baseline,
//! predict the test split, post-process and evaluate.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::baseline::{load_samples, predict_image, train, BaselineWeights, TrainOptions};
use crate::config::PipelineConfig;
use crate::dataset::{split_with_ratios, write_synthetic_dataset, DatasetLayout};
use crate::error::{Error, Result};
use crate::eval::{evaluate_ids, prediction_path, MetricsReport, Postprocessor};
use crate::io;
use crate::schedules::progressive_plan;

pub const REPORT_CSV: &str = "report.csv";
pub const WEIGHTS_FILE: &str = "weights.json";
pub const SCHEDULE_FILE: &str = "schedule.json";

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: MetricsReport,
    pub report_path: PathBuf,
    pub weights_path: PathBuf,
    pub schedule_path: PathBuf,
    pub train_count: usize,
    pub test_count: usize,
}

/// Write a probability map for each id into `out_dir`.
pub fn predict_ids(layout: &DatasetLayout, ids: &[String], weights: &BaselineWeights, out_dir: &std::path::Path) -> Result<()> {
    ids.par_iter().try_for_each(|id| {
        let img = layout.load_image(id)?;
        io::write_probmap(&prediction_path(out_dir, id), &predict_image(weights, &img))
    })
}

/// Run every stage. With `synthetic = Some(n)`, `n` samples are generated
/// into the dataset directory first and only those are split.
pub fn run_pipeline(cfg: &PipelineConfig, synthetic: Option<usize>) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let layout = DatasetLayout::new(&cfg.paths.dataset);
    let ids = match synthetic {
        Some(n) => {
            log::info!("synthesizing {n} samples into {}", layout.root().display());
            write_synthetic_dataset(&layout, n, cfg.seed, &cfg.synth.params())?
        }
        None => layout.ids()?,
    };
    let split = split_with_ratios(&ids, cfg.split.seed, cfg.split.ratios())?;
    split.save(&layout.split_path())?;
    log::info!(
        "split {} ids into {}/{}/{}",
        ids.len(),
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    if split.test.is_empty() {
        return Err(Error::EmptyInput("test split is empty".into()));
    }

    let samples = load_samples(&layout, &split.train)?;
    let (w, h) = samples[0].image.dims();
    if let Some(s) = samples.iter().find(|s| s.image.dims() != (w, h)) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            actual: s.image.dims(),
        });
    }
    let plan = progressive_plan(w, h, cfg.schedule.stages, &cfg.schedule.plan)?;
    let opts = TrainOptions {
        seed: cfg.seed,
        lr_finder: cfg.schedule.lr_find.then(|| cfg.schedule.lr_finder.clone()),
        curve: cfg.schedule.curve.clone(),
        augment: None,
    };
    let outcome = train(&samples, &plan, &opts)?;
    log::info!(
        "training loss {:.5} -> {:.5}",
        outcome.initial_loss,
        outcome.final_loss
    );

    let reports = &cfg.paths.reports;
    let weights_path = reports.join(WEIGHTS_FILE);
    let schedule_path = reports.join(SCHEDULE_FILE);
    outcome.weights.save(&weights_path)?;
    outcome.schedule.save(&schedule_path)?;

    predict_ids(&layout, &split.test, &outcome.weights, &cfg.paths.predictions)?;
    let post = Postprocessor::new(&cfg.postprocess)?;
    let masks_dir = reports.join("masks");
    split.test.par_iter().try_for_each(|id| {
        let pm = io::read_probmap(&prediction_path(&cfg.paths.predictions, id))?;
        io::write_mask(&prediction_path(&masks_dir, id), &post.apply(&pm)?)
    })?;

    let report = evaluate_ids(&layout, &split.test, &masks_dir, None)?;
    let report_path = reports.join(REPORT_CSV);
    report.save(&report_path)?;
    Ok(PipelineOutcome {
        report,
        report_path,
        weights_path,
        schedule_path,
        train_count: split.train.len(),
        test_count: split.test.len(),
    })
}
