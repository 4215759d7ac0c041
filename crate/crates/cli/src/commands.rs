use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use nucseg::annotations::{parse_annotations, rasterize};
use nucseg::baseline::{
    load_samples, lr_range_test, predict_image, train, train_with_schedule, BaselineWeights, TrainOptions, TrainOutcome,
};
use nucseg::config::PipelineConfig;
use nucseg::dataset::{split_dataset, write_synthetic_dataset, AugmentConfig, DatasetLayout, DatasetSplit};
use nucseg::eval::{evaluate, overlay_edges, overlay_iou, prediction_path, Postprocessor};
use nucseg::io;
use nucseg::pipeline::{predict_ids, run_pipeline};
use nucseg::schedules::{build_schedule, lr_find, progressive_plan, ScheduleFile};
use nucseg::tiler::{extract_tiles, manifest, plan_tiles, EdgePolicy};
use nucseg::Error;

use crate::args::*;
use crate::settings::{apply_plan, apply_post, validate};
use crate::CliError;

type Res = Result<(), CliError>;

fn dataset_dir(cfg: &PipelineConfig, flag: &Option<PathBuf>) -> DatasetLayout {
    DatasetLayout::new(flag.clone().unwrap_or_else(|| cfg.paths.dataset.clone()))
}

fn stem(path: &Path) -> Result<String, CliError> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::InvalidArgument(format!("no file name in {}", path.display())).into())
}

pub fn tile(mut cfg: PipelineConfig, a: TileArgs) -> Res {
    if let Some(w) = a.width {
        cfg.tile.width = w;
    }
    if let Some(h) = a.height {
        cfg.tile.height = h;
    }
    if let Some(e) = a.edge {
        cfg.tile.edge = match e {
            EdgeArg::Discard => EdgePolicy::DiscardPartial,
            EdgeArg::Pad => EdgePolicy::PadReplicate,
        };
    }
    validate(&cfg)?;
    let img = io::read_raster(&a.input)?;
    let grid = plan_tiles(img.width(), img.height(), cfg.tile.width, cfg.tile.height, cfg.tile.edge)?;
    let tiles = extract_tiles(&img, &grid)?;
    tiles
        .par_iter()
        .try_for_each(|t| io::write_raster(&a.out.join(format!("{}.png", t.name())), &t.image))?;
    io::atomic_write(&a.out.join("manifest.csv"), manifest(&tiles, "png").as_bytes())?;
    println!("{} tiles ({} rows x {} cols)", tiles.len(), grid.rows, grid.cols);
    Ok(())
}

pub fn rasterize_cmd(a: RasterizeArgs) -> Res {
    a.inputs.par_iter().try_for_each(|path| -> Res {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let ann = parse_annotations(&bytes)?;
        io::write_mask(&a.out.join(format!("{}.png", stem(path)?)), &rasterize(&ann))?;
        Ok(())
    })?;
    println!("{} masks written to {}", a.inputs.len(), a.out.display());
    Ok(())
}

pub fn synth(mut cfg: PipelineConfig, a: SynthArgs) -> Res {
    if let Some(w) = a.width {
        cfg.synth.width = w;
    }
    if let Some(h) = a.height {
        cfg.synth.height = h;
    }
    validate(&cfg)?;
    let layout = dataset_dir(&cfg, &a.out);
    let ids = write_synthetic_dataset(&layout, a.count, a.seed.unwrap_or(cfg.seed), &cfg.synth.params())?;
    println!("{} samples written to {}", ids.len(), layout.root().display());
    Ok(())
}

pub fn split(mut cfg: PipelineConfig, a: SplitArgs) -> Res {
    if let Some(s) = a.seed {
        cfg.split.seed = s;
    }
    if let Some(r) = a.ratios {
        cfg.split.ratios = r;
    }
    validate(&cfg)?;
    let layout = dataset_dir(&cfg, &a.dataset);
    let s = split_dataset(&layout, cfg.split.seed, cfg.split.ratios())?;
    println!("train {} val {} test {}", s.train.len(), s.val.len(), s.test.len());
    Ok(())
}

pub fn schedule(mut cfg: PipelineConfig, a: ScheduleArgs) -> Res {
    apply_plan(&mut cfg, &a.plan);
    validate(&cfg)?;
    let n = match a.train_size {
        Some(n) => n,
        None => dataset_dir(&cfg, &a.dataset).load_split()?.train.len(),
    };
    let plan = progressive_plan(a.width, a.height, cfg.schedule.stages, &cfg.schedule.plan)?;
    let spe: Vec<usize> = plan
        .stages
        .iter()
        .map(|s| nucseg::baseline::steps_per_epoch(n, s.batch))
        .collect();
    let file = build_schedule(&plan, &spe, &cfg.schedule.curve)?;
    file.save(&a.out)?;
    for s in &file.stages {
        println!("{}x{} batch {} lr_max {:e} steps {}", s.width, s.height, s.batch, s.lr_max, s.steps.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct LrfindOut<'a> {
    suggested_lr: f64,
    stop_index: usize,
    min_index: usize,
    lrs: &'a [f64],
    losses: &'a [f64],
    smoothed: &'a [f64],
}

fn read_lr_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (mut lrs, mut losses) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("lr")) {
            continue;
        }
        let parse = |s: Option<&str>| -> Result<f64, CliError> {
            s.and_then(|v| v.trim().parse().ok()).ok_or_else(|| {
                Error::Parse { line: i + 1, column: 1, message: format!("expected `lr,loss`, got {line:?}") }.into()
            })
        };
        let mut parts = line.split(',');
        lrs.push(parse(parts.next())?);
        losses.push(parse(parts.next())?);
    }
    Ok((lrs, losses))
}

pub fn lrfind(cfg: PipelineConfig, a: LrfindArgs) -> Res {
    validate(&cfg)?;
    let finder = &cfg.schedule.lr_finder;
    let (lrs, losses, result) = if let Some(csv) = &a.losses {
        let (lrs, losses) = read_lr_csv(csv)?;
        let r = lr_find(&lrs, &losses, finder)?;
        (lrs, losses, r)
    } else {
        let layout = dataset_dir(&cfg, &a.dataset);
        let split = layout.load_split()?;
        let samples = load_samples(&layout, &split.train)?;
        let wd = cfg.schedule.plan.weight_decay.unwrap_or(nucseg::schedules::DEFAULT_WEIGHT_DECAY);
        let rt = lr_range_test(&samples, a.downscale, a.batch, wd, finder, a.seed.unwrap_or(cfg.seed))?;
        (rt.lrs, rt.losses, rt.result)
    };
    if let Some(out) = &a.out {
        let doc = LrfindOut {
            suggested_lr: result.suggested_lr,
            stop_index: result.stop_index,
            min_index: result.min_index,
            lrs: &lrs,
            losses: &losses,
            smoothed: &result.smoothed,
        };
        let text = serde_json::to_string_pretty(&doc).expect("serializes") + "\n";
        io::atomic_write(out, text.as_bytes())?;
    }
    println!("suggested lr {:e} (minimum at {:e}, stopped at step {})", result.suggested_lr, lrs[result.min_index], result.stop_index);
    Ok(())
}

fn report_training(outcome: &TrainOutcome) {
    for (i, s) in outcome.stages.iter().enumerate() {
        println!("stage {i}: lr_max {:e}, {} steps", s.lr_max, s.losses.len());
    }
    println!("loss {:.6} -> {:.6}", outcome.initial_loss, outcome.final_loss);
}

pub fn train_baseline(mut cfg: PipelineConfig, a: TrainArgs) -> Res {
    apply_plan(&mut cfg, &a.plan);
    if a.no_lr_find {
        cfg.schedule.lr_find = false;
    }
    validate(&cfg)?;
    let layout = dataset_dir(&cfg, &a.dataset);
    let split = layout.load_split()?;
    let samples = load_samples(&layout, &split.train)?;
    let opts = TrainOptions {
        seed: a.seed.unwrap_or(cfg.seed),
        lr_finder: cfg.schedule.lr_find.then(|| cfg.schedule.lr_finder.clone()),
        curve: cfg.schedule.curve.clone(),
        augment: a.augment.then(AugmentConfig::default),
    };
    let outcome = match &a.schedule {
        Some(path) => train_with_schedule(&samples, &ScheduleFile::load(path)?, &opts)?,
        None => {
            let (w, h) = samples[0].image.dims();
            let plan = progressive_plan(w, h, cfg.schedule.stages, &cfg.schedule.plan)?;
            train(&samples, &plan, &opts)?
        }
    };
    outcome.weights.save(&a.out)?;
    if let Some(p) = &a.schedule_out {
        outcome.schedule.save(p)?;
    }
    report_training(&outcome);
    Ok(())
}

fn split_ids(split: &DatasetSplit, part: SplitPart) -> Vec<String> {
    match part {
        SplitPart::Train => split.train.clone(),
        SplitPart::Val => split.val.clone(),
        SplitPart::Test => split.test.clone(),
        SplitPart::All => {
            let mut all: Vec<String> = split.train.iter().chain(&split.val).chain(&split.test).cloned().collect();
            all.sort();
            all
        }
    }
}

pub fn predict(cfg: PipelineConfig, a: PredictArgs) -> Res {
    validate(&cfg)?;
    let weights = BaselineWeights::load(&a.weights)?;
    if let Some(image) = &a.image {
        let out = match a.out {
            Some(o) => o,
            None => cfg.paths.predictions.join(format!("{}.png", stem(image)?)),
        };
        io::write_probmap(&out, &predict_image(&weights, &io::read_raster(image)?))?;
        println!("probability map written to {}", out.display());
        return Ok(());
    }
    let layout = dataset_dir(&cfg, &a.dataset);
    let ids = split_ids(&layout.load_split()?, a.split);
    let out = a.out.unwrap_or_else(|| cfg.paths.predictions.clone());
    predict_ids(&layout, &ids, &weights, &out)?;
    println!("{} probability maps written to {}", ids.len(), out.display());
    Ok(())
}

pub fn postprocess(mut cfg: PipelineConfig, a: PostprocessArgs) -> Res {
    apply_post(&mut cfg.postprocess, &a.post);
    validate(&cfg)?;
    let post = Postprocessor::new(&cfg.postprocess)?;
    if !a.input.is_dir() {
        return Err(Error::MissingInput(a.input).into());
    }
    let stems = io::png_stems(&a.input)?;
    stems.par_iter().try_for_each(|s| -> nucseg::Result<()> {
        let pm = io::read_probmap(&prediction_path(&a.input, s))?;
        io::write_mask(&prediction_path(&a.out, s), &post.apply(&pm)?)
    })?;
    println!("{} masks written to {}", stems.len(), a.out.display());
    Ok(())
}

pub fn evaluate_cmd(mut cfg: PipelineConfig, a: EvaluateArgs) -> Res {
    apply_post(&mut cfg.postprocess, &a.post);
    validate(&cfg)?;
    let layout = dataset_dir(&cfg, &a.dataset);
    let pred = a.pred.unwrap_or_else(|| cfg.paths.predictions.clone());
    if !pred.is_dir() {
        return Err(Error::MissingInput(pred).into());
    }
    let report = evaluate(&layout, &pred, (!a.masks).then_some(&cfg.postprocess))?;
    let path = a.report.unwrap_or_else(|| cfg.paths.reports.join(nucseg::pipeline::REPORT_CSV));
    report.save(&path)?;
    println!("mean IoU {:.4} mean Dice {:.4} over {} images", report.mean_iou, report.mean_dice, report.count);
    Ok(())
}

pub fn overlay(a: OverlayArgs) -> Res {
    let img = io::read_raster(&a.image)?;
    let mask = io::read_mask(&a.mask)?;
    let out = match &a.target {
        Some(t) => overlay_iou(&img, &io::read_mask(t)?, &mask)?,
        None => overlay_edges(&img, &mask)?,
    };
    io::write_raster(&a.out, &out)?;
    Ok(())
}

pub fn pipeline(mut cfg: PipelineConfig, a: PipelineArgs) -> Res {
    if let Some(s) = a.seed {
        cfg.seed = s;
        cfg.split.seed = s;
    }
    if let Some(d) = a.dataset {
        cfg.paths.dataset = d;
    }
    if let Some(p) = a.pred {
        cfg.paths.predictions = p;
    }
    if let Some(r) = a.reports {
        cfg.paths.reports = r;
    }
    if a.no_lr_find {
        cfg.schedule.lr_find = false;
    }
    apply_plan(&mut cfg, &a.plan);
    apply_post(&mut cfg.postprocess, &a.post);
    validate(&cfg)?;
    let out = run_pipeline(&cfg, a.synthetic)?;
    println!("report: {}", out.report_path.display());
    println!(
        "mean IoU {:.4} mean Dice {:.4} over {} test images ({} trained)",
        out.report.mean_iou, out.report.mean_dice, out.test_count, out.train_count
    );
    Ok(())
}
