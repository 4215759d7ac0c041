//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use nucseg::annotations::rasterize;
use nucseg::baseline::{loss_and_grad, BaselineWeights, FeatureMap, FEATURES};
use nucseg::config::PipelineConfig;
use nucseg::dataset::split;
use nucseg::eval::{dice, iou, overlap_counts, PostprocessConfig, Postprocessor};
use nucseg::imaging::{dilate, erode, open, BinaryMask, GrayImage, ProbMap, StructuringElement};
use nucseg::pipeline::{run_pipeline, PipelineOutcome, REPORT_CSV};
use nucseg::schedules::{lr_find, lr_sweep, one_cycle, LrFinderConfig, OneCycleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn morphology_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for size in [3, 15] {
        let se = StructuringElement::ellipse(size, size).map_err(|e| e.to_string())?;
        let fp = ellipse_footprint(size, size);
        for (i, row) in fp.iter().enumerate() {
            for (j, &on) in row.iter().enumerate() {
                ensure(se.contains(j, i) == on, || format!("{size}x{size} footprint differs at ({j},{i})"))?;
            }
        }
    }
    let small = StructuringElement::ellipse(3, 3).unwrap();
    let large = StructuringElement::ellipse(15, 15).unwrap();
    let (fs, fl) = (ellipse_footprint(3, 3), ellipse_footprint(15, 15));
    for k in 0..200 {
        let m = if k % 2 == 0 {
            let density = rng.gen_range(0.2..0.95);
            random_mask(&mut rng, 32, 32, density)
        } else {
            random_blobs(&mut rng, 32, 32)
        };
        for (se, fp) in [(&small, &fs), (&large, &fl)] {
            ensure(erode(&m, se) == naive_erode(&m, fp), || format!("erode mismatch on mask {k}"))?;
            ensure(dilate(&m, se) == naive_dilate(&m, fp), || format!("dilate mismatch on mask {k}"))?;
            ensure(open(&m, se) == naive_open(&m, fp), || format!("open mismatch on mask {k}"))?;
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), || format!("took {t:?}"))?;
    Ok(format!("200 masks x {{3x3, 15x15}} x {{erode, dilate, open}} exact in {t:.2?}"))
}

fn metrics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for k in 0..500 {
        let (w, h) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let (da, db) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let a = random_mask(&mut rng, w, h, da);
        let b = match k % 5 {
            0 => a.clone(),
            1 => BinaryMask::empty(w, h),
            _ => random_mask(&mut rng, w, h, db),
        };
        let (i, d) = (iou(&a, &b).unwrap(), dice(&a, &b).unwrap());
        ensure(i == brute_iou(&a, &b), || format!("iou differs on pair {k}"))?;
        ensure(d == brute_dice(&a, &b), || format!("dice differs on pair {k}"))?;
        let c = overlap_counts(&a, &b).unwrap();
        ensure(
            (c.target, c.prediction, c.intersection) == brute_counts(&a, &b),
            || format!("counts differ on pair {k}"),
        )?;
        ensure(i == iou(&b, &a).unwrap() && (0.0..=1.0).contains(&i), || format!("iou symmetry/range on pair {k}"))?;
        worst = worst.max((d - 2.0 * i / (1.0 + i)).abs());
    }
    ensure(worst <= 1e-12, || format!("dice identity off by {worst:e}"))?;
    Ok(format!("500 pairs exact; max |dice - 2iou/(1+iou)| = {worst:.1e}"))
}

fn rasterization_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for k in 0..50 {
        let poly = vec![random_polygon(&mut rng, 64.0)];
        let got = rasterize(&annotation(64, 64, &poly));
        ensure(got == brute_raster(64, 64, &poly), || format!("polygon {k} differs: {:?}", poly[0]))?;
    }
    let rect = vec![vec![(10.0, 10.0), (60.0, 10.0), (60.0, 40.0), (10.0, 40.0)]];
    let area = rasterize(&annotation(64, 64, &rect)).count();
    ensure(area == 1500, || format!("rectangle area {area}, expected 1500"))?;
    let disc = vec![circle(32.0, 32.0, 25.0, 256)];
    let area = rasterize(&annotation(64, 64, &disc)).count() as f64;
    let exact = std::f64::consts::PI * 625.0;
    let err = (area - exact).abs() / exact;
    ensure(err < 0.02, || format!("circle area {area} vs {exact:.1}"))?;
    Ok(format!("50 random polygons exact; rectangle 1500 px; circle r=25 off by {:.2}%", err * 100.0))
}

fn split_reproduction() -> Outcome {
    let ids: Vec<String> = (0..4753).map(|i| format!("img_{i:05}")).collect();
    let a = split(&ids, 42).map_err(|e| e.to_string())?;
    let sizes = (a.train.len(), a.val.len(), a.test.len());
    ensure(sizes == (3327, 713, 713), || format!("sizes {sizes:?}"))?;
    let b = split(&ids, 42).unwrap();
    ensure(a == b, || "same seed gave a different split".into())?;
    let mut all: Vec<_> = a.train.iter().chain(&a.val).chain(&a.test).cloned().collect();
    all.sort();
    ensure(all == ids, || "split is not a partition".into())?;
    let c = split(&ids, 43).unwrap();
    ensure(c.train != a.train, || "different seed gave the same split".into())?;
    Ok("4753 -> (3327, 713, 713), deterministic under seed".into())
}

fn one_cycle_anchors() -> Outcome {
    let cfg = OneCycleConfig {
        lr_max: 1e-2,
        total_steps: 1000,
        ..Default::default()
    };
    let s = one_cycle(&cfg).map_err(|e| e.to_string())?;
    let p = cfg.peak_index();
    let checks = [
        ("lr(0)", s[0].lr, 4e-4),
        ("lr(peak)", s[p].lr, 1e-2),
        ("lr(T)", s[1000].lr, 4e-8),
        ("mom(0)", s[0].mom, 0.95),
        ("mom(peak)", s[p].mom, 0.85),
        ("mom(T)", s[1000].mom, 0.95),
    ];
    for (name, got, want) in checks {
        ensure(rel(got, want) <= 1e-9, || format!("{name} = {got:e}, expected {want:e}"))?;
    }
    ensure(p == 300, || format!("peak at {p}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for k in 0..20 {
        let cfg = OneCycleConfig {
            lr_max: 10f64.powf(rng.gen_range(-5.0..0.0)),
            total_steps: rng.gen_range(10..3000),
            pct_start: rng.gen_range(0.05..0.95),
            div_start: rng.gen_range(2.0..100.0),
            div_final: 10f64.powf(rng.gen_range(2.0..6.0)),
            mom_high: rng.gen_range(0.9..0.99),
            mom_low: rng.gen_range(0.8..0.9),
            weight_decay: 0.0,
        };
        let s = one_cycle(&cfg).map_err(|e| e.to_string())?;
        let p = cfg.peak_index();
        let (up, down) = s.split_at(p + 1);
        ensure(up.windows(2).all(|w| w[1].lr >= w[0].lr && w[1].mom <= w[0].mom), || format!("config {k} not monotone before peak"))?;
        ensure(
            s[p..].windows(2).all(|w| w[1].lr <= w[0].lr && w[1].mom >= w[0].mom),
            || format!("config {k} not monotone after peak"),
        )?;
        let max = s.iter().map(|v| v.lr).fold(0.0, f64::max);
        ensure(rel(max, cfg.lr_max) <= 1e-12 && !down.is_empty(), || format!("config {k} peak {max:e} vs {:e}", cfg.lr_max))?;
    }
    Ok(format!("T=1000 anchors within 1e-9 (peak at step {p}); 20 random configs unimodal"))
}

fn lr_finder() -> Outcome {
    let cfg = LrFinderConfig::default();
    let lrs = lr_sweep(&cfg).map_err(|e| e.to_string())?;
    ensure(lrs[0] == 1e-7 && *lrs.last().unwrap() == 10.0, || format!("endpoints {:e} .. {:e}", lrs[0], lrs[99]))?;
    let step = lrs[1] / lrs[0];

    // convex in log10(lr), minimum at 1e-1: slow descent, sharp rise
    let valley: Vec<f64> = lrs
        .iter()
        .map(|lr| {
            let x = lr.log10() + 1.0;
            if x < 0.0 {
                1.0 - 0.02 * x
            } else {
                1.0 + 50.0 * x
            }
        })
        .collect();
    let r = lr_find(&lrs, &valley, &cfg).map_err(|e| e.to_string())?;
    let off = (r.suggested_lr / 1e-2).ln().abs();
    ensure(off <= step.ln() + 1e-12, || format!("suggestion {:e} is more than one sweep step from 1e-2", r.suggested_lr))?;

    let quad: Vec<f64> = lrs.iter().map(|lr| 1.0 + (lr.log10() + 1.0).powi(2)).collect();
    let raw = LrFinderConfig { beta: 0.0, ..cfg.clone() };
    let q = lr_find(&lrs, &quad, &raw).unwrap();
    let qoff = (q.suggested_lr / 1e-2).ln().abs();
    ensure(qoff <= step.ln() + 1e-12, || format!("unsmoothed suggestion {:e}", q.suggested_lr))?;

    let k = 60;
    let mut jump = vec![1.0; 100];
    jump[k..].iter_mut().for_each(|v| *v = 10.0);
    let smoothed = lr_find(&lrs, &jump, &cfg).unwrap();
    ensure(smoothed.stop_index >= k && smoothed.stop_index < 100, || format!("smoothed stop at {}", smoothed.stop_index))?;
    let mut spike = vec![1.0; 100];
    spike[k] = 10.0;
    let exact = lr_find(&lrs, &spike, &raw).unwrap();
    ensure(exact.stop_index == k, || format!("unsmoothed stop at {}", exact.stop_index))?;
    Ok(format!(
        "endpoints 1e-7/10; valley suggestion {:.4e} (step ratio {step:.4}); 10x jump at {k} stops at {} (smoothed) / {} (raw)",
        r.suggested_lr, smoothed.stop_index, exact.stop_index
    ))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let (w, ht) = (rng.gen_range(2..9), rng.gen_range(2..9));
        let vectors: Vec<[f64; FEATURES]> = (0..w * ht)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)))
            .collect();
        let features = FeatureMap::from_vectors(w, ht, &vectors);
        let target = random_mask(&mut rng, w, ht, 0.5);
        let weights = BaselineWeights {
            w: std::array::from_fn(|_| rng.gen_range(-0.5..0.5)),
            b: rng.gen_range(-1.0..1.0),
        };
        let wd = if k % 2 == 0 { 0.0 } else { rng.gen_range(1e-3..1e-1) };
        let loss = |p: &BaselineWeights| loss_and_grad(p, &features, &target, wd).unwrap().0;
        let (_, g) = loss_and_grad(&weights, &features, &target, wd).map_err(|e| e.to_string())?;
        let mut analytic = g.w.to_vec();
        analytic.push(g.b);
        let mut numeric = Vec::with_capacity(FEATURES + 1);
        for i in 0..=FEATURES {
            let (mut plus, mut minus) = (weights, weights);
            if i < FEATURES {
                plus.w[i] += h;
                minus.w[i] -= h;
            } else {
                plus.b += h;
                minus.b -= h;
            }
            numeric.push((loss(&plus) - loss(&minus)) / (2.0 * h));
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        let err = norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12);
        worst = worst.max(err);
        ensure(err < 1e-4, || format!("instance {k}: relative error {err:e}"))?;
    }
    Ok(format!("20 instances, worst relative error {worst:.2e}"))
}

fn pipeline_config(root: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.seed = 7;
    cfg.split.seed = 7;
    cfg.paths.dataset = root.join("data");
    cfg.paths.predictions = root.join("predictions");
    cfg.paths.reports = root.join("reports");
    cfg
}

fn end_to_end(root: &Path) -> Result<(String, PipelineOutcome), String> {
    let cfg = pipeline_config(root);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = pool.install(|| run_pipeline(&cfg, Some(50))).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    let dims = nucseg::io::read_raster(&cfg.paths.dataset.join("images/synth_0000.png")).map_err(|e| e.to_string())?.dims();
    ensure(dims == (400, 300), || format!("synthetic images are {dims:?}"))?;
    let msg = format!(
        "50 synthetic 300x400 images, {} test: mean IoU {:.4} in {t:.1?} (1 thread)",
        out.test_count, out.report.mean_iou
    );
    ensure(out.report.mean_iou >= 0.70, || msg.clone())?;
    ensure(t < Duration::from_secs(600), || msg.clone())?;
    Ok((msg, out))
}

fn throughput() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let blobs: Vec<(f64, f64, f64)> = (0..60)
        .map(|_| (rng.gen_range(0.0..1600.0), rng.gen_range(0.0..1200.0), rng.gen_range(15.0..70.0)))
        .collect();
    let pm = ProbMap::from_gray(GrayImage::from_fn(1600, 1200, |x, y| {
        let d = blobs
            .iter()
            .map(|&(cx, cy, r)| (x as f64 - cx).hypot(y as f64 - cy) - r)
            .fold(f64::INFINITY, f64::min);
        (255.0 / (1.0 + (d / 3.0).exp())).round() as u8
    }));
    let post = Postprocessor::new(&PostprocessConfig::default()).map_err(|e| e.to_string())?;
    let runs = 5;
    let start = Instant::now();
    let mut fg = 0;
    for _ in 0..runs {
        fg = post.apply(&pm).map_err(|e| e.to_string())?.count();
    }
    let per = start.elapsed() / runs;
    ensure(per <= Duration::from_millis(500), || format!("{per:?} per 1200x1600 image"))?;
    Ok(format!("{per:.1?} per 1200x1600 image (single thread, {fg} fg px)"))
}

fn determinism(root: &Path, first: &PipelineOutcome) -> Outcome {
    let cfg = pipeline_config(root);
    let second = run_pipeline(&cfg, Some(50)).map_err(|e| e.to_string())?;
    for name in [REPORT_CSV, "report.json"] {
        let a = fs::read(first.report_path.with_file_name(name)).map_err(|e| e.to_string())?;
        let b = fs::read(second.report_path.with_file_name(name)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{name} differs between runs"))?;
    }
    Ok("two runs (1 thread vs default pool) give byte-identical report.csv and report.json".into())
}

fn run(name: &str, results: &mut Vec<bool>, f: impl FnOnce() -> Outcome) {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match &outcome {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(detail) => println!("FAIL  {name}: {detail}"),
    }
    results.push(outcome.is_ok());
}

fn main() {
    let mut results = Vec::new();
    run("morphology oracle", &mut results, morphology_oracle);
    run("iou/dice oracle", &mut results, metrics_oracle);
    run("rasterization oracle", &mut results, rasterization_oracle);
    run("split 4753", &mut results, split_reproduction);
    run("one-cycle anchors", &mut results, one_cycle_anchors);
    run("lr_find", &mut results, lr_finder);
    run("baseline gradient check", &mut results, gradient_check);

    let first = tempfile::tempdir().expect("tempdir");
    let mut e2e = None;
    run("end-to-end synthetic pipeline", &mut results, || {
        end_to_end(first.path()).map(|(msg, out)| {
            e2e = Some(out);
            msg
        })
    });
    run("post-processing throughput", &mut results, throughput);
    let second = tempfile::tempdir().expect("tempdir");
    run("determinism", &mut results, || match &e2e {
        Some(out) => determinism(second.path(), out),
        None => Err("end-to-end run did not complete".into()),
    });

    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} acceptance criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
