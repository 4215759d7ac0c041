use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{overlap_counts, OverlapCounts};
use super::postprocess::{PostprocessConfig, Postprocessor};
use crate::dataset::DatasetLayout;
use crate::error::{Error, Result};
use crate::imaging::BinaryMask;
use crate::io;

pub const CSV_HEADER: &str = "id,iou,dice,target_px,pred_px,intersection_px";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub id: String,
    pub iou: f64,
    pub dice: f64,
    pub target_px: usize,
    pub pred_px: usize,
    pub intersection_px: usize,
}

impl MetricsRow {
    pub fn from_counts(id: impl Into<String>, c: OverlapCounts) -> Self {
        Self {
            id: id.into(),
            iou: c.iou(),
            dice: c.dice(),
            target_px: c.target,
            pred_px: c.prediction,
            intersection_px: c.intersection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub mean_iou: f64,
    pub mean_dice: f64,
    pub count: usize,
}

impl MetricsReport {
    /// Macro averages over `rows`, kept in the given order.
    pub fn from_rows(rows: Vec<MetricsRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("no images to evaluate".into()));
        }
        let n = rows.len() as f64;
        let mean_iou = rows.iter().map(|r| r.iou).sum::<f64>() / n;
        let mean_dice = rows.iter().map(|r| r.dice).sum::<f64>() / n;
        Ok(Self {
            count: rows.len(),
            rows,
            mean_iou,
            mean_dice,
        })
    }

    /// CSV with one row per image and a trailing `MEAN` row. Pixel columns
    /// on the `MEAN` row are per-image means.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.id, r.iou, r.dice, r.target_px, r.pred_px, r.intersection_px
            );
        }
        let n = self.count as f64;
        let mean_px = |f: fn(&MetricsRow) -> usize| self.rows.iter().map(f).sum::<usize>() as f64 / n;
        let _ = writeln!(
            out,
            "MEAN,{},{},{},{},{}",
            self.mean_iou,
            self.mean_dice,
            mean_px(|r| r.target_px),
            mean_px(|r| r.pred_px),
            mean_px(|r| r.intersection_px)
        );
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::from_json(&e))
    }

    /// Writes the CSV at `path` and the JSON next to it with a `.json` extension.
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        io::atomic_write(path, self.to_csv().as_bytes())?;
        let json = path.with_extension("json");
        io::atomic_write(&json, self.to_json().as_bytes())?;
        Ok(json)
    }
}

pub fn prediction_path(pred_dir: &Path, id: &str) -> PathBuf {
    pred_dir.join(format!("{id}.png"))
}

/// Score the predictions in `pred_dir` for `ids` against the dataset masks.
///
/// With a config, each prediction is read as a probability map and
/// post-processed first; without one it must already be a binary mask.
pub fn evaluate_ids(
    layout: &DatasetLayout,
    ids: &[String],
    pred_dir: &Path,
    cfg: Option<&PostprocessConfig>,
) -> Result<MetricsReport> {
    let missing: Vec<String> = ids
        .iter()
        .filter(|id| !prediction_path(pred_dir, id).is_file())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    let post = cfg.map(Postprocessor::new).transpose()?;
    let rows = ids
        .par_iter()
        .map(|id| {
            let target = layout.load_mask(id)?;
            let path = prediction_path(pred_dir, id);
            let pred: BinaryMask = match &post {
                Some(p) => p.apply(&io::read_probmap(&path)?)?,
                None => io::read_mask(&path)?,
            };
            Ok(MetricsRow::from_counts(id.as_str(), overlap_counts(&target, &pred)?))
        })
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::from_rows(rows)
}

/// [`evaluate_ids`] over the test ids of the dataset's saved split.
pub fn evaluate(layout: &DatasetLayout, pred_dir: &Path, cfg: Option<&PostprocessConfig>) -> Result<MetricsReport> {
    let split = layout.load_split()?;
    evaluate_ids(layout, &split.test, pred_dir, cfg)
}
