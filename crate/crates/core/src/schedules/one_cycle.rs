use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OneCycleConfig {
    pub lr_max: f64,
    /// Number of intervals; the curve has `total_steps + 1` points.
    pub total_steps: usize,
    pub pct_start: f64,
    pub div_start: f64,
    pub div_final: f64,
    pub mom_high: f64,
    pub mom_low: f64,
    pub weight_decay: f64,
}

impl Default for OneCycleConfig {
    fn default() -> Self {
        Self {
            lr_max: 1e-2,
            total_steps: 100,
            pct_start: 0.3,
            div_start: 25.0,
            div_final: 2.5e5,
            mom_high: 0.95,
            mom_low: 0.85,
            weight_decay: 1e-3,
        }
    }
}

impl OneCycleConfig {
    pub fn validate_shape(&self) -> Result<()> {
        if !(self.lr_max.is_finite() && self.lr_max >= 0.0) {
            return Err(Error::invalid(format!("lr_max must be non-negative, got {}", self.lr_max)));
        }
        if !(self.pct_start > 0.0 && self.pct_start < 1.0) {
            return Err(Error::invalid(format!("pct_start must be in (0, 1), got {}", self.pct_start)));
        }
        if !(self.div_start > 1.0 && self.div_final > 1.0) {
            return Err(Error::invalid("div_start and div_final must exceed 1"));
        }
        if !(self.mom_low <= self.mom_high && self.mom_low >= 0.0 && self.mom_high < 1.0) {
            return Err(Error::invalid("momentum band must satisfy 0 <= low <= high < 1"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::invalid("weight decay must be non-negative"));
        }
        Ok(())
    }

    /// Index of the learning-rate peak.
    pub fn peak_index(&self) -> usize {
        let t = self.total_steps;
        ((self.pct_start * t as f64).floor() as usize).clamp(1, t.saturating_sub(1).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepValue {
    pub lr: f64,
    pub mom: f64,
}

/// Cosine interpolation from `start` (frac 0) to `end` (frac 1).
fn cos_anneal(start: f64, end: f64, frac: f64) -> f64 {
    end + (start - end) * 0.5 * (1.0 + (PI * frac).cos())
}

/// Learning rate warms up from `lr_max / div_start` to `lr_max` over the
/// first phase, then anneals to `lr_max / div_final`; momentum mirrors it
/// between the high and low band edges.
pub fn one_cycle(cfg: &OneCycleConfig) -> Result<Vec<StepValue>> {
    cfg.validate_shape()?;
    if cfg.total_steps < 2 {
        return Err(Error::invalid(format!(
            "one-cycle needs total_steps >= 2, got {}",
            cfg.total_steps
        )));
    }
    Ok(curve(cfg, cfg.total_steps))
}

fn curve(cfg: &OneCycleConfig, total: usize) -> Vec<StepValue> {
    let lr_start = cfg.lr_max / cfg.div_start;
    let lr_end = cfg.lr_max / cfg.div_final;
    let peak = if total == 1 {
        0
    } else {
        OneCycleConfig {
            total_steps: total,
            ..cfg.clone()
        }
        .peak_index()
    };
    (0..=total)
        .map(|t| {
            if t <= peak && peak > 0 {
                let f = t as f64 / peak as f64;
                StepValue {
                    lr: cos_anneal(lr_start, cfg.lr_max, f),
                    mom: cos_anneal(cfg.mom_high, cfg.mom_low, f),
                }
            } else {
                let f = (t - peak) as f64 / (total - peak) as f64;
                StepValue {
                    lr: cos_anneal(cfg.lr_max, lr_end, f),
                    mom: cos_anneal(cfg.mom_low, cfg.mom_high, f),
                }
            }
        })
        .collect()
}

/// One-cycle values for a phase of exactly `updates` optimizer steps. Phases
/// too short for a full cycle get the tail of the shortest curve.
pub fn one_cycle_for_updates(cfg: &OneCycleConfig, updates: usize) -> Result<Vec<StepValue>> {
    cfg.validate_shape()?;
    Ok(match updates {
        0 => Vec::new(),
        1 => vec![StepValue {
            lr: cfg.lr_max,
            mom: cfg.mom_low,
        }],
        n => curve(cfg, n - 1),
    })
}
