use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrFinderConfig {
    pub lr_min: f64,
    pub lr_max: f64,
    pub steps: usize,
    /// Exponential smoothing factor for the loss, in [0, 1).
    pub beta: f64,
    /// Stop once the smoothed loss exceeds this multiple of the best so far.
    pub divergence_factor: f64,
    /// The suggestion is the lr at the smoothed-loss minimum divided by this.
    pub suggestion_divisor: f64,
}

impl Default for LrFinderConfig {
    fn default() -> Self {
        Self {
            lr_min: 1e-7,
            lr_max: 10.0,
            steps: 100,
            beta: 0.98,
            divergence_factor: 4.0,
            suggestion_divisor: 10.0,
        }
    }
}

impl LrFinderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_min > 0.0 && self.lr_min < self.lr_max && self.lr_max.is_finite()) {
            return Err(Error::invalid(format!(
                "lr finder bounds must satisfy 0 < lr_min < lr_max, got {} .. {}",
                self.lr_min, self.lr_max
            )));
        }
        if self.steps < 2 {
            return Err(Error::invalid("lr finder needs at least 2 steps"));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("smoothing beta must be in [0, 1), got {}", self.beta)));
        }
        if !(self.divergence_factor > 1.0 && self.suggestion_divisor > 0.0) {
            return Err(Error::invalid("divergence factor must exceed 1 and divisor be positive"));
        }
        Ok(())
    }
}

/// Geometric sweep from `lr_min` to `lr_max` inclusive.
pub fn lr_sweep(cfg: &LrFinderConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let last = cfg.steps - 1;
    let ratio = cfg.lr_max / cfg.lr_min;
    Ok((0..cfg.steps)
        .map(|i| match i {
            0 => cfg.lr_min,
            i if i == last => cfg.lr_max,
            i => cfg.lr_min * ratio.powf(i as f64 / last as f64),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrFindResult {
    pub suggested_lr: f64,
    /// Index of the first diverged step, or the number of points if none diverged.
    pub stop_index: usize,
    /// Index of the smoothed-loss minimum before `stop_index`.
    pub min_index: usize,
    /// Bias-corrected smoothed losses up to (not including) `stop_index`.
    pub smoothed: Vec<f64>,
}

/// Bias-corrected exponential moving average of `losses`, stopping at the
/// first point that diverges.
pub fn lr_find(lrs: &[f64], losses: &[f64], cfg: &LrFinderConfig) -> Result<LrFindResult> {
    if losses.len() < 2 {
        return Err(Error::invalid(format!(
            "lr_find needs at least 2 loss points, got {}",
            losses.len()
        )));
    }
    if lrs.len() != losses.len() {
        return Err(Error::invalid(format!(
            "{} learning rates paired with {} losses",
            lrs.len(),
            losses.len()
        )));
    }
    if !(0.0..1.0).contains(&cfg.beta) || cfg.divergence_factor <= 1.0 || cfg.suggestion_divisor <= 0.0 {
        return Err(Error::invalid("invalid lr finder smoothing configuration"));
    }

    let mut avg = 0.0;
    let mut correction = 1.0;
    let mut best = f64::INFINITY;
    let mut best_index = 0;
    let mut smoothed = Vec::with_capacity(losses.len());
    let mut stop_index = losses.len();

    for (i, &loss) in losses.iter().enumerate() {
        avg = cfg.beta * avg + (1.0 - cfg.beta) * loss;
        correction *= cfg.beta;
        let s = avg / (1.0 - correction);
        if !s.is_finite() || (i > 0 && s > cfg.divergence_factor * best) {
            stop_index = i;
            break;
        }
        if s < best {
            best = s;
            best_index = i;
        }
        smoothed.push(s);
    }
    if smoothed.is_empty() {
        return Err(Error::NonFinite("lr finder loss"));
    }
    Ok(LrFindResult {
        suggested_lr: lrs[best_index] / cfg.suggestion_divisor,
        stop_index,
        min_index: best_index,
        smoothed,
    })
}
