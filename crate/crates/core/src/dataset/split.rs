use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.70, 0.15, 0.15);

/// Train/validation/test partition of sample ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub ratios: (f64, f64, f64),
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Round-half-up share of `n`. The epsilon absorbs representation error in
/// the ratio (0.15 * 10 must count as exactly 1.5).
fn share(ratio: f64, n: usize) -> usize {
    (ratio * n as f64 + 0.5 + 1e-9).floor() as usize
}

pub fn split_sizes(n: usize, ratios: (f64, f64, f64)) -> (usize, usize, usize) {
    let train = share(ratios.0, n).min(n);
    let val = share(ratios.1, n).min(n - train);
    (train, val, n - train - val)
}

fn validate_ratios(ratios: (f64, f64, f64)) -> Result<()> {
    let (a, b, c) = ratios;
    if [a, b, c].iter().any(|r| !r.is_finite() || *r < 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split ratios must be non-negative and sum to 1, got {ratios:?}"
        )));
    }
    Ok(())
}

/// Shuffle with ChaCha8 seeded from `seed`, then cut into train/val/test.
pub fn split(ids: &[String], seed: u64) -> Result<DatasetSplit> {
    split_with_ratios(ids, seed, DEFAULT_RATIOS)
}

pub fn split_with_ratios(ids: &[String], seed: u64, ratios: (f64, f64, f64)) -> Result<DatasetSplit> {
    validate_ratios(ratios)?;
    if ids.is_empty() {
        return Err(Error::EmptyInput("no sample ids to split".into()));
    }
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = split_sizes(ids.len(), ratios);
    let test = shuffled.split_off(n_train + n_val);
    let val = shuffled.split_off(n_train);
    Ok(DatasetSplit {
        seed,
        ratios,
        train: shuffled,
        val,
        test,
    })
}

impl DatasetSplit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::from_json(&e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
