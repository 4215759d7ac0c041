use crate::error::Result;
use crate::imaging::{ensure_same_dims, BinaryMask, FOREGROUND};

/// Pixel counts behind the overlap metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OverlapCounts {
    pub target: usize,
    pub prediction: usize,
    pub intersection: usize,
}

impl OverlapCounts {
    pub fn union(&self) -> usize {
        self.target + self.prediction - self.intersection
    }

    /// Intersection over union; two empty masks agree perfectly (1.0).
    pub fn iou(&self) -> f64 {
        match self.union() {
            0 => 1.0,
            u => self.intersection as f64 / u as f64,
        }
    }

    pub fn dice(&self) -> f64 {
        match self.target + self.prediction {
            0 => 1.0,
            s => 2.0 * self.intersection as f64 / s as f64,
        }
    }
}

pub fn overlap_counts(target: &BinaryMask, pred: &BinaryMask) -> Result<OverlapCounts> {
    ensure_same_dims(target.dims(), pred.dims())?;
    let mut c = OverlapCounts::default();
    for (&t, &p) in target.data().iter().zip(pred.data()) {
        let (t, p) = (t == FOREGROUND, p == FOREGROUND);
        c.target += usize::from(t);
        c.prediction += usize::from(p);
        c.intersection += usize::from(t && p);
    }
    Ok(c)
}

pub fn iou(target: &BinaryMask, pred: &BinaryMask) -> Result<f64> {
    overlap_counts(target, pred).map(|c| c.iou())
}

pub fn dice(target: &BinaryMask, pred: &BinaryMask) -> Result<f64> {
    overlap_counts(target, pred).map(|c| c.dice())
}
