use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{FeatureMap, FEATURES};
use crate::error::{Error, Result};
use crate::imaging::{ensure_same_dims, BinaryMask, ProbMap, FOREGROUND};
use crate::io::atomic_write;

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BaselineWeights {
    pub w: [f64; FEATURES],
    pub b: f64,
}

#[derive(Serialize, Deserialize)]
struct WeightsDocument {
    format_version: u32,
    w: [f64; FEATURES],
    b: f64,
}

impl BaselineWeights {
    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|v| v.is_finite())
    }

    #[inline]
    pub fn logit(&self, x: &[f32]) -> f64 {
        self.w
            .iter()
            .zip(x)
            .fold(self.b, |acc, (w, &v)| acc + w * f64::from(v))
    }

    pub fn to_json(&self) -> String {
        let doc = WeightsDocument {
            format_version: WEIGHTS_FORMAT_VERSION,
            w: self.w,
            b: self.b,
        };
        serde_json::to_string_pretty(&doc).expect("weights serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: WeightsDocument = serde_json::from_str(text).map_err(|e| Error::from_json(&e))?;
        if doc.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "weights file",
                found: doc.format_version,
                expected: WEIGHTS_FORMAT_VERSION,
            });
        }
        let weights = Self { w: doc.w, b: doc.b };
        if !weights.is_finite() {
            return Err(Error::NonFinite("weights file"));
        }
        Ok(weights)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-pixel `round(255 * sigmoid(w . x + b))`.
pub fn predict(weights: &BaselineWeights, features: &FeatureMap) -> ProbMap {
    let data = features
        .iter()
        .map(|x| (255.0 * sigmoid(weights.logit(x))).round() as u8)
        .collect();
    ProbMap::new(features.width(), features.height(), data).expect("dimensions preserved")
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gradient {
    pub w: [f64; FEATURES],
    pub b: f64,
}

/// Mean binary cross-entropy over all pixels of all pairs, plus
/// `weight_decay / 2 * |w|^2`, and its exact gradient. Probabilities are
/// clamped to `[1e-7, 1 - 1e-7]`; clamped pixels contribute no gradient.
pub fn loss_and_grad_batch(
    weights: &BaselineWeights,
    batch: &[(&FeatureMap, &BinaryMask)],
    weight_decay: f64,
) -> Result<(f64, Gradient)> {
    let mut total = 0.0;
    let mut grad = Gradient::default();
    let mut pixels = 0usize;
    for (features, target) in batch {
        ensure_same_dims(features.dims(), target.dims())?;
        for (x, &t) in features.iter().zip(target.data()) {
            let y = if t == FOREGROUND { 1.0 } else { 0.0 };
            let p = sigmoid(weights.logit(x));
            let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            total -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
            if p == pc {
                let dz = p - y;
                for (g, &v) in grad.w.iter_mut().zip(x) {
                    *g += dz * f64::from(v);
                }
                grad.b += dz;
            }
        }
        pixels += features.len();
    }
    if pixels == 0 {
        return Err(Error::EmptyInput("loss over zero pixels".into()));
    }
    let n = pixels as f64;
    let decay: f64 = weights.w.iter().map(|w| w * w).sum::<f64>() * weight_decay / 2.0;
    let loss = total / n + decay;
    grad.b /= n;
    for (g, w) in grad.w.iter_mut().zip(&weights.w) {
        *g = *g / n + weight_decay * w;
    }
    if !loss.is_finite() || !grad.b.is_finite() || grad.w.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("baseline loss"));
    }
    Ok((loss, grad))
}

pub fn loss_and_grad(
    weights: &BaselineWeights,
    features: &FeatureMap,
    target: &BinaryMask,
    weight_decay: f64,
) -> Result<(f64, Gradient)> {
    loss_and_grad_batch(weights, &[(features, target)], weight_decay)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_pixel(x: [f64; FEATURES]) -> FeatureMap {
        FeatureMap::from_vectors(1, 1, &[x])
    }

    #[test]
    fn predict_quantization() {
        let f = one_pixel([0.5; FEATURES]);
        let zero = BaselineWeights::default();
        assert_eq!(predict(&zero, &f).data(), &[128]);
        let big = BaselineWeights { b: 1e6, ..zero };
        assert_eq!(predict(&big, &f).data(), &[255]);
        let ln3 = BaselineWeights { b: 3f64.ln(), ..zero };
        assert_eq!(predict(&ln3, &one_pixel([0.0; FEATURES])).data(), &[191]);
    }

    #[test]
    fn uniform_predictor_loss_is_ln2() {
        let f = FeatureMap::from_vectors(2, 1, &[[0.3; FEATURES], [-1.0; FEATURES]]);
        let t = BinaryMask::from_fn(2, 1, |x, _| x == 0);
        let (loss, _) = loss_and_grad(&BaselineWeights::default(), &f, &t, 0.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        let w = BaselineWeights { w: [0.0; FEATURES], b: 0.0 };
        let (with_decay, _) = loss_and_grad(&w, &f, &t, 1e-3).unwrap();
        assert!((with_decay - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_prediction_has_tiny_loss() {
        let f = FeatureMap::from_vectors(2, 1, &[[1.0; FEATURES], [-1.0; FEATURES]]);
        let t = BinaryMask::from_fn(2, 1, |x, _| x == 0);
        let w = BaselineWeights { w: [10.0; FEATURES], b: 0.0 };
        let (loss, _) = loss_and_grad(&w, &f, &t, 0.0).unwrap();
        assert!(loss < 1e-6, "{loss}");
    }

    #[test]
    fn non_finite_is_an_error() {
        let f = one_pixel([1.0; FEATURES]);
        let t = BinaryMask::full(1, 1);
        let w = BaselineWeights { w: [f64::NAN; FEATURES], b: 0.0 };
        assert!(matches!(loss_and_grad(&w, &f, &t, 0.0), Err(Error::NonFinite(_))));
        assert!(loss_and_grad(&BaselineWeights::default(), &f, &BinaryMask::full(2, 1), 0.0).is_err());
    }

    #[test]
    fn weights_file_round_trip() {
        let w = BaselineWeights {
            w: [0.1, -2.5, 1e-300, 3.0, 0.3, 1.0 / 3.0, -7.25, 0.0, 9.9],
            b: -0.123456789012345,
        };
        assert_eq!(BaselineWeights::from_json(&w.to_json()).unwrap(), w);
        assert!(BaselineWeights::from_json(r#"{"format_version":2,"w":[0,0,0,0,0,0,0,0,0],"b":0}"#).is_err());
    }
}
