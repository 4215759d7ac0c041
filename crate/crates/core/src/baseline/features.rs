use crate::dataset::{normalize_value, IMAGENET_MEANS, IMAGENET_STDS};
use crate::imaging::RasterImage;

pub const FEATURES: usize = 9;
const WINDOW: usize = 5;
const HALF: usize = WINDOW / 2;
const CELLS: u64 = (WINDOW * WINDOW) as u64;

/// Nine features per pixel: the three normalized channel values, their 5x5
/// local means, and their 5x5 local (population) standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn from_vectors(width: usize, height: usize, vectors: &[[f64; FEATURES]]) -> Self {
        assert_eq!(vectors.len(), width * height);
        Self {
            width,
            height,
            data: vectors.iter().flat_map(|v| v.iter().map(|&x| x as f32)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel(&self, i: usize) -> &[f32] {
        &self.data[i * FEATURES..(i + 1) * FEATURES]
    }

    pub fn at(&self, x: usize, y: usize) -> &[f32] {
        self.pixel(y * self.width + x)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(FEATURES)
    }
}

pub fn extract_features(img: &RasterImage) -> FeatureMap {
    extract_features_with(img, IMAGENET_MEANS, IMAGENET_STDS)
}

/// Window statistics use exact integer sums over an edge-replicated border,
/// so a constant image yields zero spread and means equal to the pixel value.
pub fn extract_features_with(img: &RasterImage, means: [f64; 3], stds: [f64; 3]) -> FeatureMap {
    let (w, h) = img.dims();
    let (pw, ph) = (w + 2 * HALF, h + 2 * HALF);
    let stride = pw + 1;

    // integral images of values and squared values on the padded grid, per channel
    let mut sums = vec![[0u64; 3]; stride * (ph + 1)];
    let mut sqs = vec![[0u64; 3]; stride * (ph + 1)];
    for py in 0..ph {
        let sy = py.saturating_sub(HALF).min(h - 1);
        let mut row_sum = [0u64; 3];
        let mut row_sq = [0u64; 3];
        for px in 0..pw {
            let sx = px.saturating_sub(HALF).min(w - 1);
            let p = img.pixel(sx, sy);
            let i = (py + 1) * stride + px + 1;
            let up = py * stride + px + 1;
            for c in 0..3 {
                let v = u64::from(p[c]);
                row_sum[c] += v;
                row_sq[c] += v * v;
                sums[i][c] = sums[up][c] + row_sum[c];
                sqs[i][c] = sqs[up][c] + row_sq[c];
            }
        }
    }
    let rect = |table: &[[u64; 3]], x: usize, y: usize, c: usize| -> u64 {
        // window over padded [x, x + WINDOW) x [y, y + WINDOW)
        let (x1, y1) = (x + WINDOW, y + WINDOW);
        table[y1 * stride + x1][c] + table[y * stride + x][c] - table[y * stride + x1][c] - table[y1 * stride + x][c]
    };

    let mut data = Vec::with_capacity(w * h * FEATURES);
    for y in 0..h {
        for x in 0..w {
            let p = img.pixel(x, y);
            let mut f = [0.0f64; FEATURES];
            for c in 0..3 {
                let s = rect(&sums, x, y, c);
                let q = rect(&sqs, x, y, c);
                let mean_raw = s as f64 / CELLS as f64;
                let var_raw = (CELLS * q - s * s) as f64 / (CELLS * CELLS) as f64;
                f[c] = normalize_value(p[c], means[c], stds[c]);
                f[3 + c] = (mean_raw / 255.0 - means[c]) / stds[c];
                f[6 + c] = var_raw.sqrt() / 255.0 / stds[c];
            }
            data.extend(f.iter().map(|&v| v as f32));
        }
    }
    FeatureMap {
        width: w,
        height: h,
        data,
    }
}
