//! Training-time augmentation and channel normalization.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{ensure_same_dims, BinaryMask, RasterImage};

pub const IMAGENET_MEANS: [f64; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STDS: [f64; 3] = [0.229, 0.224, 0.225];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub flip_prob: f64,
    /// Probability of each affine transform (rotation, zoom).
    pub affine_prob: f64,
    pub rotation_deg: (f64, f64),
    pub zoom: (f64, f64),
    /// Probability of each lighting transform (brightness, contrast).
    pub lighting_prob: f64,
    pub max_lighting: f64,
    pub means: [f64; 3],
    pub stds: [f64; 3],
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            flip_prob: 0.5,
            affine_prob: 0.2,
            rotation_deg: (-10.0, 10.0),
            zoom: (1.0, 1.1),
            lighting_prob: 0.75,
            max_lighting: 0.2,
            means: IMAGENET_MEANS,
            stds: IMAGENET_STDS,
        }
    }
}

impl AugmentConfig {
    /// A configuration that applies nothing.
    pub fn identity() -> Self {
        Self {
            flip_prob: 0.0,
            affine_prob: 0.0,
            lighting_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("flip_prob", self.flip_prob),
            ("affine_prob", self.affine_prob),
            ("lighting_prob", self.lighting_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.zoom.0 < 1.0 || self.zoom.1 < self.zoom.0 {
            return Err(Error::invalid(format!("zoom range must be >= 1 and ordered, got {:?}", self.zoom)));
        }
        if self.rotation_deg.1 < self.rotation_deg.0 {
            return Err(Error::invalid("rotation range must be ordered"));
        }
        if !(0.0..1.0).contains(&self.max_lighting) {
            return Err(Error::invalid("max_lighting must be in [0, 1)"));
        }
        Ok(())
    }
}

pub fn flip_horizontal(img: &RasterImage) -> RasterImage {
    let w = img.width();
    RasterImage::from_fn(w, img.height(), |x, y| img.pixel(w - 1 - x, y))
}

pub fn flip_mask_horizontal(mask: &BinaryMask) -> BinaryMask {
    let w = mask.width();
    BinaryMask::from_fn(w, mask.height(), |x, y| mask.is_set(w - 1 - x, y))
}

/// Inverse map from output pixel to source coordinates for a rotation by
/// `angle_deg` and a zoom by `scale`, both about the image center.
#[derive(Clone, Copy)]
struct InverseAffine {
    cx: f64,
    cy: f64,
    cos: f64,
    sin: f64,
    inv_scale: f64,
}

impl InverseAffine {
    fn new(w: usize, h: usize, angle_deg: f64, scale: f64) -> Self {
        let t = angle_deg.to_radians();
        Self {
            cx: (w as f64 - 1.0) / 2.0,
            cy: (h as f64 - 1.0) / 2.0,
            cos: t.cos(),
            sin: t.sin(),
            inv_scale: 1.0 / scale,
        }
    }

    fn source(&self, x: usize, y: usize) -> (f64, f64) {
        let dx = x as f64 - self.cx;
        let dy = y as f64 - self.cy;
        let sx = (self.cos * dx + self.sin * dy) * self.inv_scale;
        let sy = (-self.sin * dx + self.cos * dy) * self.inv_scale;
        (sx + self.cx, sy + self.cy)
    }
}

/// Rotate by `angle_deg` and zoom by `scale` about the center, keeping the
/// output size. Image samples are bilinear, mask samples nearest; both read
/// out-of-range coordinates from the nearest edge pixel.
pub fn affine_pair(img: &RasterImage, mask: &BinaryMask, angle_deg: f64, scale: f64) -> (RasterImage, BinaryMask) {
    let (w, h) = img.dims();
    let map = InverseAffine::new(w, h, angle_deg, scale);
    let (wf, hf) = ((w - 1) as f64, (h - 1) as f64);
    let out_img = RasterImage::from_fn(w, h, |x, y| {
        let (sx, sy) = map.source(x, y);
        let (sx, sy) = (sx.clamp(0.0, wf), sy.clamp(0.0, hf));
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
        let (a, b, c, d) = (img.pixel(x0, y0), img.pixel(x1, y0), img.pixel(x0, y1), img.pixel(x1, y1));
        let mut px = [0u8; 3];
        for ch in 0..3 {
            let top = f64::from(a[ch]) * (1.0 - fx) + f64::from(b[ch]) * fx;
            let bot = f64::from(c[ch]) * (1.0 - fx) + f64::from(d[ch]) * fx;
            px[ch] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
        }
        px
    });
    let out_mask = BinaryMask::from_fn(w, h, |x, y| {
        let (sx, sy) = map.source(x, y);
        let nx = sx.round().clamp(0.0, wf) as usize;
        let ny = sy.round().clamp(0.0, hf) as usize;
        mask.is_set(nx, ny)
    });
    (out_img, out_mask)
}

fn adjust_lighting(img: &RasterImage, brightness: f64, contrast: f64) -> RasterImage {
    let data = img
        .data()
        .iter()
        .map(|&v| ((f64::from(v) - 127.5) * contrast + 127.5 + brightness * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    RasterImage::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Apply the random augmentation set to an image/mask pair. Geometric
/// transforms hit both identically; lighting touches the image only.
pub fn augment<R: Rng + ?Sized>(
    img: &RasterImage,
    mask: &BinaryMask,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<(RasterImage, BinaryMask)> {
    ensure_same_dims(img.dims(), mask.dims())?;
    cfg.validate()?;
    let mut img = img.clone();
    let mut mask = mask.clone();

    if rng.gen_bool(cfg.flip_prob) {
        img = flip_horizontal(&img);
        mask = flip_mask_horizontal(&mask);
    }

    let angle = rng
        .gen_bool(cfg.affine_prob)
        .then(|| rng.gen_range(cfg.rotation_deg.0..=cfg.rotation_deg.1));
    let scale = rng
        .gen_bool(cfg.affine_prob)
        .then(|| rng.gen_range(cfg.zoom.0..=cfg.zoom.1));
    if angle.is_some() || scale.is_some() {
        (img, mask) = affine_pair(&img, &mask, angle.unwrap_or(0.0), scale.unwrap_or(1.0));
    }

    let l = cfg.max_lighting;
    let brightness = if rng.gen_bool(cfg.lighting_prob) { rng.gen_range(-l..=l) } else { 0.0 };
    let contrast = if rng.gen_bool(cfg.lighting_prob) { rng.gen_range(1.0 - l..=1.0 + l) } else { 1.0 };
    if brightness != 0.0 || contrast != 1.0 {
        img = adjust_lighting(&img, brightness, contrast);
    }
    Ok((img, mask))
}

/// Per-channel `(value / 255 - mean) / std` planes.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    pub width: usize,
    pub height: usize,
    pub planes: [Vec<f64>; 3],
}

pub fn normalize(img: &RasterImage, means: [f64; 3], stds: [f64; 3]) -> Result<NormalizedImage> {
    if stds.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::invalid(format!("normalization stds must be positive, got {stds:?}")));
    }
    let n = img.width() * img.height();
    let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for px in img.data().chunks_exact(3) {
        for c in 0..3 {
            planes[c].push(normalize_value(px[c], means[c], stds[c]));
        }
    }
    Ok(NormalizedImage {
        width: img.width(),
        height: img.height(),
        planes,
    })
}

#[inline]
pub(crate) fn normalize_value(v: u8, mean: f64, std: f64) -> f64 {
    (f64::from(v) / 255.0 - mean) / std
}
