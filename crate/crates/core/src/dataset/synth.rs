//! Synthetic Feulgen-like patches: pale pink background, dark magenta nuclei.

use rand::Rng;

use crate::imaging::{gaussian_kernel, BinaryMask, RasterImage};

const BACKGROUND_RGB: [f64; 3] = [236.0, 214.0, 226.0];
const NUCLEUS_RGB: [f64; 3] = [122.0, 42.0, 112.0];
const NOISE: i32 = 6;
const BLURRED_FRACTION: f64 = 0.3;
const RADIUS_LO: f64 = 0.05;
const RADIUS_HI: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Inclusive range for the number of nuclei drawn.
    pub nuclei: (usize, usize),
    /// Semi-axis range as a fraction of the shorter image side.
    pub radius: (f64, f64),
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 400,
            height: 300,
            nuclei: (4, 10),
            radius: (RADIUS_LO, RADIUS_HI),
        }
    }
}

struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    cos: f64,
    sin: f64,
}

impl Ellipse {
    fn contains(&self, px: f64, py: f64) -> bool {
        let (dx, dy) = (px - self.cx, py - self.cy);
        let u = (self.cos * dx + self.sin * dy) / self.a;
        let v = (-self.sin * dx + self.cos * dy) / self.b;
        u * u + v * v <= 1.0
    }

    fn bbox(&self, w: usize, h: usize, pad: f64) -> (usize, usize, usize, usize) {
        let r = self.a.max(self.b) + pad;
        let x0 = (self.cx - r).floor().max(0.0) as usize;
        let y0 = (self.cy - r).floor().max(0.0) as usize;
        let x1 = ((self.cx + r).ceil() as usize + 1).min(w);
        let y1 = ((self.cy + r).ceil() as usize + 1).min(h);
        (x0, y0, x1, y1)
    }
}

/// Blur a small alpha window in place (separable, zero outside the window).
fn blur_window(alpha: &mut [f64], w: usize, h: usize, taps: &[f64]) {
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sx = x as isize + k as isize - r;
                if (0..w as isize).contains(&sx) {
                    acc += t * alpha[y * w + sx as usize];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sy = y as isize + k as isize - r;
                if (0..h as isize).contains(&sy) {
                    acc += t * tmp[sy as usize * w + x];
                }
            }
            alpha[y * w + x] = acc;
        }
    }
}

/// Generate one image/mask pair. The mask is the exact union of the drawn
/// ellipses (pixel-center sampling); some nuclei are rendered out of focus.
pub fn synth_sample<R: Rng + ?Sized>(rng: &mut R, params: &SynthParams) -> (RasterImage, BinaryMask) {
    let (w, h) = (params.width, params.height);
    let (lo, hi) = params.nuclei;
    let count = if hi > lo { rng.gen_range(lo..=hi) } else { lo };

    let short = w.min(h) as f64;
    let (r_lo, r_hi) = (short * params.radius.0, short * params.radius.1);
    let blur_taps = gaussian_kernel(7, 1.5).expect("valid kernel");

    let mut alpha = vec![0.0f64; w * h];
    let mut inside = vec![false; w * h];
    let mut shade = vec![1.0f64; w * h];

    for _ in 0..count {
        let a = rng.gen_range(r_lo..=r_hi);
        let b = rng.gen_range(r_lo..=r_hi);
        let t = rng.gen_range(0.0..std::f64::consts::PI);
        let e = Ellipse {
            cx: rng.gen_range(0.0..w as f64),
            cy: rng.gen_range(0.0..h as f64),
            a,
            b,
            cos: t.cos(),
            sin: t.sin(),
        };
        let blurred = rng.gen_bool(BLURRED_FRACTION);
        // DNA content varies between nuclei, so does stain intensity
        let intensity = rng.gen_range(0.85..1.15);

        let (x0, y0, x1, y1) = e.bbox(w, h, 5.0);
        let (bw, bh) = (x1 - x0, y1 - y0);
        let mut local = vec![0.0f64; bw * bh];
        let mut local_in = vec![false; bw * bh];
        for y in 0..bh {
            for x in 0..bw {
                let on = e.contains((x0 + x) as f64 + 0.5, (y0 + y) as f64 + 0.5);
                local_in[y * bw + x] = on;
                local[y * bw + x] = if on { 1.0 } else { 0.0 };
            }
        }
        if blurred {
            blur_window(&mut local, bw, bh, &blur_taps);
        }
        for y in 0..bh {
            for x in 0..bw {
                let li = y * bw + x;
                let gi = (y0 + y) * w + x0 + x;
                let mut al = local[li];
                if local_in[li] {
                    al = al.max(0.5);
                    inside[gi] = true;
                }
                if al > alpha[gi] {
                    alpha[gi] = al;
                    shade[gi] = intensity;
                }
            }
        }
    }

    let mut img = RasterImage::filled(w, h, [0, 0, 0]);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let al = alpha[i];
            let mut px = [0u8; 3];
            for c in 0..3 {
                let nuc = (NUCLEUS_RGB[c] * shade[i]).min(255.0);
                let v = BACKGROUND_RGB[c] * (1.0 - al) + nuc * al + f64::from(rng.gen_range(-NOISE..=NOISE));
                px[c] = v.round().clamp(0.0, 255.0) as u8;
            }
            img.set_pixel(x, y, px);
        }
    }
    let mask = BinaryMask::from_bools(w, h, &inside).expect("dimensions match");
    (img, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{count_components, to_grayscale};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize) -> SynthParams {
        SynthParams {
            width: 160,
            height: 120,
            nuclei: (n, n),
            ..SynthParams::default()
        }
    }

    #[test]
    fn no_nuclei_means_empty_mask() {
        let (_, mask) = synth_sample(&mut ChaCha8Rng::seed_from_u64(1), &params(0));
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn component_count_bounded_by_nuclei() {
        for seed in 0..20 {
            let (_, mask) = synth_sample(&mut ChaCha8Rng::seed_from_u64(seed), &params(5));
            let c = count_components(&mask);
            assert!((1..=5).contains(&c), "seed {seed}: {c} components");
        }
    }

    #[test]
    fn deterministic() {
        let a = synth_sample(&mut ChaCha8Rng::seed_from_u64(9), &params(6));
        let b = synth_sample(&mut ChaCha8Rng::seed_from_u64(9), &params(6));
        assert_eq!(a, b);
    }

    #[test]
    fn foreground_darker_than_background_mean() {
        for seed in 0..20 {
            let (img, mask) = synth_sample(&mut ChaCha8Rng::seed_from_u64(seed), &SynthParams::default());
            let gray = to_grayscale(&img);
            let bg: Vec<f64> = gray
                .data()
                .iter()
                .zip(mask.data())
                .filter(|(_, &m)| m == 0)
                .map(|(&g, _)| f64::from(g))
                .collect();
            let bg_mean = bg.iter().sum::<f64>() / bg.len() as f64;
            for (&g, &m) in gray.data().iter().zip(mask.data()) {
                if m == 255 {
                    assert!(f64::from(g) < bg_mean, "seed {seed}: {g} vs {bg_mean}");
                }
            }
        }
    }
}
