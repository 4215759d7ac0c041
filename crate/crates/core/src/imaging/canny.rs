//! Canny edge detection on binary masks.

use std::collections::VecDeque;

use super::filter::{convolve_separable, gaussian_kernel};
use super::{BinaryMask, BACKGROUND, FOREGROUND};
use crate::error::{Error, Result};

pub const DEFAULT_CANNY_LOW: f64 = 50.0;
pub const DEFAULT_CANNY_HIGH: f64 = 150.0;

const SMOOTH_KERNEL: usize = 5;
const SMOOTH_SIGMA: f64 = 1.1;

// tan(22.5°) and tan(67.5°)
const TAN_22_5: f64 = 0.414_213_562_373_095_1;
const TAN_67_5: f64 = 2.414_213_562_373_095;

/// Gaussian smoothing, Sobel gradients, non-maximum suppression and
/// hysteresis on the gradient magnitude. Edge pixels are 255 in the result.
pub fn canny_edges(mask: &BinaryMask, low: f64, high: f64) -> Result<BinaryMask> {
    if !(low.is_finite() && high.is_finite()) || low < 0.0 || low > high {
        return Err(Error::invalid(format!(
            "canny thresholds must satisfy 0 <= low <= high, got low={low} high={high}"
        )));
    }
    let (w, h) = mask.dims();
    let taps = gaussian_kernel(SMOOTH_KERNEL, SMOOTH_SIGMA)?;
    let smooth = convolve_separable(&mask.to_gray(), &taps);

    let at = |x: isize, y: isize| -> f64 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        smooth[y * w + x]
    };

    let mut mag = vec![0.0f64; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            let (ax, ay) = (gx.abs(), gy.abs());
            dir[i] = if ay <= TAN_22_5 * ax {
                0
            } else if ay > TAN_67_5 * ax {
                2
            } else if (gx > 0.0) == (gy > 0.0) {
                1
            } else {
                3
            };
        }
    }

    let m = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // 0: weak/none, 1: candidate, 2: strong
    let mut class = vec![0u8; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let v = mag[i];
            if v <= low {
                continue;
            }
            // Ties along the gradient keep the lower-index pixel so a
            // symmetric ridge produces a single-pixel edge.
            let is_max = match dir[i] {
                0 => v > m(x - 1, y) && v >= m(x + 1, y),
                2 => v > m(x, y - 1) && v >= m(x, y + 1),
                1 => v > m(x - 1, y - 1) && v > m(x + 1, y + 1),
                _ => v > m(x + 1, y - 1) && v > m(x - 1, y + 1),
            };
            if !is_max {
                continue;
            }
            if v > high {
                class[i] = 2;
                queue.push_back((x, y));
            } else {
                class[i] = 1;
            }
        }
    }

    while let Some((x, y)) = queue.pop_front() {
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] == 1 {
                    class[j] = 2;
                    queue.push_back((nx, ny));
                }
            }
        }
    }

    let data = class
        .into_iter()
        .map(|c| if c == 2 { FOREGROUND } else { BACKGROUND })
        .collect();
    BinaryMask::new(w, h, data)
}
