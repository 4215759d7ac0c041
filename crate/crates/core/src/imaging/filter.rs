use super::{BinaryMask, GrayImage, RasterImage, BACKGROUND, FOREGROUND};
use crate::error::{Error, Result};

/// ITU-R 601 luma, rounded to the nearest integer.
pub fn to_grayscale(img: &RasterImage) -> GrayImage {
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Size-to-sigma rule used when no sigma is given: `0.3 * ((k - 1) / 2 - 1) + 0.8`.
pub fn default_sigma(kernel_size: usize) -> f64 {
    0.3 * ((kernel_size as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

fn validate_kernel(kernel_size: usize, sigma: f64) -> Result<()> {
    if kernel_size == 0 || kernel_size % 2 == 0 {
        return Err(Error::invalid(format!(
            "gaussian kernel size must be odd and >= 1, got {kernel_size}"
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    Ok(())
}

/// Normalized 1-D Gaussian taps of length `kernel_size`.
pub fn gaussian_kernel(kernel_size: usize, sigma: f64) -> Result<Vec<f64>> {
    validate_kernel(kernel_size, sigma)?;
    let r = (kernel_size / 2) as f64;
    let mut taps: Vec<f64> = (0..kernel_size)
        .map(|i| {
            let d = i as f64 - r;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Separable convolution with edge replication, returning unrounded values.
pub(crate) fn convolve_separable(img: &GrayImage, taps: &[f64]) -> Vec<f64> {
    let (w, h) = img.dims();
    let r = (taps.len() / 2) as isize;
    let src = img.data();

    let mut horiz = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut horiz[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let sx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                acc += t * f64::from(row[sx]);
            }
            *o = acc;
        }
    }

    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (k, &t) in taps.iter().enumerate() {
            let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            let row = &horiz[sy * w..(sy + 1) * w];
            for (d, &s) in dst.iter_mut().zip(row) {
                *d += t * s;
            }
        }
    }
    out
}

pub fn gaussian_blur(img: &GrayImage, kernel_size: usize, sigma: f64) -> Result<GrayImage> {
    let taps = gaussian_kernel(kernel_size, sigma)?;
    let data = convolve_separable(img, &taps)
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(img.width(), img.height(), data)
}

/// Strict binarization: samples above `t` become foreground.
pub fn threshold_binary(img: &GrayImage, t: u8) -> BinaryMask {
    let data = img
        .data()
        .iter()
        .map(|&v| if v > t { FOREGROUND } else { BACKGROUND })
        .collect();
    BinaryMask::new(img.width(), img.height(), data).expect("values are 0 or 255")
}
