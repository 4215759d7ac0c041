//! Pixel grids and the low-level operators the rest of the pipeline is built on.
//!
//! All grids are row-major 8-bit. [`RasterImage`] carries three interleaved
//! channels (R, G, B); the single-channel types differ only in what their
//! samples mean. [`BinaryMask`] guarantees every sample is `0` or `255`.

mod canny;
mod components;
mod filter;
mod morphology;

pub use canny::{canny_edges, DEFAULT_CANNY_HIGH, DEFAULT_CANNY_LOW};
pub use components::count_components;
pub use filter::{default_sigma, gaussian_blur, gaussian_kernel, threshold_binary, to_grayscale};
pub use morphology::{dilate, erode, open, Shape, StructuringElement};

use crate::error::{Error, Result};

pub const FOREGROUND: u8 = 255;
pub const BACKGROUND: u8 = 0;

fn check_dims(width: usize, height: usize, len: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if len != width * height * channels {
        return Err(Error::invalid(format!(
            "buffer length {len} does not match {width}x{height}x{channels}"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Three-channel RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 3)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Box-filter resize: each output pixel averages the source pixels its
    /// footprint covers (at least one).
    pub fn resize_box(&self, width: usize, height: usize) -> RasterImage {
        if (width, height) == self.dims() {
            return self.clone();
        }
        let (sw, sh) = (self.width, self.height);
        let span = |i: usize, n: usize, src: usize| {
            let lo = i * src / n;
            let hi = ((i + 1) * src / n).max(lo + 1).min(src);
            (lo.min(src - 1), hi)
        };
        RasterImage::from_fn(width, height, |x, y| {
            let (x0, x1) = span(x, width, sw);
            let (y0, y1) = span(y, height, sh);
            let mut acc = [0u32; 3];
            for sy in y0..y1 {
                for sx in x0..x1 {
                    let p = self.pixel(sx, sy);
                    for c in 0..3 {
                        acc[c] += u32::from(p[c]);
                    }
                }
            }
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            acc.map(|a| (f64::from(a) / n).round() as u8)
        })
    }

    /// Copy of the `w`x`h` window at (`x0`, `y0`), replicating edge pixels
    /// for any part that falls outside the image.
    pub fn crop_replicate(&self, x0: usize, y0: usize, w: usize, h: usize) -> RasterImage {
        RasterImage::from_fn(w, h, |x, y| {
            let sx = (x0 + x).min(self.width - 1);
            let sy = (y0 + y).min(self.height - 1);
            self.pixel(sx, sy)
        })
    }
}

macro_rules! single_channel {
    ($name:ident) => {
        impl $name {
            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.width, self.height)
            }

            pub fn data(&self) -> &[u8] {
                &self.data
            }

            pub fn into_data(self) -> Vec<u8> {
                self.data
            }

            pub fn get(&self, x: usize, y: usize) -> u8 {
                self.data[y * self.width + x]
            }

            /// Sample with coordinates clamped into the grid (edge replication).
            pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
                let x = x.clamp(0, self.width as isize - 1) as usize;
                let y = y.clamp(0, self.height as isize - 1) as usize;
                self.data[y * self.width + x]
            }
        }
    };
}

/// Single-channel 8-bit intensity image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

single_channel!(GrayImage);

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }
}

/// Foreground/background mask. Samples are exactly 0 or 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

single_channel!(BinaryMask);

impl BinaryMask {
    /// Validating constructor; rejects any sample other than 0 or 255.
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        if let Some(pos) = data.iter().position(|&v| v != FOREGROUND && v != BACKGROUND) {
            return Err(Error::invalid(format!(
                "binary mask sample {} at offset {pos} is neither 0 nor 255",
                data[pos]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![BACKGROUND; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![FOREGROUND; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(if f(x, y) { FOREGROUND } else { BACKGROUND });
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Build a mask from a boolean buffer.
    pub fn from_bools(width: usize, height: usize, bits: &[bool]) -> Result<Self> {
        check_dims(width, height, bits.len(), 1)?;
        Ok(Self {
            width,
            height,
            data: bits
                .iter()
                .map(|&b| if b { FOREGROUND } else { BACKGROUND })
                .collect(),
        })
    }

    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] == FOREGROUND
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = if on { FOREGROUND } else { BACKGROUND };
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v == FOREGROUND).count()
    }

    pub fn complement(&self) -> BinaryMask {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| FOREGROUND - v).collect(),
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.clone(),
        }
    }

    /// Nearest-neighbour resize.
    pub fn resize_nearest(&self, width: usize, height: usize) -> BinaryMask {
        let (sw, sh) = (self.width, self.height);
        BinaryMask::from_fn(width, height, |x, y| {
            let sx = ((x * 2 + 1) * sw / (width * 2)).min(sw - 1);
            let sy = ((y * 2 + 1) * sh / (height * 2)).min(sh - 1);
            self.is_set(sx, sy)
        })
    }
}

/// Per-pixel foreground probability, stored as `round(255 * p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbMap {
    gray: GrayImage,
}

impl ProbMap {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Ok(Self {
            gray: GrayImage::new(width, height, data)?,
        })
    }

    pub fn from_gray(gray: GrayImage) -> Self {
        Self { gray }
    }

    pub fn as_gray(&self) -> &GrayImage {
        &self.gray
    }

    pub fn into_gray(self) -> GrayImage {
        self.gray
    }

    pub fn width(&self) -> usize {
        self.gray.width
    }

    pub fn height(&self) -> usize {
        self.gray.height
    }

    pub fn dims(&self) -> (usize, usize) {
        self.gray.dims()
    }

    pub fn data(&self) -> &[u8] {
        &self.gray.data
    }
}
