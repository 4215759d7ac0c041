//! Binary erosion, dilation and opening with arbitrary structuring elements.
//!
//! Out-of-bounds neighbours take the value of the nearest edge pixel. Each
//! footprint row is decomposed into horizontal runs and evaluated against
//! per-row prefix counts, so the cost per pixel is proportional to the number
//! of runs rather than the number of footprint cells.

use serde::{Deserialize, Serialize};

use super::{BinaryMask, BACKGROUND, FOREGROUND};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Square,
    Ellipse,
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Shape::Square),
            "ellipse" => Ok(Shape::Ellipse),
            other => Err(Error::invalid(format!("unknown kernel shape {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    width: usize,
    height: usize,
    shape: Shape,
    footprint: Vec<bool>,
}

impl StructuringElement {
    pub fn new(shape: Shape, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 == 0 || height % 2 == 0 {
            return Err(Error::invalid(format!(
                "structuring element dimensions must be odd, got {width}x{height}"
            )));
        }
        let footprint = match shape {
            Shape::Square => vec![true; width * height],
            Shape::Ellipse => {
                // ((dx/rx)^2 + (dy/ry)^2 <= 1), cross-multiplied so it is exact
                // for the integer and half-integer radii that occur here.
                let cx = (width - 1) as f64 / 2.0;
                let cy = (height - 1) as f64 / 2.0;
                let rx = cx.max(0.5);
                let ry = cy.max(0.5);
                let (rx2, ry2) = (rx * rx, ry * ry);
                let mut cells = Vec::with_capacity(width * height);
                for i in 0..height {
                    for j in 0..width {
                        let dx = j as f64 - cx;
                        let dy = i as f64 - cy;
                        cells.push(dx * dx * ry2 + dy * dy * rx2 <= rx2 * ry2);
                    }
                }
                cells
            }
        };
        Ok(Self {
            width,
            height,
            shape,
            footprint,
        })
    }

    pub fn ellipse(width: usize, height: usize) -> Result<Self> {
        Self::new(Shape::Ellipse, width, height)
    }

    pub fn square(width: usize, height: usize) -> Result<Self> {
        Self::new(Shape::Square, width, height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        self.footprint[row * self.width + col]
    }

    pub fn cell_count(&self) -> usize {
        self.footprint.iter().filter(|&&c| c).count()
    }

    /// Footprint cells as (dx, dy) offsets from the center.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let cx = (self.width / 2) as isize;
        let cy = (self.height / 2) as isize;
        self.footprint.iter().enumerate().filter_map(move |(i, &on)| {
            on.then(|| ((i % self.width) as isize - cx, (i / self.width) as isize - cy))
        })
    }

    fn runs(&self) -> Vec<Run> {
        let cx = (self.width / 2) as isize;
        let cy = (self.height / 2) as isize;
        let mut runs = Vec::new();
        for row in 0..self.height {
            let mut col = 0;
            while col < self.width {
                if !self.contains(col, row) {
                    col += 1;
                    continue;
                }
                let start = col;
                while col < self.width && self.contains(col, row) {
                    col += 1;
                }
                runs.push(Run {
                    dy: row as isize - cy,
                    dx0: start as isize - cx,
                    dx1: col as isize - 1 - cx,
                });
            }
        }
        runs
    }
}

#[derive(Debug, Clone, Copy)]
struct Run {
    dy: isize,
    dx0: isize,
    dx1: isize,
}

/// Per-row counts of foreground pixels: `counts[y * (w + 1) + x]` is the number
/// of foreground pixels in `row[0..x]`.
fn row_prefix_counts(mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = mask.dims();
    let mut counts = vec![0u32; h * (w + 1)];
    for y in 0..h {
        let row = &mask.data()[y * w..(y + 1) * w];
        let base = y * (w + 1);
        for (x, &v) in row.iter().enumerate() {
            counts[base + x + 1] = counts[base + x] + u32::from(v == FOREGROUND);
        }
    }
    counts
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Erode,
    Dilate,
}

fn apply(mask: &BinaryMask, se: &StructuringElement, mode: Mode) -> BinaryMask {
    let (w, h) = mask.dims();
    let counts = row_prefix_counts(mask);
    let runs = se.runs();
    let (wi, hi) = (w as isize, h as isize);
    let mut out = vec![BACKGROUND; w * h];

    for y in 0..hi {
        for x in 0..wi {
            let hit = runs.iter().any(|run| {
                let sy = (y + run.dy).clamp(0, hi - 1) as usize;
                // Clamping both ends is exactly edge replication: clamped
                // samples are duplicates of pixels already inside the window.
                let l = (x + run.dx0).clamp(0, wi - 1) as usize;
                let r = (x + run.dx1).clamp(0, wi - 1) as usize;
                let base = sy * (w + 1);
                let fg = counts[base + r + 1] - counts[base + l];
                match mode {
                    Mode::Erode => fg as usize != r - l + 1,
                    Mode::Dilate => fg > 0,
                }
            });
            let on = match mode {
                Mode::Erode => !hit,
                Mode::Dilate => hit,
            };
            if on {
                out[y as usize * w + x as usize] = FOREGROUND;
            }
        }
    }
    BinaryMask::new(w, h, out).expect("values are 0 or 255")
}

pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    apply(mask, se, Mode::Erode)
}

pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    apply(mask, se, Mode::Dilate)
}

/// Erosion followed by dilation with the same element.
pub fn open(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(mask, se), se)
}
