//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use nucseg::annotations::{AnnotationSet, Polygon, Shape};
use nucseg::imaging::BinaryMask;
use rand::Rng;

pub fn random_mask<R: Rng>(rng: &mut R, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.gen_bool(density))
}

/// Blobby mask: a few random discs, so openings keep something.
pub fn random_blobs<R: Rng>(rng: &mut R, w: usize, h: usize) -> BinaryMask {
    let discs: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..6))
        .map(|_| {
            (
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.0..h as f64),
                rng.gen_range(1.0..12.0),
            )
        })
        .collect();
    BinaryMask::from_fn(w, h, |x, y| {
        discs
            .iter()
            .any(|&(cx, cy, r)| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r)
    })
}

/// Elliptical footprint straight from the ellipse equation.
pub fn ellipse_footprint(w: usize, h: usize) -> Vec<Vec<bool>> {
    let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
    let (rx, ry) = (cx.max(0.5), cy.max(0.5));
    (0..h)
        .map(|i| {
            (0..w)
                .map(|j| {
                    let (dx, dy) = ((j as f64 - cx) / rx, (i as f64 - cy) / ry);
                    dx * dx + dy * dy <= 1.0 + 1e-12
                })
                .collect()
        })
        .collect()
}

fn sliding(mask: &BinaryMask, fp: &[Vec<bool>], want_all: bool) -> BinaryMask {
    let (w, h) = mask.dims();
    let (ah, aw) = (fp.len() as isize / 2, fp[0].len() as isize / 2);
    BinaryMask::from_fn(w, h, |x, y| {
        let mut all = true;
        let mut any = false;
        for (i, row) in fp.iter().enumerate() {
            for (j, &on) in row.iter().enumerate() {
                if !on {
                    continue;
                }
                let sx = x as isize + j as isize - aw;
                let sy = y as isize + i as isize - ah;
                let v = mask.get_clamped(sx, sy) == 255;
                all &= v;
                any |= v;
            }
        }
        if want_all {
            all
        } else {
            any
        }
    })
}

/// Minimum over the footprint, edges replicated.
pub fn naive_erode(mask: &BinaryMask, fp: &[Vec<bool>]) -> BinaryMask {
    sliding(mask, fp, true)
}

/// Maximum over the reflected footprint (footprints here are symmetric).
pub fn naive_dilate(mask: &BinaryMask, fp: &[Vec<bool>]) -> BinaryMask {
    sliding(mask, fp, false)
}

pub fn naive_open(mask: &BinaryMask, fp: &[Vec<bool>]) -> BinaryMask {
    naive_dilate(&naive_erode(mask, fp), fp)
}

/// Classic crossing-number test.
pub fn point_in_polygon(px: f64, py: f64, v: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let mut j = v.len() - 1;
    for i in 0..v.len() {
        let (xi, yi) = v[i];
        let (xj, yj) = v[j];
        if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn brute_raster(w: usize, h: usize, polys: &[Vec<(f64, f64)>]) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| {
        polys
            .iter()
            .any(|p| point_in_polygon(x as f64 + 0.5, y as f64 + 0.5, p))
    })
}

pub fn annotation(w: usize, h: usize, polys: &[Vec<(f64, f64)>]) -> AnnotationSet {
    AnnotationSet {
        width: w,
        height: h,
        shapes: polys
            .iter()
            .map(|p| Shape {
                label: "nucleus".into(),
                polygon: Polygon::new(p.clone()).unwrap(),
            })
            .collect(),
    }
}

/// Random (possibly self-intersecting) polygon, partly outside a `size` square.
pub fn random_polygon<R: Rng>(rng: &mut R, size: f64) -> Vec<(f64, f64)> {
    let n = rng.gen_range(3..12);
    (0..n)
        .map(|_| (rng.gen_range(-8.0..size + 8.0), rng.gen_range(-8.0..size + 8.0)))
        .collect()
}

pub fn circle(cx: f64, cy: f64, r: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (cx + r * t.cos(), cy + r * t.sin())
        })
        .collect()
}

/// (|a|, |b|, |a and b|) by looping over coordinates.
pub fn brute_counts(a: &BinaryMask, b: &BinaryMask) -> (usize, usize, usize) {
    let (mut na, mut nb, mut both) = (0, 0, 0);
    for y in 0..a.height() {
        for x in 0..a.width() {
            let (p, q) = (a.get(x, y) == 255, b.get(x, y) == 255);
            na += p as usize;
            nb += q as usize;
            both += (p && q) as usize;
        }
    }
    (na, nb, both)
}

pub fn brute_iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let (na, nb, both) = brute_counts(a, b);
    let union = na + nb - both;
    if union == 0 {
        1.0
    } else {
        both as f64 / union as f64
    }
}

pub fn brute_dice(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let (na, nb, both) = brute_counts(a, b);
    if na + nb == 0 {
        1.0
    } else {
        2.0 * both as f64 / (na + nb) as f64
    }
}
