use crate::error::Result;
use crate::imaging::{canny_edges, ensure_same_dims, BinaryMask, RasterImage, DEFAULT_CANNY_HIGH, DEFAULT_CANNY_LOW};

pub const GREEN: [u8; 3] = [0, 255, 0];
pub const BLUE: [u8; 3] = [0, 0, 255];

/// Paint the Canny edges of `mask` onto a copy of `img` in green.
pub fn overlay_edges(img: &RasterImage, mask: &BinaryMask) -> Result<RasterImage> {
    ensure_same_dims(img.dims(), mask.dims())?;
    let edges = canny_edges(mask, DEFAULT_CANNY_LOW, DEFAULT_CANNY_HIGH)?;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if edges.is_set(x, y) {
                out.set_pixel(x, y, GREEN);
            }
        }
    }
    Ok(out)
}

/// Intersection in green, the rest of the union in blue.
pub fn overlay_iou(img: &RasterImage, target: &BinaryMask, pred: &BinaryMask) -> Result<RasterImage> {
    ensure_same_dims(img.dims(), target.dims())?;
    ensure_same_dims(img.dims(), pred.dims())?;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            match (target.is_set(x, y), pred.is_set(x, y)) {
                (true, true) => out.set_pixel(x, y, GREEN),
                (true, false) | (false, true) => out.set_pixel(x, y, BLUE),
                _ => {}
            }
        }
    }
    Ok(out)
}
