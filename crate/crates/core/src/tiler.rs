//! Fixed-size, non-overlapping tiling of large slide rasters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::RasterImage;

pub const DEFAULT_TILE_WIDTH: usize = 1600;
pub const DEFAULT_TILE_HEIGHT: usize = 1200;

/// What to do with the strip left over when the source is not a multiple of the tile size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgePolicy {
    #[default]
    DiscardPartial,
    PadReplicate,
}

impl FromStr for EdgePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discard" | "discard-partial" => Ok(EdgePolicy::DiscardPartial),
            "pad" | "pad-replicate" => Ok(EdgePolicy::PadReplicate),
            other => Err(Error::invalid(format!("unknown tile policy {other:?}"))),
        }
    }
}

impl fmt::Display for EdgePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgePolicy::DiscardPartial => "discard-partial",
            EdgePolicy::PadReplicate => "pad-replicate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGrid {
    pub src_width: usize,
    pub src_height: usize,
    pub tile_width: usize,
    pub tile_height: usize,
    pub rows: usize,
    pub cols: usize,
    pub policy: EdgePolicy,
}

impl TileGrid {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Top-left corner of tile (`row`, `col`) in source coordinates.
    pub fn origin(&self, row: usize, col: usize) -> (usize, usize) {
        (col * self.tile_width, row * self.tile_height)
    }
}

pub fn plan_tiles(
    src_width: usize,
    src_height: usize,
    tile_width: usize,
    tile_height: usize,
    policy: EdgePolicy,
) -> Result<TileGrid> {
    if tile_width == 0 || tile_height == 0 {
        return Err(Error::invalid(format!(
            "tile dimensions must be positive, got {tile_width}x{tile_height}"
        )));
    }
    let (rows, cols) = match policy {
        EdgePolicy::DiscardPartial => (src_height / tile_height, src_width / tile_width),
        EdgePolicy::PadReplicate => (
            src_height.div_ceil(tile_height),
            src_width.div_ceil(tile_width),
        ),
    };
    Ok(TileGrid {
        src_width,
        src_height,
        tile_width,
        tile_height,
        rows,
        cols,
        policy,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
    pub x0: usize,
    pub y0: usize,
    pub image: RasterImage,
}

impl Tile {
    pub fn name(&self) -> String {
        tile_name(self.row, self.col)
    }
}

pub fn tile_name(row: usize, col: usize) -> String {
    format!("row{row}_col{col}")
}

/// Cut `img` into the tiles described by `grid`, in row-major order.
pub fn extract_tiles(img: &RasterImage, grid: &TileGrid) -> Result<Vec<Tile>> {
    if img.dims() != (grid.src_width, grid.src_height) {
        return Err(Error::DimensionMismatch {
            expected: (grid.src_width, grid.src_height),
            actual: img.dims(),
        });
    }
    let mut tiles = Vec::with_capacity(grid.len());
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            let (x0, y0) = grid.origin(row, col);
            tiles.push(Tile {
                row,
                col,
                x0,
                y0,
                image: img.crop_replicate(x0, y0, grid.tile_width, grid.tile_height),
            });
        }
    }
    Ok(tiles)
}

/// One manifest line per tile: `filename,row,col,x0,y0`.
pub fn manifest(tiles: &[Tile], extension: &str) -> String {
    tiles
        .iter()
        .map(|t| format!("{}.{extension},{},{},{},{}\n", t.name(), t.row, t.col, t.x0, t.y0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(sw: usize, sh: usize, tw: usize, th: usize, p: EdgePolicy) -> usize {
        plan_tiles(sw, sh, tw, th, p).unwrap().len()
    }

    #[test]
    fn plan_examples() {
        use EdgePolicy::*;
        assert_eq!(count(3200, 2400, 1600, 1200, DiscardPartial), 4);
        assert_eq!(count(1600, 1200, 1600, 1200, DiscardPartial), 1);
        assert_eq!(count(1700, 1200, 1600, 1200, DiscardPartial), 1);
        assert_eq!(count(1700, 1200, 1600, 1200, PadReplicate), 2);
        assert!(plan_tiles(10, 10, 0, 5, DiscardPartial).is_err());
    }

    #[test]
    fn single_tile_is_identity() {
        let img = RasterImage::from_fn(8, 6, |x, y| [x as u8, y as u8, 7]);
        let grid = plan_tiles(8, 6, 8, 6, EdgePolicy::DiscardPartial).unwrap();
        let tiles = extract_tiles(&img, &grid).unwrap();
        assert_eq!(tiles.len(), 1);
        assert_eq!(tiles[0].image, img);
        assert_eq!(tiles[0].name(), "row0_col0");
    }

    #[test]
    fn pad_replicates_last_column() {
        let img = RasterImage::from_fn(5, 4, |x, y| [x as u8 * 10, y as u8, 1]);
        let grid = plan_tiles(5, 4, 3, 4, EdgePolicy::PadReplicate).unwrap();
        let tiles = extract_tiles(&img, &grid).unwrap();
        assert_eq!(tiles.len(), 2);
        let edge = &tiles[1].image;
        for y in 0..4 {
            assert_eq!(edge.pixel(1, y), img.pixel(4, y));
            assert_eq!(edge.pixel(2, y), img.pixel(4, y));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let img = RasterImage::filled(4, 4, [0, 0, 0]);
        let grid = plan_tiles(8, 4, 4, 4, EdgePolicy::DiscardPartial).unwrap();
        assert!(extract_tiles(&img, &grid).is_err());
    }

    #[test]
    fn manifest_lines() {
        let img = RasterImage::filled(4, 2, [0, 0, 0]);
        let grid = plan_tiles(4, 2, 2, 2, EdgePolicy::DiscardPartial).unwrap();
        let text = manifest(&extract_tiles(&img, &grid).unwrap(), "png");
        assert_eq!(text, "row0_col0.png,0,0,0,0\nrow0_col1.png,0,1,2,0\n");
    }
}
