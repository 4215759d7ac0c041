//! PNG reading/writing and atomic file output.

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayImage, ProbMap, RasterImage};

/// Write `bytes` to a temporary sibling of `path`, then rename over it.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes)
        .and_then(|_| file.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<DynamicImage> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_raster(path: &Path) -> Result<RasterImage> {
    let img = open(path)?.into_rgb8();
    let (w, h) = img.dimensions();
    RasterImage::new(w as usize, h as usize, img.into_raw())
}

pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let img = open(path)?.into_luma8();
    let (w, h) = img.dimensions();
    GrayImage::new(w as usize, h as usize, img.into_raw())
}

/// Reads a single-channel mask; any sample other than 0 or 255 is an error.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let gray = read_gray(path)?;
    let (w, h) = gray.dims();
    BinaryMask::new(w, h, gray.into_data()).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_probmap(path: &Path) -> Result<ProbMap> {
    Ok(ProbMap::from_gray(read_gray(path)?))
}

fn encode_png(width: usize, height: usize, data: &[u8], color: image::ExtendedColorType) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::new());
    image::write_buffer_with_format(
        &mut buf,
        data,
        width as u32,
        height as u32,
        color,
        ImageFormat::Png,
    )
    .expect("in-memory PNG encoding");
    buf.into_inner()
}

pub fn encode_raster_png(img: &RasterImage) -> Vec<u8> {
    encode_png(img.width(), img.height(), img.data(), image::ExtendedColorType::Rgb8)
}

pub fn encode_gray_png(img: &GrayImage) -> Vec<u8> {
    encode_png(img.width(), img.height(), img.data(), image::ExtendedColorType::L8)
}

pub fn write_raster(path: &Path, img: &RasterImage) -> Result<()> {
    atomic_write(path, &encode_raster_png(img))
}

pub fn write_gray(path: &Path, img: &GrayImage) -> Result<()> {
    atomic_write(path, &encode_gray_png(img))
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    atomic_write(
        path,
        &encode_png(mask.width(), mask.height(), mask.data(), image::ExtendedColorType::L8),
    )
}

pub fn write_probmap(path: &Path, pm: &ProbMap) -> Result<()> {
    write_gray(path, pm.as_gray())
}

/// Sorted file stems of `*.png` files in `dir`.
pub fn png_stems(dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut stems = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("png") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    Ok(stems)
}
