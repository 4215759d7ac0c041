//! Dataset splitting, augmentation, normalization, synthetic samples and the
//! on-disk layout (`images/<id>.png`, `masks/<id>.png`, `split.json`).

mod augment;
mod split;
mod synth;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use augment::{
    affine_pair, augment, flip_horizontal, flip_mask_horizontal, normalize, AugmentConfig, NormalizedImage,
    IMAGENET_MEANS, IMAGENET_STDS,
};
pub(crate) use augment::normalize_value;
pub use split::{split, split_sizes, split_with_ratios, DatasetSplit, DEFAULT_RATIOS};
pub use synth::{synth_sample, SynthParams};

use crate::error::{Error, Result};
use crate::imaging::{ensure_same_dims, BinaryMask, RasterImage};
use crate::io;

pub const SPLIT_FILE: &str = "split.json";

/// Independent generator for sample `index` under `seed`: a ChaCha8 stream
/// per index, so results do not depend on how work is scheduled.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Paths of a dataset directory.
#[derive(Debug, Clone)]
pub struct DatasetLayout {
    root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn images_dir(&self) -> PathBuf {
        self.root.join("images")
    }

    pub fn masks_dir(&self) -> PathBuf {
        self.root.join("masks")
    }

    pub fn split_path(&self) -> PathBuf {
        self.root.join(SPLIT_FILE)
    }

    pub fn image_path(&self, id: &str) -> PathBuf {
        self.images_dir().join(format!("{id}.png"))
    }

    pub fn mask_path(&self, id: &str) -> PathBuf {
        self.masks_dir().join(format!("{id}.png"))
    }

    /// Sample ids: stems of `images/*.png`, each of which must have a mask.
    pub fn ids(&self) -> Result<Vec<String>> {
        let images = self.images_dir();
        if !images.is_dir() {
            return Err(Error::MissingInput(images));
        }
        let ids = io::png_stems(&images)?;
        for id in &ids {
            let m = self.mask_path(id);
            if !m.exists() {
                return Err(Error::MissingInput(m));
            }
        }
        Ok(ids)
    }

    pub fn load_image(&self, id: &str) -> Result<RasterImage> {
        io::read_raster(&self.image_path(id))
    }

    pub fn load_mask(&self, id: &str) -> Result<BinaryMask> {
        io::read_mask(&self.mask_path(id))
    }

    pub fn load_pair(&self, id: &str) -> Result<(RasterImage, BinaryMask)> {
        let img = self.load_image(id)?;
        let mask = self.load_mask(id)?;
        ensure_same_dims(img.dims(), mask.dims())?;
        Ok((img, mask))
    }

    pub fn load_split(&self) -> Result<DatasetSplit> {
        let p = self.split_path();
        if !p.exists() {
            return Err(Error::MissingInput(p));
        }
        DatasetSplit::load(&p)
    }
}

pub fn synthetic_id(index: usize) -> String {
    format!("synth_{index:04}")
}

/// Write `count` synthetic samples into `layout`; returns their ids.
pub fn write_synthetic_dataset(
    layout: &DatasetLayout,
    count: usize,
    seed: u64,
    params: &SynthParams,
) -> Result<Vec<String>> {
    if params.width < 64 || params.height < 64 {
        return Err(Error::invalid(format!(
            "synthetic samples must be at least 64x64, got {}x{}",
            params.width, params.height
        )));
    }
    let (lo, hi) = params.radius;
    if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
        return Err(Error::invalid(format!("nucleus radius range must satisfy 0 < lo <= hi <= 0.5, got {lo}..{hi}")));
    }
    let ids: Vec<String> = (0..count).map(synthetic_id).collect();
    ids.par_iter().enumerate().try_for_each(|(i, id)| {
        let (img, mask) = synth_sample(&mut sample_rng(seed, i as u64), params);
        io::write_raster(&layout.image_path(id), &img)?;
        io::write_mask(&layout.mask_path(id), &mask)
    })?;
    Ok(ids)
}

/// Split the ids found in `layout` and write `split.json`.
pub fn split_dataset(layout: &DatasetLayout, seed: u64, ratios: (f64, f64, f64)) -> Result<DatasetSplit> {
    let ids = layout.ids()?;
    let s = split_with_ratios(&ids, seed, ratios)?;
    s.save(&layout.split_path())?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_dataset_layout() {
        let dir = tempfile::tempdir().unwrap();
        let layout = DatasetLayout::new(dir.path());
        let params = SynthParams {
            width: 64,
            height: 64,
            nuclei: (1, 3),
            ..SynthParams::default()
        };
        let ids = write_synthetic_dataset(&layout, 5, 3, &params).unwrap();
        assert_eq!(layout.ids().unwrap(), ids);
        let s = split_dataset(&layout, 3, DEFAULT_RATIOS).unwrap();
        assert_eq!(layout.load_split().unwrap(), s);
        let (img, mask) = layout.load_pair(&ids[0]).unwrap();
        assert_eq!((img.dims(), mask.dims()), ((64, 64), (64, 64)));
        assert!(write_synthetic_dataset(&layout, 1, 3, &SynthParams { width: 32, ..params }).is_err());
    }

    #[test]
    fn sample_streams_differ() {
        use rand::RngCore;
        assert_ne!(sample_rng(1, 0).next_u64(), sample_rng(1, 1).next_u64());
        assert_eq!(sample_rng(1, 4).next_u64(), sample_rng(1, 4).next_u64());
    }
}
