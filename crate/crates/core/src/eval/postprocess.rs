use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{erode, gaussian_blur, open, threshold_binary, BinaryMask, ProbMap, Shape, StructuringElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub shape: Shape,
    pub width: usize,
    pub height: usize,
}

impl ElementSpec {
    pub fn ellipse(width: usize, height: usize) -> Self {
        Self {
            shape: Shape::Ellipse,
            width,
            height,
        }
    }

    pub fn build(&self) -> Result<StructuringElement> {
        StructuringElement::new(self.shape, self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub threshold: u8,
    pub erode: ElementSpec,
    pub open: ElementSpec,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            blur_kernel: 5,
            blur_sigma: 1.1,
            threshold: 230,
            erode: ElementSpec::ellipse(3, 3),
            open: ElementSpec::ellipse(15, 15),
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blur_kernel == 0 || self.blur_kernel % 2 == 0 {
            return Err(Error::invalid(format!(
                "blur kernel must be odd and positive, got {}",
                self.blur_kernel
            )));
        }
        if !(self.blur_sigma.is_finite() && self.blur_sigma > 0.0) {
            return Err(Error::invalid(format!("blur sigma must be positive, got {}", self.blur_sigma)));
        }
        self.erode.build()?;
        self.open.build()?;
        Ok(())
    }
}

/// Structuring elements built once and reused across images.
#[derive(Debug, Clone)]
pub struct Postprocessor {
    cfg: PostprocessConfig,
    erode: StructuringElement,
    open: StructuringElement,
}

impl Postprocessor {
    pub fn new(cfg: &PostprocessConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            erode: cfg.erode.build()?,
            open: cfg.open.build()?,
        })
    }

    /// blur, threshold, erode, open.
    pub fn apply(&self, pm: &ProbMap) -> Result<BinaryMask> {
        let blurred = gaussian_blur(pm.as_gray(), self.cfg.blur_kernel, self.cfg.blur_sigma)?;
        let mask = threshold_binary(&blurred, self.cfg.threshold);
        let mask = erode(&mask, &self.erode);
        Ok(open(&mask, &self.open))
    }
}

pub fn postprocess(pm: &ProbMap, cfg: &PostprocessConfig) -> Result<BinaryMask> {
    Postprocessor::new(cfg)?.apply(pm)
}
