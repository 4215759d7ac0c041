//! Config loading and flag precedence: defaults, then the config file, then flags.

use std::fs;
use std::path::Path;

use nucseg::config::PipelineConfig;
use nucseg::eval::{ElementSpec, PostprocessConfig};

use crate::args::{PlanArgs, PostArgs};
use crate::CliError;

pub fn load(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Core(nucseg::Error::MissingInput(path.to_path_buf()))
        } else {
            CliError::Config(format!("{}: {e}", path.display()))
        }
    })?;
    let cfg: PipelineConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?
    };
    Ok(cfg)
}

pub fn validate(cfg: &PipelineConfig) -> Result<(), CliError> {
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn apply_post(post: &mut PostprocessConfig, args: &PostArgs) {
    set(&mut post.threshold, args.threshold);
    set(&mut post.blur_kernel, args.blur_kernel);
    set(&mut post.blur_sigma, args.blur_sigma);
    if let Some(n) = args.erode_size {
        post.erode = ElementSpec { width: n, height: n, ..post.erode };
    }
    if let Some(n) = args.open_size {
        post.open = ElementSpec { width: n, height: n, ..post.open };
    }
}

pub fn apply_plan(cfg: &mut PipelineConfig, args: &PlanArgs) {
    let s = &mut cfg.schedule;
    set(&mut s.stages, args.stages);
    if args.frozen_epochs.is_some() {
        s.plan.frozen_epochs = args.frozen_epochs;
    }
    if args.unfrozen_epochs.is_some() {
        s.plan.unfrozen_epochs = args.unfrozen_epochs;
    }
    if args.batches.is_some() {
        s.plan.batches = args.batches.clone();
    }
    if args.lr_max.is_some() {
        s.plan.lr_max = args.lr_max.clone();
    }
    if args.weight_decay.is_some() {
        s.plan.weight_decay = args.weight_decay;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let mut cfg: PipelineConfig = toml::from_str("[postprocess]\nthreshold = 200\nblur_kernel = 7\n").unwrap();
        let args = PostArgs {
            threshold: Some(210),
            ..Default::default()
        };
        apply_post(&mut cfg.postprocess, &args);
        assert_eq!(cfg.postprocess.threshold, 210);
        assert_eq!(cfg.postprocess.blur_kernel, 7);
        assert_eq!(cfg.postprocess.open.width, 15);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[postprocess]\nthreshhold = 1\n").is_err());
    }
}
