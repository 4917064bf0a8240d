//! One generated sample: scene, camera, labels and pixels.

use serde::{Deserialize, Serialize};
use spotrot_core::camera::{annotate_scene, sample_camera, AnnotateOptions, AnnotationRecord, CameraRig};
use spotrot_core::image::RgbImage;
use spotrot_core::render::rasterize;
use spotrot_core::scene::{camera_seed, sample_scene, Scene};

use crate::config::ResolvedConfig;
use crate::CliResult;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const IMAGES_DIR: &str = "images";
pub const LABELS_DIR: &str = "labels";
pub const SCENES_DIR: &str = "scenes";

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub scene: Scene,
    pub rig: CameraRig,
    pub records: Vec<AnnotationRecord>,
    pub image: RgbImage,
}

pub fn annotate_options(cfg: &ResolvedConfig) -> AnnotateOptions {
    AnnotateOptions {
        thresholds: cfg.generation.thresholds,
        visibility: cfg.generation.visibility,
        lean_target: cfg.generation.lean_target,
    }
}

/// Builds the sample for one image seed. Pure.
pub fn build_sample(cfg: &ResolvedConfig, seed: u64) -> CliResult<Sample> {
    let g = &cfg.generation;
    let scene = sample_scene(g, seed)?;
    let rig = sample_camera(g.camera_mode, &g.camera, &scene.spot, camera_seed(seed))?;
    let records = annotate_scene(&scene, &rig, cfg.render.image_wh(), &annotate_options(cfg))?;
    let image = rasterize(&scene, &rig, &cfg.render)?;
    Ok(Sample { scene, rig, records, image })
}

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestLine {
    pub index: u64,
    pub image_path: String,
    pub label_path: String,
    pub scene_path: String,
    pub split: String,
    pub seed: u64,
}

/// File stem for image `index` of `n`, zero padded to at least six digits.
pub fn stem(index: u64, n: u64) -> String {
    let digits = n.saturating_sub(1).max(1).to_string().len().max(6);
    format!("{index:0digits$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;

    #[test]
    fn stems_sort_lexically() {
        assert_eq!(stem(7, 10), "000007");
        assert_eq!(stem(12, 2_000_000), "0000012");
    }

    #[test]
    fn samples_are_pure() {
        let cfg = ResolvedConfig::resolve(&ConfigFile::default(), Some("challenging")).unwrap();
        let a = build_sample(&cfg, 99).unwrap();
        let b = build_sample(&cfg, 99).unwrap();
        assert_eq!(a, b);
    }
}
