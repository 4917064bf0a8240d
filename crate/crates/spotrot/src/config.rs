//! Generation config files.
//!
//! A config is a flat TOML table. `preset` picks the base configuration and
//! every other key overrides one field of it:
//!
//! ```toml
//! preset = "challenging"      # challenging | regular-free | regular-vertical-free | regular-restricted
//! seed = 7                    # master seed (the --seed flag wins)
//! n = 100                     # image count (the --n flag wins)
//! bike_count_min = 3
//! bike_count_max = 20
//! class_mix = [0.42, 0.35, 0.23]   # parked, rotated, fallen
//! camera_mode = "free"        # free | vertical_free | restricted
//! camera_x = [-5.0, 5.0]      # camera offset ranges from the spot origin, meters
//! camera_y = [-9.0, -5.0]
//! camera_z = [2.0, 6.0]
//! vertical_fov_deg = 60.0
//! split_ratio = 0.9
//! min_spacing_m = 0.55
//! theta_fallen = 45.0
//! theta_rotated = 10.0
//! lean_target = "continuous"  # continuous | quantized
//! spot_length_m = 8.0
//! spot_width_m = 3.0
//! distractor_count_min = 0
//! distractor_count_max = 6
//! min_image_fraction = 0.01
//! min_retained_fraction = 0.25
//! width = 640
//! height = 360
//! background_id = 0
//! shading = "lambert"         # lambert | flat
//! format = "png"              # png | jpeg
//! jpeg_quality = 98
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spotrot_core::camera::{CameraMode, LeanTarget, Range};
use spotrot_core::render::{OutputFormat, RenderConfig, Shading};
use spotrot_core::rotation::ClassThresholds;
use spotrot_core::scene::{CountRange, GenConfig, Preset};

use crate::{CliError, CliResult};

pub const DEFAULT_PRESET: Preset = Preset::RegularFree;
pub const DEFAULT_IMAGES: u64 = 10;
pub const DEFAULT_JPEG_QUALITY: u8 = 98;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub n: Option<u64>,
    pub bike_count_min: Option<u32>,
    pub bike_count_max: Option<u32>,
    pub class_mix: Option<[f64; 3]>,
    pub camera_mode: Option<CameraMode>,
    pub camera_x: Option<[f64; 2]>,
    pub camera_y: Option<[f64; 2]>,
    pub camera_z: Option<[f64; 2]>,
    pub vertical_fov_deg: Option<f64>,
    pub split_ratio: Option<f64>,
    pub min_spacing_m: Option<f64>,
    pub theta_fallen: Option<f64>,
    pub theta_rotated: Option<f64>,
    pub lean_target: Option<LeanTarget>,
    pub spot_length_m: Option<f64>,
    pub spot_width_m: Option<f64>,
    pub distractor_count_min: Option<u32>,
    pub distractor_count_max: Option<u32>,
    pub min_image_fraction: Option<f64>,
    pub min_retained_fraction: Option<f64>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub background_id: Option<u8>,
    pub shading: Option<Shading>,
    pub format: Option<String>,
    pub jpeg_quality: Option<u8>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::input(path, e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e.to_string()))?;
        Self::parse(&text, path)
    }
}

/// Everything that determines the generated pixels and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub preset: String,
    pub generation: GenConfig,
    pub render: RenderConfig,
}

fn range(v: [f64; 2]) -> Range {
    Range::new(v[0], v[1])
}

pub fn parse_preset(name: &str) -> CliResult<Preset> {
    Preset::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        CliError::Usage(format!("unknown preset {name:?}; expected one of {}", known.join(", ")))
    })
}

impl ResolvedConfig {
    /// Applies `file` on top of the preset; `preset_override` beats the
    /// file's own `preset` key.
    pub fn resolve(file: &ConfigFile, preset_override: Option<&str>) -> CliResult<Self> {
        let preset = match preset_override.or(file.preset.as_deref()) {
            Some(name) => parse_preset(name)?,
            None => DEFAULT_PRESET,
        };
        let mut g = GenConfig::preset(preset);
        let f = file;
        if let Some(v) = f.bike_count_min {
            g.bike_count.min = v;
        }
        if let Some(v) = f.bike_count_max {
            g.bike_count.max = v;
        }
        if let Some(v) = f.class_mix {
            g.class_mix = v;
        }
        if let Some(v) = f.camera_mode {
            g.camera_mode = v;
        }
        if let Some(v) = f.camera_x {
            g.camera.x = range(v);
        }
        if let Some(v) = f.camera_y {
            g.camera.y = range(v);
        }
        if let Some(v) = f.camera_z {
            g.camera.z = range(v);
        }
        if let Some(v) = f.vertical_fov_deg {
            g.camera.vertical_fov_deg = v;
        }
        if let Some(v) = f.split_ratio {
            g.split_ratio = v;
        }
        if let Some(v) = f.min_spacing_m {
            g.min_spacing_m = v;
        }
        if f.theta_fallen.is_some() || f.theta_rotated.is_some() {
            g.thresholds = ClassThresholds {
                theta_fallen: f.theta_fallen.unwrap_or(g.thresholds.theta_fallen),
                theta_rotated: f.theta_rotated.unwrap_or(g.thresholds.theta_rotated),
            };
        }
        if let Some(v) = f.lean_target {
            g.lean_target = v;
        }
        if let Some(v) = f.spot_length_m {
            g.spot_length_m = v;
        }
        if let Some(v) = f.spot_width_m {
            g.spot_width_m = v;
        }
        g.distractor_count = CountRange {
            min: f.distractor_count_min.unwrap_or(g.distractor_count.min),
            max: f.distractor_count_max.unwrap_or(g.distractor_count.max),
        };
        if let Some(v) = f.min_image_fraction {
            g.visibility.min_image_fraction = v;
        }
        if let Some(v) = f.min_retained_fraction {
            g.visibility.min_retained_fraction = v;
        }

        let mut r = RenderConfig::default();
        r.width = f.width.unwrap_or(r.width);
        r.height = f.height.unwrap_or(r.height);
        r.background_id = f.background_id.unwrap_or(r.background_id);
        r.shading = f.shading.unwrap_or(r.shading);
        r.format = match f.format.as_deref() {
            None | Some("png") => OutputFormat::Png,
            Some("jpeg") | Some("jpg") => OutputFormat::Jpeg {
                quality: f.jpeg_quality.unwrap_or(DEFAULT_JPEG_QUALITY),
            },
            Some(other) => return Err(CliError::Usage(format!("unknown image format {other:?}; expected png or jpeg"))),
        };

        g.validate()?;
        r.validate()?;
        Ok(Self {
            preset: preset.name().to_string(),
            generation: g,
            render: r,
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn image_extension(&self) -> &'static str {
        match self.render.format {
            OutputFormat::Png => "png",
            OutputFormat::Jpeg { .. } => "jpg",
        }
    }
}
