//! Scene-description documents for external renderers.
//!
//! A document is JSON with a `schema_version`, the full [`Scene`] and the
//! [`CameraRig`]. Angles are signed degrees in (-180, 180], lengths are meters
//! in a right-handed z-up world. Floats are written in shortest round-trip
//! form, so parsing an export gives back the exact input.

use serde::{Deserialize, Serialize};
use spotrot_core::camera::CameraRig;
use spotrot_core::scene::Scene;

use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub schema_version: u32,
    pub scene: Scene,
    pub camera: CameraRig,
}

pub fn export_scene(scene: &Scene, rig: &CameraRig) -> String {
    let doc = SceneDocument {
        schema_version: SCHEMA_VERSION,
        scene: scene.clone(),
        camera: *rig,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("scene serializes");
    s.push('\n');
    s
}

pub fn parse_scene(text: &str) -> CliResult<(Scene, CameraRig)> {
    let doc: SceneDocument =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("scene document: {e}")))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "scene document: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    Ok((doc.scene, doc.camera))
}
