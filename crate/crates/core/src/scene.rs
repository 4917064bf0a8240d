//! Seeded sampling of parking scenes and dataset manifests.
//!
//! A scene is a pure function of `(GenConfig, seed)`. All randomness comes from
//! a ChaCha8 stream seeded with the scene seed and is consumed in a fixed order.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::{CameraMode, CameraRanges, LeanTarget, Range, Visibility};
use crate::geom::{Mat3, Pose, Vec3};
use crate::image::Rgb;
use crate::rotation::{derive_class, Angle, ClassThresholds, ParkClass, RotationPair};
use crate::{Error, Result};

/// Placement attempts per bike before the scene gives up adding bikes.
pub const PLACEMENT_RETRIES: usize = 64;

/// Stored bike shapes: oriented box `[length, width, height]` in meters at scale 1.
pub const BIKE_MODELS: [[f64; 3]; 4] = [
    [1.80, 0.60, 1.10], // city
    [1.75, 0.70, 1.15], // mountain
    [1.70, 0.45, 1.00], // road
    [1.30, 0.50, 0.85], // kids
];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpotFrame {
    pub origin: Vec3,
    pub heading_deg: Angle,
    pub length_m: f64,
    pub width_m: f64,
}

impl SpotFrame {
    pub fn new(origin: Vec3, heading_deg: f64, length_m: f64, width_m: f64) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::NonFinite("spot origin"));
        }
        if !(length_m > 0.0 && width_m > 0.0) {
            return Err(Error::Degenerate("spot: non-positive size"));
        }
        Ok(Self {
            origin,
            heading_deg: Angle::from_degrees(heading_deg)?,
            length_m,
            width_m,
        })
    }

    pub fn contains_local(&self, u: f64, v: f64) -> bool {
        u.abs() <= 0.5 * self.length_m && v.abs() <= 0.5 * self.width_m
    }

    /// Spot-local `(u, v)` in world coordinates on the ground.
    pub fn to_world(&self, u: f64, v: f64) -> Vec3 {
        self.origin + Mat3::rot_z(self.heading_deg.degrees()).apply(Vec3::new(u, v, 0.0))
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * libm::hypot(self.length_m, self.width_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BikeInstance {
    pub model_id: u8,
    /// Position `(u, v)` in the spot frame, meters.
    pub pos_in_spot: (f64, f64),
    /// Spot-relative rotation.
    pub rot: RotationPair,
    pub scale: f64,
    pub color: Rgb,
}

impl BikeInstance {
    /// An unrotated bike at scale 1.
    pub fn upright(model_id: u8, pos_in_spot: (f64, f64), color: Rgb) -> Self {
        Self {
            model_id,
            pos_in_spot,
            rot: RotationPair::default(),
            scale: 1.0,
            color,
        }
    }

    /// Scaled oriented-box extent (length, width, height). Unknown models are zero-size.
    pub fn dimensions(&self) -> Vec3 {
        let [l, w, h] = BIKE_MODELS
            .get(self.model_id as usize)
            .copied()
            .unwrap_or([0.0; 3]);
        Vec3::new(l, w, h) * self.scale
    }

    /// Local frame: x forward, y left, z up, wheels on z = 0.
    ///
    /// The lean is applied about the local x axis, then the heading about z.
    /// Positive lean tips the top towards local +y, i.e. to the left as seen
    /// from behind. The bike is lifted so its lowest box corner rests on the ground.
    pub fn world_pose(&self, spot: &SpotFrame) -> Pose {
        let lean = Mat3::rot_x(-self.rot.ry.degrees());
        let rotation = Mat3::rot_z(spot.heading_deg.degrees() + self.rot.rz.degrees()).mul(&lean);
        let d = self.dimensions();
        // lowest corner after leaning; z-rotation does not change heights
        let mut min_z = f64::INFINITY;
        for sy in [-0.5, 0.5] {
            for z in [0.0, d.z] {
                min_z = min_z.min(lean.apply(Vec3::new(0.0, sy * d.y, z)).z);
            }
        }
        let base = spot.to_world(self.pos_in_spot.0, self.pos_in_spot.1);
        Pose {
            rotation,
            translation: base + Vec3::new(0.0, 0.0, -min_z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DistractorKind {
    Vehicle,
    Pedestrian,
    Tree,
    Pole,
    Bin,
}

impl DistractorKind {
    pub const ALL: [DistractorKind; 5] = [
        DistractorKind::Vehicle,
        DistractorKind::Pedestrian,
        DistractorKind::Tree,
        DistractorKind::Pole,
        DistractorKind::Bin,
    ];

    /// Nominal box size (length, width, height).
    pub fn base_size(self) -> Vec3 {
        match self {
            DistractorKind::Vehicle => Vec3::new(4.2, 1.8, 1.5),
            DistractorKind::Pedestrian => Vec3::new(0.45, 0.35, 1.75),
            DistractorKind::Tree => Vec3::new(1.6, 1.6, 4.5),
            DistractorKind::Pole => Vec3::new(0.15, 0.15, 3.0),
            DistractorKind::Bin => Vec3::new(0.6, 0.6, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Distractor {
    pub kind: DistractorKind,
    /// Ground-center position in world coordinates.
    pub position: Vec3,
    pub heading_deg: Angle,
    pub size: Vec3,
    pub color: Rgb,
}

impl Distractor {
    /// Radius of the circle enclosing the footprint.
    pub fn footprint_radius(&self) -> f64 {
        0.5 * libm::hypot(self.size.x, self.size.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Light {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub intensity: f64,
}

impl Light {
    /// Unit vector pointing from the scene towards the light.
    pub fn direction(&self) -> Vec3 {
        let (sa, ca) = libm::sincos(self.azimuth_deg.to_radians());
        let (se, ce) = libm::sincos(self.elevation_deg.to_radians());
        Vec3::new(ce * ca, ce * sa, se)
    }
}

impl Default for Light {
    fn default() -> Self {
        Self {
            azimuth_deg: 135.0,
            elevation_deg: 50.0,
            intensity: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scene {
    pub spot: SpotFrame,
    pub bikes: Vec<BikeInstance>,
    pub distractors: Vec<Distractor>,
    pub light: Light,
    pub ground_texture_id: u8,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountRange {
    pub min: u32,
    pub max: u32,
}

/// Named configurations mirroring the published dataset rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Challenging,
    RegularFree,
    RegularVerticalFree,
    RegularRestricted,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Challenging,
        Preset::RegularFree,
        Preset::RegularVerticalFree,
        Preset::RegularRestricted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Challenging => "challenging",
            Preset::RegularFree => "regular-free",
            Preset::RegularVerticalFree => "regular-vertical-free",
            Preset::RegularRestricted => "regular-restricted",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenConfig {
    pub bike_count: CountRange,
    /// Target probabilities for (parked, rotated, fallen).
    pub class_mix: [f64; 3],
    pub camera_mode: CameraMode,
    pub camera: CameraRanges,
    /// Fraction of images assigned to the training split.
    pub split_ratio: f64,
    pub min_spacing_m: f64,
    pub thresholds: ClassThresholds,
    pub spot_length_m: f64,
    pub spot_width_m: f64,
    /// Uniform jitter of the spot origin around the world origin, meters.
    pub spot_jitter_m: f64,
    pub spot_heading_deg: Range,
    /// Lean amplitude of standing bikes; kept below the fallen threshold.
    pub lean_jitter_deg: f64,
    /// Spread of fallen bikes around ±90° lean.
    pub fallen_jitter_deg: f64,
    pub scale_range: Range,
    pub palette: Vec<Rgb>,
    pub ground_texture_count: u8,
    pub distractor_count: CountRange,
    pub distractor_palette: Vec<Rgb>,
    pub lean_target: LeanTarget,
    pub visibility: Visibility,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self::preset(Preset::RegularFree)
    }
}

impl GenConfig {
    pub fn preset(preset: Preset) -> Self {
        let (min, max, spacing, mode) = match preset {
            Preset::Challenging => (3, 20, 0.55, CameraMode::Free),
            Preset::RegularFree => (3, 15, 0.9, CameraMode::Free),
            Preset::RegularVerticalFree => (3, 15, 0.9, CameraMode::VerticalFree),
            Preset::RegularRestricted => (3, 15, 0.9, CameraMode::Restricted),
        };
        Self {
            bike_count: CountRange { min, max },
            class_mix: [0.42, 0.35, 0.23],
            camera_mode: mode,
            camera: CameraRanges::default(),
            split_ratio: 0.9,
            min_spacing_m: spacing,
            thresholds: ClassThresholds::default(),
            spot_length_m: 8.0,
            spot_width_m: 3.0,
            spot_jitter_m: 1.0,
            spot_heading_deg: Range::new(-180.0, 180.0),
            lean_jitter_deg: 5.0,
            fallen_jitter_deg: 15.0,
            scale_range: Range::new(0.8, 1.2),
            palette: vec![
                [200, 30, 30],
                [30, 60, 180],
                [20, 20, 20],
                [230, 230, 230],
                [240, 180, 20],
                [40, 150, 60],
                [120, 120, 130],
                [150, 60, 160],
            ],
            ground_texture_count: 4,
            distractor_count: CountRange { min: 0, max: 6 },
            distractor_palette: vec![
                [90, 90, 100],
                [160, 40, 40],
                [40, 90, 40],
                [200, 200, 190],
                [60, 60, 140],
            ],
            lean_target: LeanTarget::Continuous,
            visibility: Visibility::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let CountRange { min, max } = self.bike_count;
        if min < 1 || max < min {
            return Err(Error::InvalidConfig("bike_count needs 1 <= min <= max"));
        }
        if self.distractor_count.max < self.distractor_count.min {
            return Err(Error::InvalidConfig("distractor_count needs min <= max"));
        }
        if self.class_mix.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig("class_mix entries must be >= 0"));
        }
        if (self.class_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("class_mix must sum to 1"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidConfig("split_ratio must be in (0, 1)"));
        }
        if !(self.min_spacing_m >= 0.0 && self.min_spacing_m.is_finite()) {
            return Err(Error::InvalidConfig("min_spacing_m must be >= 0"));
        }
        if !(self.spot_length_m > 0.0 && self.spot_width_m > 0.0) {
            return Err(Error::InvalidConfig("spot size must be positive"));
        }
        if !(self.spot_jitter_m >= 0.0 && self.spot_jitter_m.is_finite()) {
            return Err(Error::InvalidConfig("spot_jitter_m must be >= 0"));
        }
        self.spot_heading_deg.validate("spot heading range")?;
        self.scale_range.validate("scale range")?;
        if self.scale_range.min <= 0.0 {
            return Err(Error::InvalidConfig("scale must be positive"));
        }
        if !(self.lean_jitter_deg >= 0.0 && self.fallen_jitter_deg >= 0.0) {
            return Err(Error::InvalidConfig("jitter must be >= 0"));
        }
        if self.fallen_jitter_deg >= 90.0 {
            return Err(Error::InvalidConfig("fallen_jitter_deg must be < 90"));
        }
        if self.palette.is_empty() || self.distractor_palette.is_empty() {
            return Err(Error::InvalidConfig("palettes must not be empty"));
        }
        if self.ground_texture_count == 0 {
            return Err(Error::InvalidConfig("ground_texture_count must be >= 1"));
        }
        self.thresholds.validate()?;
        self.camera.validate()
    }
}

/// Uniform in the open interval `(0, 1)`.
fn open01(rng: &mut impl Rng) -> f64 {
    ((rng.gen::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in the open interval `(lo, hi)`.
fn open_interval(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * open01(rng)
}

fn random_sign(rng: &mut impl Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn sample_class(rng: &mut impl Rng, mix: &[f64; 3]) -> ParkClass {
    let r = rng.gen::<f64>();
    if r < mix[0] {
        ParkClass::Parked
    } else if r < mix[0] + mix[1] {
        ParkClass::Rotated
    } else {
        ParkClass::Fallen
    }
}

/// Draws a rotation uniformly inside the angular region of `class`.
///
/// Regions are sampled as open intervals so the drawn angle never sits on a
/// class boundary.
pub fn sample_rotation(rng: &mut impl Rng, class: ParkClass, cfg: &GenConfig) -> RotationPair {
    let th = &cfg.thresholds;
    let lean_amp = cfg.lean_jitter_deg.min(th.theta_fallen);
    let standing_lean = |rng: &mut _| {
        if lean_amp > 0.0 {
            open_interval(rng, -lean_amp, lean_amp)
        } else {
            0.0
        }
    };
    let (ry, rz) = match class {
        ParkClass::Parked => {
            let ry = standing_lean(rng);
            (ry, open_interval(rng, -th.theta_rotated, th.theta_rotated))
        }
        ParkClass::Rotated => {
            let ry = standing_lean(rng);
            let mag = open_interval(rng, th.theta_rotated, 180.0);
            (ry, random_sign(rng) * mag)
        }
        ParkClass::Fallen => {
            let lo = (90.0 - cfg.fallen_jitter_deg).max(th.theta_fallen);
            let hi = 90.0 + cfg.fallen_jitter_deg;
            let mag = if hi > lo { open_interval(rng, lo, hi) } else { 90.0 };
            let ry = random_sign(rng) * mag;
            (ry, open_interval(rng, -180.0, 180.0))
        }
    };
    // both values are finite, so wrapping cannot fail
    RotationPair::from_degrees(ry, rz).unwrap_or_default()
}

/// Samples one scene. Deterministic for fixed `(cfg, seed)`.
pub fn sample_scene(cfg: &GenConfig, seed: u64) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let j = cfg.spot_jitter_m;
    let origin = Vec3::new(
        Range::new(-j, j).sample(&mut rng),
        Range::new(-j, j).sample(&mut rng),
        0.0,
    );
    let heading = cfg.spot_heading_deg.sample(&mut rng);
    let spot = SpotFrame::new(origin, heading, cfg.spot_length_m, cfg.spot_width_m)?;

    let CountRange { min, max } = cfg.bike_count;
    let target = rng.gen_range(min..=max) as usize;
    let mut bikes: Vec<BikeInstance> = Vec::with_capacity(target);
    let min_d2 = cfg.min_spacing_m * cfg.min_spacing_m;
    let (hl, hw) = (0.5 * spot.length_m, 0.5 * spot.width_m);
    for _ in 0..target {
        let class = sample_class(&mut rng, &cfg.class_mix);
        let rot = sample_rotation(&mut rng, class, cfg);
        let model_id = rng.gen_range(0..BIKE_MODELS.len()) as u8;
        let scale = cfg.scale_range.sample(&mut rng);
        let color = cfg.palette[rng.gen_range(0..cfg.palette.len())];
        let mut placed = None;
        for _ in 0..PLACEMENT_RETRIES {
            let u = Range::new(-hl, hl).sample(&mut rng);
            let v = Range::new(-hw, hw).sample(&mut rng);
            let clear = bikes.iter().all(|b| {
                let (du, dv) = (b.pos_in_spot.0 - u, b.pos_in_spot.1 - v);
                du * du + dv * dv >= min_d2
            });
            if clear {
                placed = Some((u, v));
                break;
            }
        }
        let Some(pos_in_spot) = placed else {
            break;
        };
        bikes.push(BikeInstance {
            model_id,
            pos_in_spot,
            rot,
            scale,
            color,
        });
    }
    if bikes.len() < min as usize {
        return Err(Error::Placement {
            placed: bikes.len(),
            required: min as usize,
        });
    }

    let n_distractors = rng.gen_range(cfg.distractor_count.min..=cfg.distractor_count.max);
    let mut distractors = Vec::with_capacity(n_distractors as usize);
    for _ in 0..n_distractors {
        let kind = DistractorKind::ALL[rng.gen_range(0..DistractorKind::ALL.len())];
        let size = kind.base_size() * Range::new(0.85, 1.15).sample(&mut rng);
        let radius = 0.5 * libm::hypot(size.x, size.y);
        // outside the circle enclosing the spot, so never touching the rectangle
        let r_min = spot.half_diagonal() + radius + 0.5;
        let r = Range::new(r_min, r_min + 8.0).sample(&mut rng);
        // cameras sit on the -y side of the spot; keep distractors out of that sector
        let phi = Range::new(-15.0, 195.0).sample(&mut rng).to_radians();
        let (s, c) = libm::sincos(phi);
        let position = spot.origin + Vec3::new(r * c, r * s, 0.0);
        let heading_deg = Angle::from_degrees(Range::new(-180.0, 180.0).sample(&mut rng))?;
        let color = cfg.distractor_palette[rng.gen_range(0..cfg.distractor_palette.len())];
        distractors.push(Distractor {
            kind,
            position,
            heading_deg,
            size,
            color,
        });
    }

    let light = Light {
        azimuth_deg: Range::new(0.0, 360.0).sample(&mut rng),
        elevation_deg: Range::new(25.0, 75.0).sample(&mut rng),
        intensity: Range::new(0.7, 1.2).sample(&mut rng),
    };
    let ground_texture_id = rng.gen_range(0..cfg.ground_texture_count);

    Ok(Scene {
        spot,
        bikes,
        distractors,
        light,
        ground_texture_id,
        seed,
    })
}

/// Bike counts per class, indexed by class id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts(pub [usize; 3]);

impl ClassCounts {
    pub fn get(&self, c: ParkClass) -> usize {
        self.0[c.index()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn add(&mut self, other: &ClassCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

pub fn scene_class_histogram(scene: &Scene, th: &ClassThresholds) -> ClassCounts {
    let mut counts = ClassCounts::default();
    for b in &scene.bikes {
        counts.0[derive_class(b.rot, th).index()] += 1;
    }
    counts
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const SPLIT_SALT: u64 = 0x5350_4c49_545f_5631;
const CAMERA_SALT: u64 = 0x4341_4d45_5241_5f31;

/// Stable per-image seed.
pub fn image_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Seed for the camera of an image, kept separate from the scene stream.
pub fn camera_seed(scene_seed: u64) -> u64 {
    mix64(scene_seed ^ CAMERA_SALT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestEntry {
    pub index: u64,
    pub seed: u64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub master_seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn split_counts(&self) -> (usize, usize) {
        let train = self.entries.iter().filter(|e| e.split == Split::Train).count();
        (train, self.entries.len() - train)
    }
}

/// Number of training images: `round(n * ratio)`, half away from zero.
pub fn train_count(n_images: u64, split_ratio: f64) -> u64 {
    (libm::round(n_images as f64 * split_ratio) as u64).min(n_images)
}

/// Per-image seeds and a deterministic train/test assignment.
///
/// Images are ranked by a salted hash of their index; the first
/// `train_count` ranks go to train.
pub fn assemble_dataset(cfg: &GenConfig, n_images: u64, master_seed: u64) -> Result<DatasetManifest> {
    if n_images == 0 {
        return Err(Error::InvalidConfig("n_images must be >= 1"));
    }
    if !(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0) {
        return Err(Error::InvalidConfig("split_ratio must be in (0, 1)"));
    }
    let n_train = train_count(n_images, cfg.split_ratio) as usize;
    let mut order: Vec<u64> = (0..n_images).collect();
    order.sort_by_key(|&i| (mix64(master_seed ^ SPLIT_SALT ^ mix64(i)), i));
    let mut split = vec![Split::Test; n_images as usize];
    for &i in &order[..n_train] {
        split[i as usize] = Split::Train;
    }
    let entries = (0..n_images)
        .map(|i| ManifestEntry {
            index: i,
            seed: image_seed(master_seed, i),
            split: split[i as usize],
        })
        .collect();
    Ok(DatasetManifest {
        master_seed,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in Preset::ALL {
            GenConfig::preset(p).validate().unwrap();
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
    }

    #[test]
    fn config_validation_errors() {
        let mut c = GenConfig::default();
        c.class_mix = [0.5, 0.5, 0.5];
        assert!(c.validate().is_err());
        let mut c = GenConfig::default();
        c.bike_count = CountRange { min: 0, max: 3 };
        assert!(c.validate().is_err());
        let mut c = GenConfig::default();
        c.bike_count = CountRange { min: 5, max: 3 };
        assert!(c.validate().is_err());
        let mut c = GenConfig::default();
        c.split_ratio = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn challenging_counts_in_range() {
        let cfg = GenConfig::preset(Preset::Challenging);
        for seed in 0..200 {
            let s = sample_scene(&cfg, seed).unwrap();
            assert!((3..=20).contains(&s.bikes.len()), "{}", s.bikes.len());
        }
    }

    #[test]
    fn regular_counts_in_range() {
        let cfg = GenConfig::preset(Preset::RegularFree);
        for seed in 0..200 {
            let s = sample_scene(&cfg, seed).unwrap();
            assert!((3..=15).contains(&s.bikes.len()));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = GenConfig::preset(Preset::Challenging);
        assert_eq!(sample_scene(&cfg, 42).unwrap(), sample_scene(&cfg, 42).unwrap());
        assert_ne!(sample_scene(&cfg, 42).unwrap(), sample_scene(&cfg, 43).unwrap());
    }

    #[test]
    fn spacing_and_containment_hold() {
        let cfg = GenConfig::preset(Preset::Challenging);
        for seed in 0..100 {
            let s = sample_scene(&cfg, seed).unwrap();
            for (i, a) in s.bikes.iter().enumerate() {
                assert!(s.spot.contains_local(a.pos_in_spot.0, a.pos_in_spot.1));
                assert!((0.8..=1.2).contains(&a.scale));
                for b in &s.bikes[i + 1..] {
                    let d = libm::hypot(a.pos_in_spot.0 - b.pos_in_spot.0, a.pos_in_spot.1 - b.pos_in_spot.1);
                    assert!(d >= cfg.min_spacing_m);
                }
            }
        }
    }

    #[test]
    fn crowded_spot_reduces_count_or_fails() {
        let mut cfg = GenConfig::default();
        cfg.spot_length_m = 1.0;
        cfg.spot_width_m = 1.0;
        cfg.min_spacing_m = 0.6;
        cfg.bike_count = CountRange { min: 1, max: 20 };
        for seed in 0..20 {
            let s = sample_scene(&cfg, seed).unwrap();
            // at most 4 points with pairwise distance >= 0.6 fit in a unit square
            assert!(s.bikes.len() <= 4);
        }
        cfg.bike_count = CountRange { min: 10, max: 20 };
        assert!(matches!(
            sample_scene(&cfg, 0),
            Err(Error::Placement { required: 10, .. })
        ));
    }

    #[test]
    fn distractors_stay_off_the_spot() {
        let cfg = GenConfig::preset(Preset::RegularFree);
        for seed in 0..100 {
            let s = sample_scene(&cfg, seed).unwrap();
            for d in &s.distractors {
                let dist = (d.position - s.spot.origin).norm();
                assert!(dist - d.footprint_radius() > s.spot.half_diagonal());
            }
        }
    }

    #[test]
    fn sampled_rotations_match_their_class() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5000 {
            let c = sample_class(&mut rng, &cfg.class_mix);
            let rot = sample_rotation(&mut rng, c, &cfg);
            assert_eq!(derive_class(rot, &cfg.thresholds), c);
            if c == ParkClass::Fallen {
                let a = rot.ry.abs_degrees();
                assert!((75.0..=105.0).contains(&a));
            }
        }
    }

    #[test]
    fn histogram_examples() {
        let cfg = GenConfig::default();
        let mut s = sample_scene(&cfg, 1).unwrap();
        for b in &mut s.bikes {
            b.rot = RotationPair::default();
        }
        let h = scene_class_histogram(&s, &cfg.thresholds);
        assert_eq!(h.0, [s.bikes.len(), 0, 0]);
        s.bikes.clear();
        assert_eq!(scene_class_histogram(&s, &cfg.thresholds).0, [0, 0, 0]);
    }

    #[test]
    fn mix_converges() {
        let cfg = GenConfig::default();
        let mut counts = ClassCounts::default();
        let mut seed = 0;
        while counts.total() < 10_000 {
            let s = sample_scene(&cfg, seed).unwrap();
            counts.add(&scene_class_histogram(&s, &cfg.thresholds));
            seed += 1;
        }
        for (i, target) in cfg.class_mix.iter().enumerate() {
            let p = counts.0[i] as f64 / counts.total() as f64;
            assert!((p - target).abs() <= 0.03, "class {i}: {p}");
        }
    }

    #[test]
    fn split_sizes() {
        let mut cfg = GenConfig::default();
        cfg.split_ratio = 0.9;
        assert_eq!(assemble_dataset(&cfg, 500, 3).unwrap().split_counts(), (450, 50));
        assert_eq!(assemble_dataset(&cfg, 10, 3).unwrap().split_counts(), (9, 1));
        // 4,012 / 4,441 published row
        cfg.split_ratio = 0.9034;
        assert_eq!(assemble_dataset(&cfg, 4441, 3).unwrap().split_counts(), (4012, 429));
        assert!(assemble_dataset(&cfg, 0, 3).is_err());
    }

    #[test]
    fn manifest_is_deterministic() {
        let cfg = GenConfig::default();
        let a = assemble_dataset(&cfg, 300, 11).unwrap();
        assert_eq!(a, assemble_dataset(&cfg, 300, 11).unwrap());
        assert_ne!(a, assemble_dataset(&cfg, 300, 12).unwrap());
        let mut seeds: Vec<u64> = a.entries.iter().map(|e| e.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 300);
    }

    #[test]
    fn fallen_bike_rests_on_ground() {
        let spot = SpotFrame::new(Vec3::ZERO, 20.0, 8.0, 3.0).unwrap();
        let mut bike = BikeInstance::upright(0, (1.0, 0.5), [0; 3]);
        bike.rot = RotationPair::from_degrees(90.0, 30.0).unwrap();
        let corners = crate::camera::bike_corners(&bike, &spot).unwrap();
        let min_z = corners.iter().map(|c| c.z).fold(f64::INFINITY, f64::min);
        assert!(min_z.abs() < 1e-12);
        // fallen to the left: the top of the bike moves towards local +y
        let top = bike.world_pose(&spot).apply(Vec3::new(0.0, 0.0, bike.dimensions().z));
        let base = spot.to_world(1.0, 0.5);
        let left = Mat3::rot_z(spot.heading_deg.degrees() + 30.0).apply(Vec3::new(0.0, 1.0, 0.0));
        assert!((top - base).dot(left) > 0.9 * bike.dimensions().z);
    }
}
