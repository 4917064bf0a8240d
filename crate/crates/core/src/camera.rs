//! Camera rigs, pinhole projection and ground-truth annotation.
//!
//! World frame: z up, ground at z = 0. Camera frame: x right, y up, z forward.
//! The principal point sits at the image center; pixel rows grow downward.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec3;
use crate::rotation::{
    derive_class, quantize_lean, to_unit, ClassThresholds, ParkClass, RotationPair, UnitRotation,
};
use crate::scene::{BikeInstance, Scene, SpotFrame};
use crate::{Error, Result};

/// Minimum camera-space depth a bike corner may have to be annotated.
pub const NEAR_PLANE_M: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CameraMode {
    /// All three position coordinates sampled.
    Free,
    /// x pinned to the spot center; height and depth sampled.
    VerticalFree,
    /// One fixed pose.
    Restricted,
}

impl CameraMode {
    pub fn name(self) -> &'static str {
        match self {
            CameraMode::Free => "free",
            CameraMode::VerticalFree => "vertical_free",
            CameraMode::Restricted => "restricted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn validate(&self, what: &'static str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::NonFinite(what));
        }
        if self.max < self.min {
            return Err(Error::InvalidConfig(what));
        }
        Ok(())
    }

    pub(crate) fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.max == self.min {
            return self.min;
        }
        self.min + (self.max - self.min) * rng.gen::<f64>()
    }
}

/// Camera sampling ranges. Position offsets are relative to the spot origin,
/// except the restricted pose which is in absolute world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraRanges {
    pub x: Range,
    pub y: Range,
    pub z: Range,
    pub vertical_fov_deg: f64,
    pub restricted_position: Vec3,
    pub restricted_look_at: Vec3,
}

impl Default for CameraRanges {
    fn default() -> Self {
        Self {
            x: Range::new(-5.0, 5.0),
            y: Range::new(-9.0, -5.0),
            z: Range::new(2.0, 6.0),
            vertical_fov_deg: 60.0,
            restricted_position: Vec3::new(0.0, -7.0, 4.0),
            restricted_look_at: Vec3::ZERO,
        }
    }
}

impl CameraRanges {
    pub fn validate(&self) -> Result<()> {
        self.x.validate("camera x range")?;
        self.y.validate("camera y range")?;
        self.z.validate("camera z range")?;
        if self.z.min <= 0.0 {
            return Err(Error::InvalidConfig("camera z range must be above ground"));
        }
        if !(self.vertical_fov_deg > 20.0 && self.vertical_fov_deg < 120.0) {
            return Err(Error::OutOfRange {
                what: "vertical fov",
                value: self.vertical_fov_deg,
            });
        }
        let fixed = CameraRig {
            position: self.restricted_position,
            look_at: self.restricted_look_at,
            vertical_fov_deg: self.vertical_fov_deg,
            mode: CameraMode::Restricted,
        };
        fixed.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraRig {
    pub position: Vec3,
    pub look_at: Vec3,
    pub vertical_fov_deg: f64,
    pub mode: CameraMode,
}

impl CameraRig {
    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.look_at.is_finite() {
            return Err(Error::NonFinite("camera pose"));
        }
        if self.position.z <= 0.0 {
            return Err(Error::InvalidConfig("camera must be above ground"));
        }
        if !(self.vertical_fov_deg > 20.0 && self.vertical_fov_deg < 120.0) {
            return Err(Error::OutOfRange {
                what: "vertical fov",
                value: self.vertical_fov_deg,
            });
        }
        Projector::basis(self).map(|_| ())
    }
}

/// Draws a camera for `spot` under `mode`. Deterministic per seed.
pub fn sample_camera(
    mode: CameraMode,
    ranges: &CameraRanges,
    spot: &SpotFrame,
    seed: u64,
) -> Result<CameraRig> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = spot.origin;
    let position = match mode {
        CameraMode::Free => Vec3::new(
            c.x + ranges.x.sample(&mut rng),
            c.y + ranges.y.sample(&mut rng),
            ranges.z.sample(&mut rng),
        ),
        CameraMode::VerticalFree => Vec3::new(
            c.x,
            c.y + ranges.y.sample(&mut rng),
            ranges.z.sample(&mut rng),
        ),
        CameraMode::Restricted => {
            return Ok(CameraRig {
                position: ranges.restricted_position,
                look_at: ranges.restricted_look_at,
                vertical_fov_deg: ranges.vertical_fov_deg,
                mode,
            })
        }
    };
    let rig = CameraRig {
        position,
        look_at: c,
        vertical_fov_deg: ranges.vertical_fov_deg,
        mode,
    };
    rig.validate()?;
    Ok(rig)
}

/// Precomputed pinhole camera for one rig and image size.
#[derive(Debug, Clone, Copy)]
pub struct Projector {
    origin: Vec3,
    right: Vec3,
    up: Vec3,
    forward: Vec3,
    focal_px: f64,
    width: f64,
    height: f64,
}

impl Projector {
    pub fn new(rig: &CameraRig, image_wh: (usize, usize)) -> Result<Self> {
        if image_wh.0 == 0 || image_wh.1 == 0 {
            return Err(Error::InvalidImage("zero dimension"));
        }
        let (right, up, forward) = Self::basis(rig)?;
        let height = image_wh.1 as f64;
        let focal_px = 0.5 * height / libm::tan(0.5 * rig.vertical_fov_deg.to_radians());
        Ok(Self {
            origin: rig.position,
            right,
            up,
            forward,
            focal_px,
            width: image_wh.0 as f64,
            height,
        })
    }

    fn basis(rig: &CameraRig) -> Result<(Vec3, Vec3, Vec3)> {
        let forward = (rig.look_at - rig.position)
            .normalized()
            .ok_or(Error::Degenerate("camera: look_at equals position"))?;
        let right = forward
            .cross(Vec3::Z)
            .normalized()
            .ok_or(Error::Degenerate("camera: looking straight up or down"))?;
        let up = right.cross(forward);
        Ok((right, up, forward))
    }

    pub fn focal_px(&self) -> f64 {
        self.focal_px
    }

    pub fn image_size(&self) -> (f64, f64) {
        (self.width, self.height)
    }

    /// World point in camera coordinates (x right, y up, z forward).
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    /// Camera-space point to pixel coordinates. Caller guarantees `c.z > 0`.
    pub fn camera_to_pixel(&self, c: Vec3) -> (f64, f64) {
        (
            0.5 * self.width + self.focal_px * c.x / c.z,
            0.5 * self.height - self.focal_px * c.y / c.z,
        )
    }

    pub fn project(&self, p: Vec3) -> Result<(f64, f64)> {
        let c = self.to_camera(p);
        if c.z <= 0.0 {
            return Err(Error::BehindCamera);
        }
        Ok(self.camera_to_pixel(c))
    }
}

pub fn project_point(rig: &CameraRig, p: Vec3, image_wh: (usize, usize)) -> Result<(f64, f64)> {
    Projector::new(rig, image_wh)?.project(p)
}

/// Axis-aligned box in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BBox2D {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox2D {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = Self { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("cx", self.cx), ("cy", self.cy), ("w", self.w), ("h", self.h)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(what));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::Degenerate("box: zero width or height"));
        }
        Ok(())
    }

    /// Builds a box from normalized corners `(x0, y0, x1, y1)`.
    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0)
    }

    /// Normalized corners `(x0, y0, x1, y1)`.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - 0.5 * self.w,
            self.cy - 0.5 * self.h,
            self.cx + 0.5 * self.w,
            self.cy + 0.5 * self.h,
        )
    }

    /// Pixel-space corners for an image of the given size.
    pub fn pixel_corners(&self, image_wh: (usize, usize)) -> (f64, f64, f64, f64) {
        let (x0, y0, x1, y1) = self.corners();
        let (w, h) = (image_wh.0 as f64, image_wh.1 as f64);
        (x0 * w, y0 * h, x1 * w, y1 * h)
    }
}

/// When a projected bike counts as present in the image.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Visibility {
    /// Clipped box area as a fraction of the image area.
    pub min_image_fraction: f64,
    /// Clipped box area as a fraction of the unclipped projection.
    pub min_retained_fraction: f64,
}

impl Default for Visibility {
    fn default() -> Self {
        Self {
            min_image_fraction: 0.01,
            min_retained_fraction: 0.25,
        }
    }
}

/// The 8 corners of a bike's oriented bounding box in world coordinates.
pub fn bike_corners(bike: &BikeInstance, spot: &SpotFrame) -> Result<[Vec3; 8]> {
    let dims = bike.dimensions();
    if !(dims.x > 0.0 && dims.y > 0.0 && dims.z > 0.0) || !dims.is_finite() {
        return Err(Error::Degenerate("bike model"));
    }
    let pose = bike.world_pose(spot);
    let mut out = [Vec3::ZERO; 8];
    for (i, c) in out.iter_mut().enumerate() {
        let local = Vec3::new(
            if i & 1 == 0 { -0.5 * dims.x } else { 0.5 * dims.x },
            if i & 2 == 0 { -0.5 * dims.y } else { 0.5 * dims.y },
            if i & 4 == 0 { 0.0 } else { dims.z },
        );
        *c = pose.apply(local);
    }
    Ok(out)
}

/// 2D box of a bike, or `None` when it is not visible.
///
/// A bike with any corner closer than [`NEAR_PLANE_M`] to the camera plane is
/// treated as not visible rather than clipped against the near plane.
pub fn bike_bbox(
    rig: &CameraRig,
    bike: &BikeInstance,
    spot: &SpotFrame,
    image_wh: (usize, usize),
    vis: &Visibility,
) -> Result<Option<BBox2D>> {
    let proj = Projector::new(rig, image_wh)?;
    bike_bbox_with(&proj, bike, spot, vis)
}

pub(crate) fn bike_bbox_with(
    proj: &Projector,
    bike: &BikeInstance,
    spot: &SpotFrame,
    vis: &Visibility,
) -> Result<Option<BBox2D>> {
    let corners = bike_corners(bike, spot)?;
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in corners {
        let c = proj.to_camera(p);
        if c.z < NEAR_PLANE_M {
            return Ok(None);
        }
        let (u, v) = proj.camera_to_pixel(c);
        x0 = x0.min(u);
        y0 = y0.min(v);
        x1 = x1.max(u);
        y1 = y1.max(v);
    }
    let (w, h) = proj.image_size();
    let full_area = (x1 - x0) * (y1 - y0);
    let (cx0, cy0, cx1, cy1) = (x0.max(0.0), y0.max(0.0), x1.min(w), y1.min(h));
    if cx1 <= cx0 || cy1 <= cy0 {
        return Ok(None);
    }
    let clipped_area = (cx1 - cx0) * (cy1 - cy0);
    if clipped_area < vis.min_image_fraction * w * h
        || clipped_area < vis.min_retained_fraction * full_area
    {
        return Ok(None);
    }
    BBox2D::from_corners(cx0 / w, cy0 / h, cx1 / w, cy1 / h).map(Some)
}

/// Which lean value becomes the training target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LeanTarget {
    #[default]
    Continuous,
    /// Snapped to {-90°, 0°, 90°}.
    Quantized,
}

/// One ground-truth object: class, box and both rotation targets.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnotationRecord {
    pub class: ParkClass,
    pub bbox: BBox2D,
    pub ry_u: UnitRotation,
    pub rz_u: UnitRotation,
}

/// Options controlling which bikes are annotated and how.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnnotateOptions {
    pub thresholds: ClassThresholds,
    pub visibility: Visibility,
    pub lean_target: LeanTarget,
}

/// Rotation targets and class for one bike. Depends only on the bike's
/// spot-relative rotation, never on the camera.
pub fn rotation_targets(
    rot: RotationPair,
    th: &ClassThresholds,
    lean: LeanTarget,
) -> (ParkClass, UnitRotation, UnitRotation) {
    let ry = match lean {
        LeanTarget::Continuous => rot.ry,
        LeanTarget::Quantized => quantize_lean(rot.ry),
    };
    let class = derive_class(RotationPair::new(ry, rot.rz), th);
    (class, to_unit(ry), to_unit(rot.rz))
}

/// One record per visible bike, in bike order.
pub fn annotate_scene(
    scene: &Scene,
    rig: &CameraRig,
    image_wh: (usize, usize),
    opts: &AnnotateOptions,
) -> Result<Vec<AnnotationRecord>> {
    let proj = Projector::new(rig, image_wh)?;
    let mut out = Vec::new();
    for bike in &scene.bikes {
        let Some(bbox) = bike_bbox_with(&proj, bike, &scene.spot, &opts.visibility)? else {
            continue;
        };
        let (class, ry_u, rz_u) = rotation_targets(bike.rot, &opts.thresholds, opts.lean_target);
        out.push(AnnotationRecord {
            class,
            bbox,
            ry_u,
            rz_u,
        });
    }
    Ok(out)
}
