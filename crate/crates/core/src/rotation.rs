//! Object-to-spot angle semantics.
//!
//! Rotations are measured against the parking spot, never the camera. Two axes
//! are annotated: `ry` is the lean about the bike's long axis (seen from behind,
//! +90° is fallen to the left, -90° fallen to the right) and `rz` is the heading
//! about the vertical axis (seen from above).
//!
//! Signed degrees live in `(-180, 180]`. Network targets live in `[0, 1]` through
//! the affine map `u = (θ_rad + π) / 2π`, which puts a well-parked bike at 0.5.

use core::f64::consts::{PI, TAU};
use core::fmt;

use crate::{Error, Result};

/// A signed angle in degrees, always in `(-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Wraps any finite degree value to its equivalent in `(-180, 180]`.
    pub fn from_degrees(raw_deg: f64) -> Result<Self> {
        wrap_signed(raw_deg)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    pub fn abs_degrees(self) -> f64 {
        self.0.abs()
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        wrap_signed(value)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Spot-relative rotation in the two annotated axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationPair {
    /// Lean about the bike's long (depth) axis.
    pub ry: Angle,
    /// Heading about the vertical axis.
    pub rz: Angle,
}

impl RotationPair {
    pub fn new(ry: Angle, rz: Angle) -> Self {
        Self { ry, rz }
    }

    pub fn from_degrees(ry: f64, rz: f64) -> Result<Self> {
        Ok(Self::new(wrap_signed(ry)?, wrap_signed(rz)?))
    }
}

/// A rotation target in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct UnitRotation(f64);

impl UnitRotation {
    pub fn new(u: f64) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::NonFinite("unit rotation"));
        }
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::OutOfRange {
                what: "unit rotation",
                value: u,
            });
        }
        Ok(Self(u))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for UnitRotation {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<UnitRotation> for f64 {
    fn from(u: UnitRotation) -> f64 {
        u.0
    }
}

/// Parking status of one bike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ParkClass {
    Parked = 0,
    Rotated = 1,
    Fallen = 2,
}

impl ParkClass {
    pub const ALL: [ParkClass; 3] = [ParkClass::Parked, ParkClass::Rotated, ParkClass::Fallen];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(ParkClass::Parked),
            1 => Some(ParkClass::Rotated),
            2 => Some(ParkClass::Fallen),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ParkClass::Parked => "parked",
            ParkClass::Rotated => "rotated",
            ParkClass::Fallen => "fallen",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ParkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Angular class boundaries, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassThresholds {
    /// `|ry|` at or above this is fallen.
    pub theta_fallen: f64,
    /// `|rz|` at or above this (and not fallen) is rotated.
    pub theta_rotated: f64,
}

impl ClassThresholds {
    pub fn new(theta_fallen: f64, theta_rotated: f64) -> Result<Self> {
        let th = Self {
            theta_fallen,
            theta_rotated,
        };
        th.validate()?;
        Ok(th)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_fallen.is_finite() || !self.theta_rotated.is_finite() {
            return Err(Error::NonFinite("class threshold"));
        }
        if !(0.0 < self.theta_rotated
            && self.theta_rotated < self.theta_fallen
            && self.theta_fallen <= 90.0)
        {
            return Err(Error::InvalidConfig(
                "thresholds must satisfy 0 < theta_rotated < theta_fallen <= 90",
            ));
        }
        Ok(())
    }
}

impl Default for ClassThresholds {
    fn default() -> Self {
        Self {
            theta_fallen: 45.0,
            theta_rotated: 10.0,
        }
    }
}

/// Maps any finite degree value to its unique equivalent in `(-180, 180]`.
///
/// Exact: `fmod` is exact and the single ±360 correction falls under Sterbenz.
pub fn wrap_signed(raw_deg: f64) -> Result<Angle> {
    if !raw_deg.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    let mut r = libm::fmod(raw_deg, 360.0);
    if r > 180.0 {
        r -= 360.0;
    } else if r <= -180.0 {
        r += 360.0;
    }
    // collapse -0.0 so equal angles are bit-identical
    if r == 0.0 {
        r = 0.0;
    }
    Ok(Angle(r))
}

pub fn to_unit(a: Angle) -> UnitRotation {
    let u = (a.radians() + PI) / TAU;
    UnitRotation(u.clamp(0.0, 1.0))
}

/// Inverse of [`to_unit`]. `u = 0` decodes to -180°, which wraps to 180°.
pub fn from_unit(u: UnitRotation) -> Angle {
    let rad = u.0 * TAU - PI;
    // rad is within [-π, π], so wrapping cannot fail
    wrap_signed(rad.to_degrees()).unwrap_or(Angle::ZERO)
}

/// Rotation of an object relative to a reference heading.
pub fn relative_rotation(object_heading_deg: f64, spot_heading_deg: f64) -> Result<Angle> {
    if !object_heading_deg.is_finite() || !spot_heading_deg.is_finite() {
        return Err(Error::NonFinite("heading"));
    }
    wrap_signed(object_heading_deg - spot_heading_deg)
}

/// Snaps a lean angle to the nearest of {-90°, 0°, 90°}; ties go to 0°.
pub fn quantize_lean(ry: Angle) -> Angle {
    let d = ry.degrees();
    if d > 45.0 {
        Angle(90.0)
    } else if d < -45.0 {
        Angle(-90.0)
    } else {
        Angle::ZERO
    }
}

pub fn derive_class(rot: RotationPair, th: &ClassThresholds) -> ParkClass {
    if rot.ry.abs_degrees() >= th.theta_fallen {
        ParkClass::Fallen
    } else if rot.rz.abs_degrees() >= th.theta_rotated {
        ParkClass::Rotated
    } else {
        ParkClass::Parked
    }
}
