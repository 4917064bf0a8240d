//! Smoothing filters for narrowing the synthetic-to-real texture gap.
//!
//! All filters work per channel on 8-bit RGB with reflect-101 borders
//! (`dcb|abcd|cba`). Linear filters run on integer weights so the separable
//! passes are exact: the result equals a direct 2D convolution bit for bit.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::image::RgbImage;
use crate::{Error, Result};

/// Fixed-point scale of the Gaussian taps.
const GAUSS_ONE: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    /// Uniform `1/size²` kernel ("2D convolution").
    BoxConv,
    /// Uniform `1/size²` low-pass kernel; same arithmetic as [`FilterKind::BoxConv`].
    LowpassBox,
    /// Separable Gaussian. `None` picks sigma from the kernel size.
    Gaussian { sigma: Option<f64> },
    Median,
    Bilateral { sigma_space: f64, sigma_color: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: FilterKind,
    pub size: usize,
}

impl KernelSpec {
    pub fn new(kind: FilterKind, size: usize) -> Result<Self> {
        let spec = Self { kind, size };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 3 {
            return Err(Error::InvalidKernel("size must be >= 3"));
        }
        if self.size % 2 == 0 {
            return Err(Error::InvalidKernel("size must be odd"));
        }
        let positive = |s: f64| s.is_finite() && s > 0.0;
        match self.kind {
            FilterKind::Gaussian { sigma: Some(s) } if !positive(s) => {
                Err(Error::InvalidKernel("gaussian sigma must be > 0"))
            }
            FilterKind::Bilateral {
                sigma_space,
                sigma_color,
            } if !positive(sigma_space) || !positive(sigma_color) => {
                Err(Error::InvalidKernel("bilateral sigmas must be > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }
}

/// Named presets, one per smoothing row of the evaluation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmoothPreset {
    None,
    Conv5,
    Lowpass3,
    Gauss5,
    Median5,
    Bilateral5,
}

impl SmoothPreset {
    pub const ALL: [SmoothPreset; 6] = [
        SmoothPreset::None,
        SmoothPreset::Conv5,
        SmoothPreset::Lowpass3,
        SmoothPreset::Gauss5,
        SmoothPreset::Median5,
        SmoothPreset::Bilateral5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SmoothPreset::None => "none",
            SmoothPreset::Conv5 => "conv5",
            SmoothPreset::Lowpass3 => "lowpass3",
            SmoothPreset::Gauss5 => "gauss5",
            SmoothPreset::Median5 => "median5",
            SmoothPreset::Bilateral5 => "bilateral5",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Kernel for the preset; `None` for the pass-through preset.
    pub fn spec(self) -> Option<KernelSpec> {
        let (kind, size) = match self {
            SmoothPreset::None => return None,
            SmoothPreset::Conv5 => (FilterKind::BoxConv, 5),
            SmoothPreset::Lowpass3 => (FilterKind::LowpassBox, 3),
            SmoothPreset::Gauss5 => (FilterKind::Gaussian { sigma: None }, 5),
            SmoothPreset::Median5 => (FilterKind::Median, 5),
            SmoothPreset::Bilateral5 => (
                FilterKind::Bilateral {
                    sigma_space: 2.0,
                    sigma_color: 25.0,
                },
                5,
            ),
        };
        Some(KernelSpec { kind, size })
    }
}

impl fmt::Display for SmoothPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sigma used when a Gaussian is given only its size.
pub fn gaussian_sigma_from_size(size: usize) -> f64 {
    0.3 * ((size as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Reflect-101 index into `0..n`.
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Uniform kernel values, `1/size²` each.
pub fn box_kernel(size: usize) -> Vec<f64> {
    vec![1.0 / (size * size) as f64; size * size]
}

/// Integer 1D taps of a box or Gaussian filter.
pub fn linear_taps(spec: &KernelSpec) -> Result<Vec<u64>> {
    spec.validate()?;
    match spec.kind {
        FilterKind::BoxConv | FilterKind::LowpassBox => Ok(vec![1; spec.size]),
        FilterKind::Gaussian { sigma } => {
            let sigma = sigma.unwrap_or_else(|| gaussian_sigma_from_size(spec.size));
            Ok(gaussian_taps(spec.size, sigma))
        }
        _ => Err(Error::InvalidKernel("not a linear filter")),
    }
}

fn gaussian_taps(size: usize, sigma: f64) -> Vec<u64> {
    let r = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            libm::exp(-(d * d) / (2.0 * sigma * sigma))
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter()
        .map(|g| (libm::round(g / sum * GAUSS_ONE) as u64).max(1))
        .collect()
}

pub fn smooth(image: &RgbImage, spec: &KernelSpec) -> Result<RgbImage> {
    spec.validate()?;
    match spec.kind {
        FilterKind::BoxConv | FilterKind::LowpassBox | FilterKind::Gaussian { .. } => {
            separable(image, &linear_taps(spec)?)
        }
        FilterKind::Median => Ok(median(image, spec.radius())),
        FilterKind::Bilateral {
            sigma_space,
            sigma_color,
        } => Ok(bilateral(image, spec.radius(), sigma_space, sigma_color)),
    }
}

/// Applies a preset; the pass-through preset returns a copy.
pub fn smooth_preset(image: &RgbImage, preset: SmoothPreset) -> Result<RgbImage> {
    match preset.spec() {
        Some(spec) => smooth(image, &spec),
        None => Ok(image.clone()),
    }
}

/// Rounded `acc / den`, clamped to 8 bits.
fn div_round(acc: u64, den: u64) -> u8 {
    ((acc + den / 2) / den).min(255) as u8
}

fn separable(image: &RgbImage, taps: &[u64]) -> Result<RgbImage> {
    let (w, h) = (image.width(), image.height());
    let r = (taps.len() / 2) as isize;
    let sum: u64 = taps.iter().sum();
    let den = sum * sum;
    let src = image.as_raw();

    let mut horiz = vec![0u64; w * h * 3];
    for y in 0..h {
        let row = &src[y * w * 3..(y + 1) * w * 3];
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0u64;
                for (k, &t) in taps.iter().enumerate() {
                    let sx = reflect_index(x as isize + k as isize - r, w);
                    acc += t * row[sx * 3 + c] as u64;
                }
                horiz[(y * w + x) * 3 + c] = acc;
            }
        }
    }

    let mut out = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0u64;
                for (k, &t) in taps.iter().enumerate() {
                    let sy = reflect_index(y as isize + k as isize - r, h);
                    acc += t * horiz[(sy * w + x) * 3 + c];
                }
                out[(y * w + x) * 3 + c] = div_round(acc, den);
            }
        }
    }
    RgbImage::from_raw(w, h, out)
}

/// Per-channel median using a sliding 256-bin histogram along each row.
fn median(image: &RgbImage, radius: usize) -> RgbImage {
    let (w, h) = (image.width(), image.height());
    let size = 2 * radius + 1;
    let rank = (size * size / 2) as u32;
    let r = radius as isize;
    let mut out = image.clone();
    let mut hist = [0u32; 256];
    let mut column = vec![0u8; size];

    for c in 0..3 {
        for y in 0..h {
            hist.fill(0);
            let gather = |sx: usize, column: &mut [u8]| {
                for (k, v) in column.iter_mut().enumerate() {
                    let sy = reflect_index(y as isize + k as isize - r, h);
                    *v = image.channel(sx, sy, c);
                }
            };
            for k in 0..size {
                gather(reflect_index(k as isize - r, w), &mut column);
                for &v in &column {
                    hist[v as usize] += 1;
                }
            }
            for x in 0..w {
                let mut seen = 0u32;
                let mut value = 0u8;
                for (v, &n) in hist.iter().enumerate() {
                    seen += n;
                    if seen > rank {
                        value = v as u8;
                        break;
                    }
                }
                let mut px = out.get(x, y);
                px[c] = value;
                out.put(x, y, px);
                if x + 1 < w {
                    gather(reflect_index(x as isize - r, w), &mut column);
                    for &v in &column {
                        hist[v as usize] -= 1;
                    }
                    gather(reflect_index(x as isize + 1 + r, w), &mut column);
                    for &v in &column {
                        hist[v as usize] += 1;
                    }
                }
            }
        }
    }
    out
}

/// Space-by-range weighted mean, per channel.
fn bilateral(image: &RgbImage, radius: usize, sigma_space: f64, sigma_color: f64) -> RgbImage {
    let (w, h) = (image.width(), image.height());
    let size = 2 * radius + 1;
    let r = radius as isize;
    let mut space = vec![0.0f64; size * size];
    for j in 0..size {
        for i in 0..size {
            let (dx, dy) = ((i as isize - r) as f64, (j as isize - r) as f64);
            space[j * size + i] = libm::exp(-(dx * dx + dy * dy) / (2.0 * sigma_space * sigma_space));
        }
    }
    let mut range = [0.0f64; 256];
    for (d, v) in range.iter_mut().enumerate() {
        let d = d as f64;
        *v = libm::exp(-(d * d) / (2.0 * sigma_color * sigma_color));
    }

    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            let mut px = [0u8; 3];
            for (c, p) in px.iter_mut().enumerate() {
                let center = image.channel(x, y, c);
                let (mut num, mut den) = (0.0f64, 0.0f64);
                for j in 0..size {
                    let sy = reflect_index(y as isize + j as isize - r, h);
                    for i in 0..size {
                        let sx = reflect_index(x as isize + i as isize - r, w);
                        let v = image.channel(sx, sy, c);
                        let wgt = space[j * size + i] * range[center.abs_diff(v) as usize];
                        num += wgt * v as f64;
                        den += wgt;
                    }
                }
                *p = libm::floor(num / den + 0.5).clamp(0.0, 255.0) as u8;
            }
            out.put(x, y, px);
        }
    }
    out
}
