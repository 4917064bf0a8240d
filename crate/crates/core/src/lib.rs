//! Core algorithms for object-to-spot rotation data.
//!
//! Everything here is pure and allocation-only (`no_std` + `alloc`):
//!
//! - [`rotation`]: signed angle wrapping, the `[0, 1]` rotation codec, relative
//!   rotation and parking-class derivation.
//! - [`scene`]: seeded sampling of parking scenes and dataset manifests.
//! - [`camera`]: camera rigs, pinhole projection, 2D boxes and ground-truth records.
//! - [`render`]: a deterministic z-buffered software rasterizer.
//! - [`filter`]: smoothing filters used on real images.
//! - [`eval`]: multi-task loss terms with gradients, matching, AP and curves.
//! - [`overlay`]: nested-dial rotation overlays.
//!
//! File formats, image codecs and the command line live in the `spotrot` crate.
#![no_std]

extern crate alloc;

pub mod camera;
mod error;
pub mod eval;
pub mod filter;
pub mod geom;
pub mod image;
pub mod overlay;
pub mod render;
pub mod rotation;
pub mod scene;

pub use error::{Error, Result};
