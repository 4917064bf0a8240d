//! Nested-dial rotation overlays.
//!
//! Each object gets a class-colored box outline and two concentric dials
//! above it: the outer dial sweeps from 0° to the lean (y), the inner one from
//! 0° to the spot-relative heading (z). 0° points up and positive angles turn
//! clockwise on screen.
//!
//! Drawing goes through a flat list of [`Shape`]s so that raster and vector
//! outputs share the same geometry.

use alloc::string::String;
use alloc::vec::Vec;

use crate::camera::{AnnotationRecord, BBox2D};
use crate::eval::Detection;
use crate::image::{Rgb, RgbImage};
use crate::rotation::{from_unit, Angle, ParkClass};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DialStyle {
    pub outer_radius_px: f64,
    pub inner_radius_px: f64,
    /// Indexed by [`ParkClass::index`].
    pub class_colors: [Rgb; 3],
    pub ring_color: Rgb,
    pub text_color: Rgb,
}

impl Default for DialStyle {
    fn default() -> Self {
        Self {
            outer_radius_px: 16.0,
            inner_radius_px: 10.0,
            class_colors: [[0, 200, 0], [30, 90, 255], [255, 140, 0]],
            ring_color: [220, 220, 220],
            text_color: [255, 255, 255],
        }
    }
}

impl DialStyle {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius_px > 0.0 && self.inner_radius_px.is_finite()) {
            return Err(Error::InvalidConfig("inner dial radius must be positive"));
        }
        if !(self.outer_radius_px > self.inner_radius_px && self.outer_radius_px.is_finite()) {
            return Err(Error::InvalidConfig("inner dial radius must be below the outer radius"));
        }
        let c = &self.class_colors;
        if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
            return Err(Error::InvalidConfig("class colors must be distinct"));
        }
        Ok(())
    }

    pub fn color(&self, class: ParkClass) -> Rgb {
        self.class_colors[class.index()]
    }
}

/// Tip of a dial needle at `angle`, in pixel coordinates (y down).
pub fn dial_endpoint(center: (f64, f64), angle: Angle, radius_px: f64) -> (f64, f64) {
    let (s, c) = libm::sincos(angle.radians());
    (center.0 + radius_px * s, center.1 - radius_px * c)
}

/// What gets drawn for one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayItem {
    pub class: ParkClass,
    pub bbox: BBox2D,
    pub ry: Angle,
    pub rz: Angle,
}

impl From<&AnnotationRecord> for OverlayItem {
    fn from(r: &AnnotationRecord) -> Self {
        Self {
            class: r.class,
            bbox: r.bbox,
            ry: from_unit(r.ry_u),
            rz: from_unit(r.rz_u),
        }
    }
}

impl From<&Detection> for OverlayItem {
    fn from(d: &Detection) -> Self {
        Self {
            class: d.class,
            bbox: d.bbox,
            ry: from_unit(d.ry_u),
            rz: from_unit(d.rz_u),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Outline of the pixel rectangle `[x0, x1] x [y0, y1]`.
    Rect { x0: f64, y0: f64, x1: f64, y1: f64, color: Rgb },
    Circle { cx: f64, cy: f64, r: f64, color: Rgb },
    /// Arc from 0° clockwise to `sweep_deg` (negative sweeps go counter-clockwise).
    Arc { cx: f64, cy: f64, r: f64, sweep_deg: f64, color: Rgb },
    Line { x0: f64, y0: f64, x1: f64, y1: f64, color: Rgb },
    /// Top-left anchored label in the built-in 3x5 font.
    Text { x: f64, y: f64, text: String, color: Rgb },
}

pub const GLYPH_W: usize = 3;
pub const GLYPH_H: usize = 5;
const GLYPH_ADVANCE: usize = GLYPH_W + 1;

/// Rounds to whole degrees for labels; 180 and -180 are the same pose and
/// print as 180.
fn degree_label(prefix: char, a: Angle) -> String {
    let mut d = libm::round(a.degrees()) as i64;
    if d == -180 {
        d = 180;
    }
    alloc::format!("{prefix}{d}")
}

/// Geometry for all items on an image of the given size.
pub fn overlay_shapes(items: &[OverlayItem], style: &DialStyle, image_wh: (usize, usize)) -> Vec<Shape> {
    let (w, h) = (image_wh.0 as f64, image_wh.1 as f64);
    let mut out = Vec::with_capacity(items.len() * 9);
    let ro = style.outer_radius_px;
    for item in items {
        let color = style.color(item.class);
        let (x0, y0, x1, y1) = item.bbox.pixel_corners(image_wh);
        out.push(Shape::Rect { x0, y0, x1, y1, color });

        // dial sits above the box, pushed inside the frame when needed
        let cx = (0.5 * (x0 + x1)).clamp(ro + 1.0, (w - ro - 1.0).max(ro + 1.0));
        let cy = (y0 - ro - 2.0).clamp(ro + 1.0, (h - ro - 1.0).max(ro + 1.0));
        for (r, a) in [(ro, item.ry), (style.inner_radius_px, item.rz)] {
            out.push(Shape::Circle { cx, cy, r, color: style.ring_color });
            out.push(Shape::Arc { cx, cy, r, sweep_deg: a.degrees(), color });
            let (ex, ey) = dial_endpoint((cx, cy), a, r);
            out.push(Shape::Line { x0: cx, y0: cy, x1: ex, y1: ey, color });
        }
        let tx = cx + ro + 3.0;
        let ty = cy - ro;
        out.push(Shape::Text { x: tx, y: ty, text: degree_label('Y', item.ry), color: style.text_color });
        out.push(Shape::Text {
            x: tx,
            y: ty + (GLYPH_H + 2) as f64,
            text: degree_label('Z', item.rz),
            color: style.text_color,
        });
    }
    out
}

/// Draws the overlay on a copy of `image`. An empty item list returns an
/// identical copy.
pub fn draw_overlay(image: &RgbImage, items: &[OverlayItem], style: &DialStyle) -> Result<RgbImage> {
    style.validate()?;
    let mut out = image.clone();
    for s in overlay_shapes(items, style, (image.width(), image.height())) {
        draw_shape(&mut out, &s);
    }
    Ok(out)
}

fn px(v: f64) -> i64 {
    let r = libm::round(v);
    // keeps wildly out-of-frame geometry from overflowing the line walker
    r.clamp(-1.0e6, 1.0e6) as i64
}

pub fn draw_shape(img: &mut RgbImage, shape: &Shape) {
    match shape {
        Shape::Rect { x0, y0, x1, y1, color } => {
            let (a, b, c, d) = (px(*x0), px(*y0), px(*x1) - 1, px(*y1) - 1);
            for t in 0..2 {
                line(img, a, b + t, c, b + t, *color);
                line(img, a, d - t, c, d - t, *color);
                line(img, a + t, b, a + t, d, *color);
                line(img, c - t, b, c - t, d, *color);
            }
        }
        Shape::Circle { cx, cy, r, color } => arc_points(img, *cx, *cy, *r, 360.0, *color),
        Shape::Arc { cx, cy, r, sweep_deg, color } => {
            arc_points(img, *cx, *cy, *r, *sweep_deg, *color);
            arc_points(img, *cx, *cy, *r - 1.0, *sweep_deg, *color);
        }
        Shape::Line { x0, y0, x1, y1, color } => line(img, px(*x0), px(*y0), px(*x1), px(*y1), *color),
        Shape::Text { x, y, text, color } => {
            let (mut gx, gy) = (px(*x), px(*y));
            for ch in text.chars() {
                let rows = glyph(ch);
                for (dy, row) in rows.iter().enumerate() {
                    for dx in 0..GLYPH_W {
                        if row & (0b100 >> dx) != 0 {
                            img.put_clipped(gx + dx as i64, gy + dy as i64, *color);
                        }
                    }
                }
                gx += GLYPH_ADVANCE as i64;
            }
        }
    }
}

fn arc_points(img: &mut RgbImage, cx: f64, cy: f64, r: f64, sweep_deg: f64, color: Rgb) {
    if r <= 0.0 || sweep_deg == 0.0 {
        return;
    }
    // half-pixel arc-length steps leave no gaps
    let len = r * libm::fabs(sweep_deg).to_radians();
    let steps = libm::ceil(2.0 * len).max(1.0) as i64;
    for k in 0..=steps {
        let a = sweep_deg.to_radians() * k as f64 / steps as f64;
        let (s, c) = libm::sincos(a);
        img.put_clipped(px(cx + r * s), px(cy - r * c), color);
    }
}

/// Bresenham segment, clipped per pixel.
fn line(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    // skip most of a segment that runs far outside the image
    let (w, h) = (img.width() as i64, img.height() as i64);
    if (x0 < 0 && x1 < 0) || (y0 < 0 && y1 < 0) || (x0 >= w && x1 >= w) || (y0 >= h && y1 >= h) {
        return;
    }
    loop {
        img.put_clipped(x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// 3x5 bitmap rows, most significant bit on the left.
pub fn glyph(ch: char) -> [u8; GLYPH_H] {
    match ch {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        'Y' => [0b101, 0b101, 0b010, 0b010, 0b010],
        'Z' => [0b111, 0b001, 0b010, 0b100, 0b111],
        _ => [0; GLYPH_H],
    }
}
