//! SVG form of the dial overlay, built from the same shapes as the raster
//! output.

use std::fmt::Write;

use spotrot_core::image::Rgb;
use spotrot_core::overlay::{glyph, Shape, GLYPH_H, GLYPH_W};

fn color(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// SVG document of `shapes` over an optional background image reference.
pub fn overlay_svg(shapes: &[Shape], image_wh: (usize, usize), background_href: Option<&str>) -> String {
    let (w, h) = image_wh;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    if let Some(href) = background_href {
        let href = href.replace('&', "&amp;").replace('"', "&quot;").replace('<', "&lt;");
        let _ = writeln!(s, r#"<image href="{href}" x="0" y="0" width="{w}" height="{h}"/>"#);
    }
    for shape in shapes {
        match shape {
            Shape::Rect { x0, y0, x1, y1, color: c } => {
                let _ = writeln!(
                    s,
                    r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                    x1 - x0,
                    y1 - y0,
                    color(*c)
                );
            }
            Shape::Circle { cx, cy, r, color: c } => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{cx}" cy="{cy}" r="{r}" fill="none" stroke="{}" stroke-width="1"/>"#,
                    color(*c)
                );
            }
            Shape::Arc { cx, cy, r, sweep_deg, color: c } => {
                if *sweep_deg == 0.0 {
                    continue;
                }
                let t = sweep_deg.to_radians();
                let (ex, ey) = (cx + r * t.sin(), cy - r * t.cos());
                let large = (sweep_deg.abs() > 180.0) as u8;
                let sweep = (*sweep_deg > 0.0) as u8;
                let _ = writeln!(
                    s,
                    r#"<path d="M {cx} {} A {r} {r} 0 {large} {sweep} {ex} {ey}" fill="none" stroke="{}" stroke-width="2"/>"#,
                    cy - r,
                    color(*c)
                );
            }
            Shape::Line { x0, y0, x1, y1, color: c } => {
                let _ = writeln!(
                    s,
                    r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="{}" stroke-width="1"/>"#,
                    color(*c)
                );
            }
            Shape::Text { x, y, text, color: c } => {
                // same bitmap font as the raster output, one rect per lit cell
                let _ = writeln!(s, r#"<g fill="{}">"#, color(*c));
                let (x, y) = (x.round() as i64, y.round() as i64);
                for (i, ch) in text.chars().enumerate() {
                    let gx = x + (i * (GLYPH_W + 1)) as i64;
                    for (dy, row) in glyph(ch).iter().enumerate().take(GLYPH_H) {
                        for dx in 0..GLYPH_W {
                            if row & (0b100 >> dx) != 0 {
                                let _ = writeln!(
                                    s,
                                    r#"<rect x="{}" y="{}" width="1" height="1"/>"#,
                                    gx + dx as i64,
                                    y + dy as i64
                                );
                            }
                        }
                    }
                }
                let _ = writeln!(s, "</g>");
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
