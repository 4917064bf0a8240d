//! Image decoding/encoding and atomic file writes.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::ImageFormat;
use spotrot_core::image::RgbImage;
use spotrot_core::render::OutputFormat;

use crate::{CliError, CliResult};

pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

pub fn format_for_path(path: &Path) -> OutputFormat {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(e) if e == "jpg" || e == "jpeg" => OutputFormat::Jpeg { quality: 95 },
        _ => OutputFormat::Png,
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> CliResult<RgbImage> {
    let img = image::load_from_memory(bytes).map_err(|e| CliError::input(path, e.to_string()))?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    RgbImage::from_raw(w, h, rgb.into_raw()).map_err(|e| CliError::input(path, e.to_string()))
}

pub fn read_image(path: &Path) -> CliResult<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| CliError::input(path, e.to_string()))?;
    decode(&bytes, path)
}

pub fn encode(img: &RgbImage, format: OutputFormat) -> CliResult<Vec<u8>> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let buf = image::RgbImage::from_raw(w, h, img.as_raw().to_vec())
        .ok_or_else(|| CliError::Internal("image buffer size mismatch".into()))?;
    let mut out = Cursor::new(Vec::new());
    let res = match format {
        OutputFormat::Png => buf.write_to(&mut out, ImageFormat::Png),
        OutputFormat::Jpeg { quality } => buf.write_with_encoder(JpegEncoder::new_with_quality(&mut out, quality)),
    };
    res.map_err(|e| CliError::Internal(format!("encoding failed: {e}")))?;
    Ok(out.into_inner())
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Internal(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}
