//! Label and prediction text files.
//!
//! Labels hold one object per line: `class_id cx cy w h ry_u rz_u`, every
//! value after the class id printed with six decimals. Prediction files use
//! the same columns with a trailing confidence.

use std::path::Path;

use spotrot_core::camera::{AnnotationRecord, BBox2D};
use spotrot_core::eval::Detection;
use spotrot_core::rotation::{ParkClass, UnitRotation};

use crate::{CliError, CliResult};

pub const LABEL_FIELDS: usize = 7;
pub const PREDICTION_FIELDS: usize = 8;

pub fn format_label_line(r: &AnnotationRecord) -> String {
    let b = &r.bbox;
    format!(
        "{} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
        r.class.id(),
        b.cx,
        b.cy,
        b.w,
        b.h,
        r.ry_u.value(),
        r.rz_u.value()
    )
}

pub fn format_prediction_line(d: &Detection) -> String {
    let rec = AnnotationRecord {
        class: d.class,
        bbox: d.bbox,
        ry_u: d.ry_u,
        rz_u: d.rz_u,
    };
    format!("{} {:.6}", format_label_line(&rec), d.confidence)
}

pub fn format_labels(records: &[AnnotationRecord]) -> String {
    records.iter().map(|r| format_label_line(r) + "\n").collect()
}

pub fn format_predictions(dets: &[Detection]) -> String {
    dets.iter().map(|d| format_prediction_line(d) + "\n").collect()
}

/// Parsed contents of a label-style file.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectFile {
    Labels(Vec<AnnotationRecord>),
    Predictions(Vec<Detection>),
}

impl ObjectFile {
    pub fn is_empty(&self) -> bool {
        match self {
            ObjectFile::Labels(v) => v.is_empty(),
            ObjectFile::Predictions(v) => v.is_empty(),
        }
    }
}

fn parse_line(path: &Path, line_no: usize, line: &str, fields: usize) -> CliResult<(AnnotationRecord, Option<f64>)> {
    let err = |msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line: line_no,
        msg,
    };
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != fields {
        return Err(err(format!("expected {fields} fields, found {}", parts.len())));
    }
    let id: u8 = parts[0]
        .parse()
        .map_err(|_| err(format!("bad class id {:?}", parts[0])))?;
    let class = ParkClass::from_id(id).ok_or_else(|| err(format!("unknown class id {id}")))?;
    let mut v = [0.0f64; 7];
    for (k, s) in parts[1..].iter().enumerate() {
        v[k] = s.parse().map_err(|_| err(format!("bad number {s:?}")))?;
    }
    let bbox = BBox2D::new(v[0], v[1], v[2], v[3]).map_err(|e| err(format!("bad box: {e}")))?;
    let ry_u = UnitRotation::new(v[4]).map_err(|e| err(format!("bad ry_u: {e}")))?;
    let rz_u = UnitRotation::new(v[5]).map_err(|e| err(format!("bad rz_u: {e}")))?;
    let conf = (fields == PREDICTION_FIELDS).then_some(v[6]);
    if let Some(c) = conf {
        if !(0.0..=1.0).contains(&c) {
            return Err(err(format!("confidence {c} outside [0, 1]")));
        }
    }
    Ok((AnnotationRecord { class, bbox, ry_u, rz_u }, conf))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses a label file; `path` is only used in error messages.
pub fn parse_labels(text: &str, path: &Path) -> CliResult<Vec<AnnotationRecord>> {
    content_lines(text)
        .map(|(n, l)| parse_line(path, n, l, LABEL_FIELDS).map(|(r, _)| r))
        .collect()
}

pub fn parse_predictions(text: &str, path: &Path) -> CliResult<Vec<Detection>> {
    content_lines(text)
        .map(|(n, l)| {
            parse_line(path, n, l, PREDICTION_FIELDS).map(|(r, c)| Detection::from_record(&r, c.unwrap_or(1.0)))
        })
        .collect()
}

/// Accepts either format, decided by the field count of the first object.
pub fn parse_objects(text: &str, path: &Path) -> CliResult<ObjectFile> {
    let first = content_lines(text).next().map(|(_, l)| l.split_whitespace().count());
    match first {
        Some(PREDICTION_FIELDS) => parse_predictions(text, path).map(ObjectFile::Predictions),
        _ => parse_labels(text, path).map(ObjectFile::Labels),
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
