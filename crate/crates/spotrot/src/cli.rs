//! Command-line front end.
//!
//! Every command writes into a staged directory that is moved to `--out`
//! only when the command finishes, together with a `run_manifest.json`.
//! Exit codes: 0 success, 1 bad input (including skipped files), 2 internal
//! failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use spotrot_core::eval::{eval_dataset, EvalReport, DEFAULT_IOU_THRESH};
use spotrot_core::filter::{smooth_preset, SmoothPreset};
use spotrot_core::overlay::{draw_overlay, overlay_shapes, DialStyle, OverlayItem};
use spotrot_core::rotation::ParkClass;
use spotrot_core::scene::assemble_dataset;

use crate::config::{ConfigFile, ResolvedConfig, DEFAULT_IMAGES};
use crate::dataset::{build_sample, stem, ManifestLine, IMAGES_DIR, LABELS_DIR, MANIFEST_FILE, SCENES_DIR};
use crate::export::export_scene;
use crate::imageio::{encode, format_for_path, is_image_path, read_image, write_atomic};
use crate::labels::{format_labels, parse_labels, parse_objects, read_text, ObjectFile};
use crate::runlog::{new_manifest, Staging};
use crate::svg::overlay_svg;
use crate::{CliError, CliResult};

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "SPOTROT_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "spotrot", version, about = "Synthetic bike-parking datasets with object-to-spot rotation labels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate images, labels and scene documents.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// challenging | regular-free | regular-vertical-free | regular-restricted
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of images.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a smoothing filter to every image in a directory.
    Smooth {
        input: PathBuf,
        /// none | conv5 | lowpass3 | gauss5 | median5 | bilateral5
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score prediction files against label files with the same stems.
    Eval {
        predictions: PathBuf,
        truths: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESH)]
        iou: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw boxes and rotation dials over images.
    Viz {
        images: PathBuf,
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG overlay per image.
        #[arg(long)]
        svg: bool,
    },
    /// Class and object-count statistics of a dataset or label directory.
    Stats {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub out_dir: PathBuf,
    /// Inputs that were skipped; a nonzero count makes the exit code 1.
    pub skipped: usize,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(o) if o.skipped > 0 => {
            eprintln!("{} input(s) skipped; output written to {}", o.skipped, o.out_dir.display());
            1
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    let pool = worker_pool()?;
    pool.install(|| match cli.command {
        Command::Generate { config, preset, seed, n, out } => {
            cmd_generate(config.as_deref(), preset.as_deref(), seed, n, &out)
        }
        Command::Smooth { input, preset, out } => cmd_smooth(&input, &preset, &out),
        Command::Eval { predictions, truths, iou, out } => cmd_eval(&predictions, &truths, iou, &out),
        Command::Viz { images, labels, out, svg } => cmd_viz(&images, &labels, &out, svg),
        Command::Stats { input, out } => cmd_stats(&input, &out),
    })
}

fn worker_pool() -> CliResult<rayon::ThreadPool> {
    let n = match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => return Err(CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn params_hash(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Regular files in `dir` accepted by `keep`, sorted by name.
fn list_files(dir: &Path, keep: impl Fn(&Path) -> bool) -> CliResult<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::input(dir, e.to_string()))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() && keep(&path) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn is_txt(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "txt")
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn cmd_generate(
    config: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
    n: Option<u64>,
    out: &Path,
) -> CliResult<Outcome> {
    let file = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = ResolvedConfig::resolve(&file, preset)?;
    let master_seed = seed.or(file.seed).unwrap_or(0);
    let n = n.or(file.n).unwrap_or(DEFAULT_IMAGES);
    let manifest = assemble_dataset(&cfg.generation, n, master_seed)?;

    let staging = Staging::create(out)?;
    let images = staging.subdir(IMAGES_DIR)?;
    let labels = staging.subdir(LABELS_DIR)?;
    let scenes = staging.subdir(SCENES_DIR)?;
    let ext = cfg.image_extension();

    let lines: Vec<ManifestLine> = manifest
        .entries
        .par_iter()
        .map(|e| -> CliResult<ManifestLine> {
            let sample = build_sample(&cfg, e.seed)?;
            let s = stem(e.index, n);
            let line = ManifestLine {
                index: e.index,
                image_path: format!("{IMAGES_DIR}/{s}.{ext}"),
                label_path: format!("{LABELS_DIR}/{s}.txt"),
                scene_path: format!("{SCENES_DIR}/{s}.json"),
                split: e.split.name().to_string(),
                seed: e.seed,
            };
            write_atomic(&images.join(format!("{s}.{ext}")), &encode(&sample.image, cfg.render.format)?)?;
            write_atomic(&labels.join(format!("{s}.txt")), format_labels(&sample.records).as_bytes())?;
            write_atomic(&scenes.join(format!("{s}.json")), export_scene(&sample.scene, &sample.rig).as_bytes())?;
            Ok(line)
        })
        .collect::<CliResult<_>>()?;

    let mut text = String::new();
    for l in &lines {
        text.push_str(&serde_json::to_string(l).map_err(|e| CliError::Internal(e.to_string()))?);
        text.push('\n');
    }
    write_atomic(&staging.path().join(MANIFEST_FILE), text.as_bytes())?;
    write_json(&staging.path().join("config.json"), &cfg)?;
    let (train, test) = manifest.split_counts();
    log::info!("generated {n} images ({train} train / {test} test)");
    let out_dir = staging.commit(new_manifest("generate", cfg.hash(), Some(master_seed)))?;
    Ok(Outcome { out_dir, skipped: 0 })
}

pub fn cmd_smooth(input: &Path, preset_name: &str, out: &Path) -> CliResult<Outcome> {
    let preset = SmoothPreset::from_name(preset_name).ok_or_else(|| {
        let known: Vec<&str> = SmoothPreset::ALL.iter().map(|p| p.name()).collect();
        CliError::Usage(format!("unknown smoothing preset {preset_name:?}; expected one of {}", known.join(", ")))
    })?;
    let files = list_files(input, is_image_path)?;
    let staging = Staging::create(out)?;
    let dir = staging.path().to_path_buf();

    let results: Vec<CliResult<bool>> = files
        .par_iter()
        .map(|path| {
            let target = dir.join(file_name(path));
            let bytes = match std::fs::read(path) {
                Ok(b) => b,
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    return Ok(false);
                }
            };
            if preset == SmoothPreset::None {
                write_atomic(&target, &bytes)?;
                return Ok(true);
            }
            let img = match crate::imageio::decode(&bytes, path) {
                Ok(i) => i,
                Err(e) => {
                    log::warn!("skipping {e}");
                    return Ok(false);
                }
            };
            let smoothed = smooth_preset(&img, preset)?;
            write_atomic(&target, &encode(&smoothed, format_for_path(path))?)?;
            Ok(true)
        })
        .collect();
    let mut skipped = 0;
    for r in results {
        skipped += usize::from(!r?);
    }
    let hash = params_hash(&serde_json::json!({ "command": "smooth", "preset": preset.name() }));
    let out_dir = staging.commit(new_manifest("smooth", hash, None))?;
    Ok(Outcome { out_dir, skipped })
}

/// Pairs `.txt` files of two directories by stem.
fn paired_stems(a: &Path, b: &Path) -> CliResult<Vec<(String, PathBuf, PathBuf)>> {
    let index = |dir: &Path| -> CliResult<BTreeMap<String, PathBuf>> {
        Ok(list_files(dir, is_txt)?.into_iter().map(|p| (file_stem(&p), p)).collect())
    };
    let (ma, mb) = (index(a)?, index(b)?);
    let only_a: Vec<&str> = ma.keys().filter(|k| !mb.contains_key(*k)).map(String::as_str).collect();
    let only_b: Vec<&str> = mb.keys().filter(|k| !ma.contains_key(*k)).map(String::as_str).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(CliError::Usage(format!(
            "unpaired files: only in {}: [{}]; only in {}: [{}]",
            a.display(),
            only_a.join(", "),
            b.display(),
            only_b.join(", ")
        )));
    }
    Ok(ma.into_iter().map(|(k, pa)| { let pb = mb[&k].clone(); (k, pa, pb) }).collect())
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    iou_thresh: f64,
    images: usize,
    map: Option<f64>,
    ap: BTreeMap<&'static str, Option<f64>>,
    rotation_mse: Option<f64>,
    matched_pairs: usize,
    detections: usize,
    truths: usize,
    stems: &'a [String],
}

fn curve_csv(report: &EvalReport, header: &str, row: impl Fn(&spotrot_core::eval::CurvePoint) -> String) -> String {
    let mut s = format!("{header}\n");
    for p in &report.curve {
        s.push_str(&row(p));
        s.push('\n');
    }
    s
}

pub fn cmd_eval(predictions: &Path, truths: &Path, iou: f64, out: &Path) -> CliResult<Outcome> {
    let pairs = paired_stems(predictions, truths)?;
    let mut all_dets = Vec::with_capacity(pairs.len());
    let mut all_truths = Vec::with_capacity(pairs.len());
    let mut stems = Vec::with_capacity(pairs.len());
    for (s, p, t) in &pairs {
        let dets = match parse_objects(&read_text(p)?, p)? {
            ObjectFile::Predictions(d) => d,
            ObjectFile::Labels(l) => l.iter().map(|r| spotrot_core::eval::Detection::from_record(r, 1.0)).collect(),
        };
        all_dets.push(dets);
        all_truths.push(parse_labels(&read_text(t)?, t)?);
        stems.push(s.clone());
    }
    let report = eval_dataset(&all_dets, &all_truths, iou)?;

    let staging = Staging::create(out)?;
    let dir = staging.path();
    let file = ReportFile {
        iou_thresh: report.iou_thresh,
        images: stems.len(),
        map: report.ap.map,
        ap: ParkClass::ALL.iter().map(|c| (c.name(), report.ap.per_class[c.index()])).collect(),
        rotation_mse: report.rotation_mse,
        matched_pairs: report.matched_pairs,
        detections: report.n_detections,
        truths: report.n_truths,
        stems: &stems,
    };
    write_json(&dir.join("report.json"), &file)?;
    let csvs = [
        ("precision_confidence.csv", curve_csv(&report, "confidence,precision", |p| format!("{:.2},{:.6}", p.threshold, p.precision))),
        ("recall_confidence.csv", curve_csv(&report, "confidence,recall", |p| format!("{:.2},{:.6}", p.threshold, p.recall))),
        ("f1_confidence.csv", curve_csv(&report, "confidence,f1", |p| format!("{:.2},{:.6}", p.threshold, p.f1))),
        ("precision_recall.csv", curve_csv(&report, "confidence,recall,precision", |p| {
            format!("{:.2},{:.6},{:.6}", p.threshold, p.recall, p.precision)
        })),
    ];
    for (name, text) in csvs {
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    match report.ap.map {
        Some(m) => println!("mAP@{iou}: {m:.6}"),
        None => println!("mAP@{iou}: undefined (no ground truth)"),
    }
    if let Some(mse) = report.rotation_mse {
        println!("rotation MSE: {mse:.6}");
    }
    let hash = params_hash(&serde_json::json!({ "command": "eval", "iou": iou }));
    let out_dir = staging.commit(new_manifest("eval", hash, None))?;
    Ok(Outcome { out_dir, skipped: 0 })
}

pub fn cmd_viz(images: &Path, labels: &Path, out: &Path, svg: bool) -> CliResult<Outcome> {
    let files = list_files(images, is_image_path)?;
    let label_files: BTreeMap<String, PathBuf> =
        list_files(labels, is_txt)?.into_iter().map(|p| (file_stem(&p), p)).collect();
    let image_stems: BTreeMap<String, &PathBuf> = files.iter().map(|p| (file_stem(p), p)).collect();
    let missing: Vec<&str> = image_stems.keys().filter(|s| !label_files.contains_key(*s)).map(String::as_str).collect();
    let orphans: Vec<&str> = label_files.keys().filter(|s| !image_stems.contains_key(*s)).map(String::as_str).collect();
    if !missing.is_empty() || !orphans.is_empty() {
        return Err(CliError::Usage(format!(
            "unpaired files: images without labels [{}]; labels without images [{}]",
            missing.join(", "),
            orphans.join(", ")
        )));
    }
    let style = DialStyle::default();
    let staging = Staging::create(out)?;
    let dir = staging.path().to_path_buf();
    files
        .par_iter()
        .map(|path| -> CliResult<()> {
            let lp = &label_files[&file_stem(path)];
            let items: Vec<OverlayItem> = match parse_objects(&read_text(lp)?, lp)? {
                ObjectFile::Labels(v) => v.iter().map(OverlayItem::from).collect(),
                ObjectFile::Predictions(v) => v.iter().map(OverlayItem::from).collect(),
            };
            if items.is_empty() {
                let bytes = std::fs::read(path).map_err(|e| CliError::input(path, e.to_string()))?;
                return write_atomic(&dir.join(file_name(path)), &bytes);
            }
            let img = read_image(path)?;
            let drawn = draw_overlay(&img, &items, &style)?;
            let s = file_stem(path);
            write_atomic(&dir.join(format!("{s}.png")), &encode(&drawn, spotrot_core::render::OutputFormat::Png)?)?;
            if svg {
                let shapes = overlay_shapes(&items, &style, (img.width(), img.height()));
                let href = std::fs::canonicalize(path).unwrap_or_else(|_| path.clone());
                let doc = overlay_svg(&shapes, (img.width(), img.height()), Some(&href.to_string_lossy()));
                write_atomic(&dir.join(format!("{s}.svg")), doc.as_bytes())?;
            }
            Ok(())
        })
        .collect::<CliResult<Vec<()>>>()?;
    let hash = params_hash(&serde_json::json!({ "command": "viz", "svg": svg }));
    let out_dir = staging.commit(new_manifest("viz", hash, None))?;
    Ok(Outcome { out_dir, skipped: 0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub images: usize,
    pub objects: usize,
    pub class_counts: BTreeMap<&'static str, usize>,
    pub class_fractions: BTreeMap<&'static str, f64>,
    pub objects_per_image_min: usize,
    pub objects_per_image_max: usize,
    pub objects_per_image_mean: f64,
    /// Split sizes, when a dataset manifest is present.
    pub splits: Option<BTreeMap<String, usize>>,
}

/// Statistics over a generated dataset directory or a bare label directory.
pub fn dataset_stats(input: &Path) -> CliResult<Stats> {
    let label_dir = if input.join(LABELS_DIR).is_dir() { input.join(LABELS_DIR) } else { input.to_path_buf() };
    let mut counts = [0usize; 3];
    let mut per_image = Vec::new();
    for p in list_files(&label_dir, is_txt)? {
        let classes: Vec<ParkClass> = match parse_objects(&read_text(&p)?, &p)? {
            ObjectFile::Labels(v) => v.iter().map(|r| r.class).collect(),
            ObjectFile::Predictions(v) => v.iter().map(|d| d.class).collect(),
        };
        for c in &classes {
            counts[c.index()] += 1;
        }
        per_image.push(classes.len());
    }
    let objects: usize = counts.iter().sum();
    let splits = match std::fs::read_to_string(input.join(MANIFEST_FILE)) {
        Ok(text) => {
            let mut m = BTreeMap::new();
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let l: ManifestLine = serde_json::from_str(line).map_err(|e| CliError::Parse {
                    path: input.join(MANIFEST_FILE),
                    line: i + 1,
                    msg: e.to_string(),
                })?;
                *m.entry(l.split).or_insert(0) += 1;
            }
            Some(m)
        }
        Err(_) => None,
    };
    Ok(Stats {
        images: per_image.len(),
        objects,
        class_counts: ParkClass::ALL.iter().map(|c| (c.name(), counts[c.index()])).collect(),
        class_fractions: ParkClass::ALL
            .iter()
            .map(|c| (c.name(), if objects > 0 { counts[c.index()] as f64 / objects as f64 } else { 0.0 }))
            .collect(),
        objects_per_image_min: per_image.iter().copied().min().unwrap_or(0),
        objects_per_image_max: per_image.iter().copied().max().unwrap_or(0),
        objects_per_image_mean: if per_image.is_empty() { 0.0 } else { objects as f64 / per_image.len() as f64 },
        splits,
    })
}

pub fn cmd_stats(input: &Path, out: &Path) -> CliResult<Outcome> {
    let stats = dataset_stats(input)?;
    let staging = Staging::create(out)?;
    write_json(&staging.path().join("stats.json"), &stats)?;
    println!("{}", serde_json::to_string_pretty(&stats).map_err(|e| CliError::Internal(e.to_string()))?);
    let hash = params_hash(&serde_json::json!({ "command": "stats" }));
    let out_dir = staging.commit(new_manifest("stats", hash, None))?;
    Ok(Outcome { out_dir, skipped: 0 })
}
