//! Independent reference implementations used by the integration tests.
//!
//! These are written for clarity, not speed: direct 2D loops, full sorts and
//! re-matching from scratch at every operating point.

#![allow(dead_code)]

use spotrot_core::camera::{AnnotationRecord, BBox2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spotrot_core::eval::{loss_gradients, loss_value, Detection, LossInputs, LossWeights};
use spotrot_core::image::RgbImage;
use spotrot_core::rotation::{ParkClass, UnitRotation};

// ---------------------------------------------------------------- filters

/// Mirror index into `0..n` without repeating the edge sample.
pub fn mirror(mut i: i64, n: i64) -> i64 {
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i;
        }
    }
}

fn sample(img: &RgbImage, x: i64, y: i64, c: usize) -> u8 {
    let sx = mirror(x, img.width() as i64) as usize;
    let sy = mirror(y, img.height() as i64) as usize;
    img.get(sx, sy)[c]
}

/// Direct 2D convolution with integer weights, rounded half up.
pub fn convolve_oracle(img: &RgbImage, kernel: &[Vec<u64>]) -> RgbImage {
    let size = kernel.len() as i64;
    let r = size / 2;
    let den: u64 = kernel.iter().flatten().sum();
    let mut out = img.clone();
    for y in 0..img.height() as i64 {
        for x in 0..img.width() as i64 {
            let mut px = [0u8; 3];
            for (c, p) in px.iter_mut().enumerate() {
                let mut acc = 0u64;
                for j in 0..size {
                    for i in 0..size {
                        acc += kernel[j as usize][i as usize] * sample(img, x + i - r, y + j - r, c) as u64;
                    }
                }
                *p = ((acc + den / 2) / den).min(255) as u8;
            }
            out.put(x as usize, y as usize, px);
        }
    }
    out
}

pub fn box_weights(size: usize) -> Vec<Vec<u64>> {
    vec![vec![1; size]; size]
}

/// Outer product of the 1D Gaussian taps quantized to a 4096 scale.
pub fn gaussian_weights(size: usize) -> Vec<Vec<u64>> {
    let sigma = 0.3 * ((size as f64 - 1.0) * 0.5 - 1.0) + 0.8;
    let r = (size / 2) as f64;
    let g: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            libm::exp(-(d * d) / (2.0 * sigma * sigma))
        })
        .collect();
    let sum: f64 = g.iter().sum();
    let taps: Vec<u64> = g.iter().map(|v| (libm::round(v / sum * 4096.0) as u64).max(1)).collect();
    taps.iter().map(|a| taps.iter().map(|b| a * b).collect()).collect()
}

/// Median by sorting the full window.
pub fn median_oracle(img: &RgbImage, size: usize) -> RgbImage {
    let r = (size / 2) as i64;
    let mut out = img.clone();
    for y in 0..img.height() as i64 {
        for x in 0..img.width() as i64 {
            let mut px = [0u8; 3];
            for (c, p) in px.iter_mut().enumerate() {
                let mut window = Vec::with_capacity(size * size);
                for j in -r..=r {
                    for i in -r..=r {
                        window.push(sample(img, x + i, y + j, c));
                    }
                }
                window.sort_unstable();
                *p = window[window.len() / 2];
            }
            out.put(x as usize, y as usize, px);
        }
    }
    out
}

/// Bilateral filter evaluated straight from its weight formula.
pub fn bilateral_oracle(img: &RgbImage, size: usize, sigma_space: f64, sigma_color: f64) -> RgbImage {
    let r = (size / 2) as i64;
    let mut out = img.clone();
    for y in 0..img.height() as i64 {
        for x in 0..img.width() as i64 {
            let mut px = [0u8; 3];
            for (c, p) in px.iter_mut().enumerate() {
                let center = sample(img, x, y, c) as f64;
                let (mut num, mut den) = (0.0f64, 0.0f64);
                for j in -r..=r {
                    for i in -r..=r {
                        let v = sample(img, x + i, y + j, c) as f64;
                        let (dx, dy) = (i as f64, j as f64);
                        let ws = libm::exp(-(dx * dx + dy * dy) / (2.0 * sigma_space * sigma_space));
                        let d = (v - center).abs();
                        let wr = libm::exp(-(d * d) / (2.0 * sigma_color * sigma_color));
                        let w = ws * wr;
                        num += w * v;
                        den += w;
                    }
                }
                *p = libm::floor(num / den + 0.5).clamp(0.0, 255.0) as u8;
            }
            out.put(x as usize, y as usize, px);
        }
    }
    out
}

pub fn constant_fixture() -> RgbImage {
    RgbImage::new(64, 64, [90, 140, 200]).unwrap()
}

pub fn impulse_fixture() -> RgbImage {
    let mut img = RgbImage::new(64, 64, [0, 0, 0]).unwrap();
    img.put(32, 32, [255, 255, 255]);
    img.put(0, 0, [255, 0, 128]);
    img
}

pub fn gradient_fixture() -> RgbImage {
    let mut img = RgbImage::new(64, 64, [0, 0, 0]).unwrap();
    for y in 0..64 {
        for x in 0..64 {
            img.put(x, y, [(x * 4) as u8, (y * 4) as u8, ((x + y) * 2) as u8]);
        }
    }
    img
}

pub fn filter_fixtures() -> Vec<(&'static str, RgbImage)> {
    vec![
        ("constant", constant_fixture()),
        ("impulse", impulse_fixture()),
        ("gradient", gradient_fixture()),
    ]
}

// ---------------------------------------------------------------- metrics

pub fn corner_iou(a: &BBox2D, b: &BBox2D) -> f64 {
    let ix = (a.cx + a.w / 2.0).min(b.cx + b.w / 2.0) - (a.cx - a.w / 2.0).max(b.cx - b.w / 2.0);
    let iy = (a.cy + a.h / 2.0).min(b.cy + b.h / 2.0) - (a.cy - a.h / 2.0).max(b.cy - b.h / 2.0);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// Greedy matching over the detections flagged in `keep`.
/// Returns, per detection, the matched truth index.
pub fn greedy(dets: &[Detection], keep: &[bool], truths: &[AnnotationRecord], thr: f64) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| keep[i]).collect();
    order.sort_by(|&a, &b| dets[b].confidence.partial_cmp(&dets[a].confidence).unwrap().then(a.cmp(&b)));
    let mut used = vec![false; truths.len()];
    let mut out = vec![None; dets.len()];
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (t, truth) in truths.iter().enumerate() {
            if used[t] || truth.class != dets[d].class {
                continue;
            }
            let v = corner_iou(&dets[d].bbox, &truth.bbox);
            if v < thr {
                continue;
            }
            match best {
                Some((_, bv)) if bv >= v => {}
                _ => best = Some((t, v)),
            }
        }
        if let Some((t, _)) = best {
            used[t] = true;
            out[d] = Some(t);
        }
    }
    out
}

/// True positives of `class` when only detections with confidence >= `t` count.
fn tp_at(dets: &[Vec<Detection>], truths: &[Vec<AnnotationRecord>], thr: f64, t: f64, class: Option<ParkClass>) -> (usize, usize) {
    let (mut kept, mut tp) = (0, 0);
    for (d, g) in dets.iter().zip(truths) {
        let keep: Vec<bool> = d.iter().map(|x| x.confidence >= t).collect();
        let m = greedy(d, &keep, g, thr);
        for (i, x) in d.iter().enumerate() {
            if keep[i] && class.is_none_or(|c| c == x.class) {
                kept += 1;
                tp += m[i].is_some() as usize;
            }
        }
    }
    (kept, tp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub per_class: [Option<f64>; 3],
    pub map: Option<f64>,
    pub rotation_mse: Option<f64>,
    /// `(threshold, precision, recall, f1)` at 101 thresholds.
    pub curve: Vec<(f64, f64, f64, f64)>,
}

/// Evaluation by enumeration: every operating point is recomputed from a
/// fresh matching of the detections above it. Confidences within a class
/// must be distinct.
pub fn eval_oracle(dets: &[Vec<Detection>], truths: &[Vec<AnnotationRecord>], thr: f64) -> OracleReport {
    let mut per_class = [None; 3];
    for class in ParkClass::ALL {
        let n_truth: usize = truths.iter().flatten().filter(|t| t.class == class).count();
        if n_truth == 0 {
            continue;
        }
        let mut confs: Vec<f64> = dets.iter().flatten().filter(|d| d.class == class).map(|d| d.confidence).collect();
        confs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // one operating point per detection, highest confidence first
        let points: Vec<(f64, f64)> = confs
            .iter()
            .map(|&t| {
                let (kept, tp) = tp_at(dets, truths, thr, t, Some(class));
                (tp as f64 / kept as f64, tp as f64 / n_truth as f64)
            })
            .collect();
        let mut levels: Vec<f64> = points.iter().map(|p| p.1).filter(|&r| r > 0.0).collect();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        let mut ap = 0.0;
        let mut prev = 0.0;
        for r in levels {
            let best = points.iter().filter(|p| p.1 >= r).map(|p| p.0).fold(0.0, f64::max);
            ap += (r - prev) * best;
            prev = r;
        }
        per_class[class.index()] = Some(ap.clamp(0.0, 1.0));
    }
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    let map = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);

    let mut sq = Vec::new();
    for (d, g) in dets.iter().zip(truths) {
        let m = greedy(d, &vec![true; d.len()], g, thr);
        for (i, t) in m.iter().enumerate() {
            if let Some(t) = t {
                let dy = d[i].ry_u.value() - g[*t].ry_u.value();
                let dz = d[i].rz_u.value() - g[*t].rz_u.value();
                sq.push((dy * dy + dz * dz) / 2.0);
            }
        }
    }
    let rotation_mse = (!sq.is_empty()).then(|| sq.iter().sum::<f64>() / sq.len() as f64);

    let n_truth: usize = truths.iter().map(Vec::len).sum();
    let curve = (0..=100)
        .map(|i| {
            let t = i as f64 / 100.0;
            let (kept, tp) = tp_at(dets, truths, thr, t, None);
            let p = if kept > 0 { tp as f64 / kept as f64 } else { 0.0 };
            let r = if n_truth > 0 { tp as f64 / n_truth as f64 } else { 0.0 };
            let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            (t, p, r, f1)
        })
        .collect();
    OracleReport { per_class, map, rotation_mse, curve }
}

pub fn truth(class: ParkClass, cx: f64, cy: f64, w: f64, h: f64, ry_u: f64, rz_u: f64) -> AnnotationRecord {
    AnnotationRecord {
        class,
        bbox: BBox2D::new(cx, cy, w, h).unwrap(),
        ry_u: UnitRotation::new(ry_u).unwrap(),
        rz_u: UnitRotation::new(rz_u).unwrap(),
    }
}

pub fn det(class: ParkClass, cx: f64, cy: f64, w: f64, h: f64, ry_u: f64, rz_u: f64, conf: f64) -> Detection {
    Detection::from_record(&truth(class, cx, cy, w, h, ry_u, rz_u), conf)
}

pub type MetricFixture = (&'static str, Vec<Vec<Detection>>, Vec<Vec<AnnotationRecord>>);

/// Five small hand-built evaluation cases.
pub fn metric_fixtures() -> Vec<MetricFixture> {
    use ParkClass::{Fallen, Parked, Rotated};
    vec![
        (
            "perfect",
            vec![vec![
                det(Parked, 0.2, 0.3, 0.1, 0.2, 0.5, 0.5, 0.9),
                det(Rotated, 0.5, 0.5, 0.2, 0.2, 0.5, 0.3, 0.8),
                det(Fallen, 0.8, 0.7, 0.2, 0.1, 0.25, 0.9, 0.7),
            ]],
            vec![vec![
                truth(Parked, 0.2, 0.3, 0.1, 0.2, 0.5, 0.5),
                truth(Rotated, 0.5, 0.5, 0.2, 0.2, 0.5, 0.3),
                truth(Fallen, 0.8, 0.7, 0.2, 0.1, 0.25, 0.9),
            ]],
        ),
        (
            "duplicates and false positives",
            vec![vec![
                det(Parked, 0.9, 0.9, 0.1, 0.1, 0.5, 0.5, 0.95),
                det(Parked, 0.2, 0.3, 0.1, 0.2, 0.52, 0.47, 0.85),
                det(Parked, 0.21, 0.3, 0.1, 0.2, 0.5, 0.5, 0.80),
                det(Parked, 0.6, 0.3, 0.1, 0.2, 0.49, 0.55, 0.40),
                det(Parked, 0.61, 0.32, 0.1, 0.2, 0.5, 0.5, 0.33),
            ]],
            vec![vec![
                truth(Parked, 0.2, 0.3, 0.1, 0.2, 0.5, 0.5),
                truth(Parked, 0.6, 0.3, 0.1, 0.2, 0.5, 0.5),
                truth(Parked, 0.4, 0.8, 0.1, 0.2, 0.5, 0.5),
            ]],
        ),
        (
            "class confusion and misses",
            vec![vec![
                det(Rotated, 0.2, 0.3, 0.1, 0.2, 0.5, 0.2, 0.91),
                det(Parked, 0.5, 0.5, 0.2, 0.2, 0.5, 0.5, 0.62),
                det(Fallen, 0.5, 0.5, 0.2, 0.2, 0.75, 0.5, 0.27),
            ]],
            vec![vec![
                truth(Parked, 0.2, 0.3, 0.1, 0.2, 0.5, 0.5),
                truth(Fallen, 0.5, 0.5, 0.2, 0.2, 0.75, 0.6),
                truth(Rotated, 0.8, 0.2, 0.1, 0.1, 0.5, 0.1),
            ]],
        ),
        (
            "overlap near the threshold across images",
            vec![
                vec![
                    // IoU about 0.55: match
                    det(Parked, 0.2 + 0.029, 0.5, 0.1, 0.2, 0.5, 0.45, 0.77),
                    // IoU about 0.43: no match
                    det(Rotated, 0.5 + 0.04, 0.5, 0.1, 0.2, 0.5, 0.2, 0.66),
                    det(Rotated, 0.5, 0.5, 0.1, 0.2, 0.5, 0.25, 0.58),
                    det(Fallen, 0.8, 0.5, 0.15, 0.1, 0.24, 0.5, 0.49),
                ],
                vec![
                    det(Parked, 0.3, 0.3, 0.2, 0.2, 0.5, 0.5, 0.88),
                    det(Parked, 0.7, 0.7, 0.2, 0.2, 0.5, 0.5, 0.11),
                    det(Fallen, 0.1, 0.9, 0.1, 0.1, 0.76, 0.5, 0.52),
                    det(Rotated, 0.5, 0.1, 0.1, 0.1, 0.5, 0.9, 0.35),
                    det(Fallen, 0.5, 0.5, 0.3, 0.3, 0.25, 0.5, 0.05),
                    det(Parked, 0.9, 0.1, 0.1, 0.1, 0.5, 0.5, 0.995),
                ],
            ],
            vec![
                vec![
                    truth(Parked, 0.2, 0.5, 0.1, 0.2, 0.5, 0.5),
                    truth(Rotated, 0.5, 0.5, 0.1, 0.2, 0.5, 0.2),
                    truth(Fallen, 0.8, 0.5, 0.15, 0.1, 0.25, 0.5),
                ],
                vec![
                    truth(Parked, 0.3, 0.3, 0.2, 0.2, 0.5, 0.5),
                    truth(Parked, 0.7, 0.7, 0.2, 0.2, 0.5, 0.5),
                    truth(Rotated, 0.5, 0.1, 0.1, 0.1, 0.5, 0.8),
                ],
            ],
        ),
        (
            "empty images and a class without truths",
            vec![
                vec![
                    det(Parked, 0.5, 0.5, 0.2, 0.2, 0.5, 0.5, 0.9),
                    det(Fallen, 0.2, 0.2, 0.2, 0.2, 0.25, 0.5, 0.8),
                ],
                vec![],
                vec![det(Parked, 0.4, 0.4, 0.2, 0.2, 0.5, 0.4, 0.7)],
            ],
            vec![
                vec![],
                vec![truth(Parked, 0.5, 0.5, 0.2, 0.2, 0.5, 0.5)],
                vec![
                    truth(Parked, 0.4, 0.4, 0.2, 0.2, 0.5, 0.5),
                    truth(Rotated, 0.8, 0.8, 0.1, 0.1, 0.5, 0.3),
                ],
            ],
        ),
    ]
}

// ---------------------------------------------------------------- calculus

/// Central difference of `f` at `x` along coordinate `i`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut a = x.to_vec();
    let mut b = x.to_vec();
    a[i] += h;
    b[i] -= h;
    (f(&a) - f(&b)) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|, floor)`; the floor keeps near-zero gradients
/// from turning rounding noise into a large ratio.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Loss total with the eight differentiable inputs taken from `x`.
pub fn loss_fn(x: &[f64], base: &LossInputs, w: &LossWeights) -> f64 {
    let inputs = LossInputs {
        p_obj: x[0],
        p_cls: x[1],
        pred_box: [x[2], x[3], x[4], x[5]],
        pred_rot: [x[6], x[7]],
        ..*base
    };
    loss_value(&inputs, w).unwrap().total
}

/// Distance of the predicted box from the places where the loss has kinks.
pub fn kink_distance(p: &[f64; 4], t: &BBox2D) -> f64 {
    let pe = [p[0] - p[2] / 2.0, p[1] - p[3] / 2.0, p[0] + p[2] / 2.0, p[1] + p[3] / 2.0];
    let (x0, y0, x1, y1) = t.corners();
    let te = [x0, y0, x1, y1];
    let mut d = f64::INFINITY;
    for i in 0..4 {
        d = d.min((pe[i] - te[i]).abs());
    }
    // touching edges: opposite sides coincide
    d = d.min((pe[0] - te[2]).abs()).min((pe[2] - te[0]).abs());
    d = d.min((pe[1] - te[3]).abs()).min((pe[3] - te[1]).abs());
    d
}

pub fn random_loss_inputs(rng: &mut ChaCha8Rng) -> LossInputs {
    let t = BBox2D::new(rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7), rng.gen_range(0.1..0.4), rng.gen_range(0.1..0.4)).unwrap();
    LossInputs {
        p_obj: rng.gen_range(0.02..0.98),
        y_obj: rng.gen(),
        p_cls: rng.gen_range(0.02..0.98),
        y_cls: rng.gen(),
        pred_box: [
            t.cx + rng.gen_range(-0.15..0.15),
            t.cy + rng.gen_range(-0.15..0.15),
            (t.w + rng.gen_range(-0.1..0.1)).max(0.03),
            (t.h + rng.gen_range(-0.1..0.1)).max(0.03),
        ],
        truth_box: t,
        pred_rot: [rng.gen(), rng.gen()],
        truth_rot: [rng.gen(), rng.gen()],
    }
}

/// Worst relative error between analytic and central-difference gradients
/// over `n` random samples, skipping inputs within 1e-3 of a kink.
pub fn worst_gradient_error(n: usize, seed: u64) -> f64 {
    let w = LossWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < n {
        let inp = random_loss_inputs(&mut rng);
        if kink_distance(&inp.pred_box, &inp.truth_box) < 1e-3 {
            continue;
        }
        let (_, g) = loss_gradients(&inp, &w).unwrap();
        let analytic = [g.d_p_obj, g.d_p_cls, g.d_pred_box[0], g.d_pred_box[1], g.d_pred_box[2], g.d_pred_box[3], g.d_pred_rot[0], g.d_pred_rot[1]];
        let x = [inp.p_obj, inp.p_cls, inp.pred_box[0], inp.pred_box[1], inp.pred_box[2], inp.pred_box[3], inp.pred_rot[0], inp.pred_rot[1]];
        for (i, a) in analytic.iter().enumerate() {
            let num = central_diff(|v| loss_fn(v, &inp, &w), &x, i, 1e-6);
            worst = worst.max(rel_err(*a, num, 1e-3));
        }
        checked += 1;
    }
    worst
}
