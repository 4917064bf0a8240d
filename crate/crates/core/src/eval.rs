//! Multi-task loss terms, detection matching and evaluation metrics.
//!
//! Loss: objectness and class use binary cross-entropy, boxes use `1 - IoU`,
//! rotations use mean squared error on the `[0, 1]` targets. The total is a
//! plain weighted sum with raw (unnormalized) weights.
//!
//! Metrics: class-aware greedy matching by descending confidence, all-point
//! interpolated AP per class, and threshold sweeps of precision/recall/F1.
//! Rotation MSE is reported in normalized `[0, 1]` units over matched pairs.

use alloc::vec;
use alloc::vec::Vec;

use crate::camera::{AnnotationRecord, BBox2D};
use crate::rotation::{ParkClass, UnitRotation};
use crate::{Error, Result};

/// Probability clamp for BCE.
pub const BCE_EPS: f64 = 1e-7;

/// Number of confidence thresholds in a curve: 0.00, 0.01, ..., 1.00.
pub const CURVE_POINTS: usize = 101;

pub const DEFAULT_IOU_THRESH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossWeights {
    pub obj: f64,
    pub bbox: f64,
    pub cls: f64,
    pub ryz: f64,
}

impl Default for LossWeights {
    /// The best-performing weighting: objectness 0.7, box 0.05, class 0.3, rotation 0.05.
    fn default() -> Self {
        Self {
            obj: 0.7,
            bbox: 0.05,
            cls: 0.3,
            ryz: 0.05,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.obj, self.bbox, self.cls, self.ryz];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig("loss weights must be finite and >= 0"));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidConfig("loss weights must not all be zero"));
        }
        Ok(())
    }
}

/// Unweighted loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossTerms {
    pub obj: f64,
    /// `1 - IoU`.
    pub bbox: f64,
    pub cls: f64,
    pub ryz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub terms: LossTerms,
    pub total: f64,
}

pub fn total_loss(terms: LossTerms, w: &LossWeights) -> Result<LossBreakdown> {
    w.validate()?;
    for v in [terms.obj, terms.bbox, terms.cls, terms.ryz] {
        if !v.is_finite() {
            return Err(Error::NonFinite("loss term"));
        }
        if v < 0.0 {
            return Err(Error::OutOfRange {
                what: "loss term",
                value: v,
            });
        }
    }
    let total = w.obj * terms.obj + w.bbox * terms.bbox + w.cls * terms.cls + w.ryz * terms.ryz;
    Ok(LossBreakdown { terms, total })
}

fn xyxy(b: &[f64; 4]) -> [f64; 4] {
    [
        b[0] - 0.5 * b[2],
        b[1] - 0.5 * b[3],
        b[0] + 0.5 * b[2],
        b[1] + 0.5 * b[3],
    ]
}

/// IoU of two `(cx, cy, w, h)` boxes.
fn iou_raw(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let (a, b) = (xyxy(a), xyxy(b));
    let iw = a[2].min(b[2]) - a[0].max(b[0]);
    let ih = a[3].min(b[3]) - a[1].max(b[1]);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn iou(a: &BBox2D, b: &BBox2D) -> f64 {
    iou_raw(&[a.cx, a.cy, a.w, a.h], &[b.cx, b.cy, b.w, b.h])
}

pub fn bce(p: f64, y: bool) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y {
        -libm::log(p)
    } else {
        -libm::log(1.0 - p)
    }
}

/// Mean of the two squared rotation errors, in normalized units.
pub fn rotation_mse(pred: (UnitRotation, UnitRotation), truth: (UnitRotation, UnitRotation)) -> f64 {
    rotation_mse_raw([pred.0.value(), pred.1.value()], [truth.0.value(), truth.1.value()])
}

fn rotation_mse_raw(pred: [f64; 2], truth: [f64; 2]) -> f64 {
    let (dy, dz) = (pred[0] - truth[0], pred[1] - truth[1]);
    (dy * dy + dz * dz) / 2.0
}

/// Raw network-side quantities for one object, as differentiable inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossInputs {
    pub p_obj: f64,
    pub y_obj: bool,
    pub p_cls: f64,
    pub y_cls: bool,
    /// Predicted `(cx, cy, w, h)`.
    pub pred_box: [f64; 4],
    pub truth_box: BBox2D,
    /// Predicted `(ry_u, rz_u)`.
    pub pred_rot: [f64; 2],
    pub truth_rot: [f64; 2],
}

/// Partial derivatives of the weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGradients {
    pub d_p_obj: f64,
    pub d_p_cls: f64,
    pub d_pred_box: [f64; 4],
    pub d_pred_rot: [f64; 2],
    /// With respect to each unweighted term; equals the weights.
    pub d_terms: LossTerms,
}

impl LossInputs {
    fn truth_raw(&self) -> [f64; 4] {
        let t = &self.truth_box;
        [t.cx, t.cy, t.w, t.h]
    }

    fn validate(&self) -> Result<()> {
        for (what, p) in [("p_obj", self.p_obj), ("p_cls", self.p_cls)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::OutOfRange { what, value: p });
            }
        }
        let finite = self.pred_box.iter().chain(&self.pred_rot).chain(&self.truth_rot);
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loss input"));
        }
        if self.pred_box[2] <= 0.0 || self.pred_box[3] <= 0.0 {
            return Err(Error::Degenerate("predicted box"));
        }
        Ok(())
    }

    pub fn terms(&self) -> LossTerms {
        LossTerms {
            obj: bce(self.p_obj, self.y_obj),
            bbox: 1.0 - iou_raw(&self.pred_box, &self.truth_raw()),
            cls: bce(self.p_cls, self.y_cls),
            ryz: rotation_mse_raw(self.pred_rot, self.truth_rot),
        }
    }
}

/// Weighted total for raw inputs.
pub fn loss_value(inputs: &LossInputs, w: &LossWeights) -> Result<LossBreakdown> {
    inputs.validate()?;
    total_loss(inputs.terms(), w)
}

fn bce_grad(p: f64, y: bool) -> f64 {
    if y {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

/// d IoU / d (cx, cy, w, h) of the predicted box.
fn iou_grad(a: &[f64; 4], b: &[f64; 4]) -> Result<[f64; 4]> {
    let (ax, bx) = (xyxy(a), xyxy(b));
    let iw = ax[2].min(bx[2]) - ax[0].max(bx[0]);
    let ih = ax[3].min(bx[3]) - ax[1].max(bx[1]);
    if iw < 0.0 || ih < 0.0 {
        // disjoint along one axis: IoU is locally constant at 0
        return Ok([0.0; 4]);
    }
    if iw == 0.0 || ih == 0.0 || ax[0] == bx[0] || ax[2] == bx[2] || ax[1] == bx[1] || ax[3] == bx[3]
    {
        return Err(Error::SubgradientPoint);
    }
    let inter = iw * ih;
    let area_a = a[2] * a[3];
    let union = area_a + b[2] * b[3] - inter;
    let u2 = union * union;
    let d_inter = (area_a + b[2] * b[3]) / u2;
    let d_area = -inter / u2;

    let lo = |ap0: f64, bp0: f64| if ap0 > bp0 { 1.0 } else { 0.0 };
    let hi = |ap1: f64, bp1: f64| if ap1 < bp1 { 1.0 } else { 0.0 };
    let (x_lo, x_hi) = (lo(ax[0], bx[0]), hi(ax[2], bx[2]));
    let (y_lo, y_hi) = (lo(ax[1], bx[1]), hi(ax[3], bx[3]));

    let diw_dcx = x_hi - x_lo;
    let diw_dw = 0.5 * (x_hi + x_lo);
    let dih_dcy = y_hi - y_lo;
    let dih_dh = 0.5 * (y_hi + y_lo);

    Ok([
        d_inter * ih * diw_dcx,
        d_inter * iw * dih_dcy,
        d_inter * ih * diw_dw + d_area * a[3],
        d_inter * iw * dih_dh + d_area * a[2],
    ])
}

/// Analytic gradients of the weighted total.
///
/// Returns [`Error::SubgradientPoint`] when the predicted box has an edge
/// exactly on a truth edge or the boxes touch with zero overlap.
pub fn loss_gradients(
    inputs: &LossInputs,
    w: &LossWeights,
) -> Result<(LossBreakdown, LossGradients)> {
    let breakdown = loss_value(inputs, w)?;
    let d_iou = iou_grad(&inputs.pred_box, &inputs.truth_raw())?;
    let d_rot = [
        w.ryz * (inputs.pred_rot[0] - inputs.truth_rot[0]),
        w.ryz * (inputs.pred_rot[1] - inputs.truth_rot[1]),
    ];
    let grads = LossGradients {
        d_p_obj: w.obj * bce_grad(inputs.p_obj, inputs.y_obj),
        d_p_cls: w.cls * bce_grad(inputs.p_cls, inputs.y_cls),
        d_pred_box: d_iou.map(|g| -w.bbox * g),
        d_pred_rot: d_rot,
        d_terms: LossTerms {
            obj: w.obj,
            bbox: w.bbox,
            cls: w.cls,
            ryz: w.ryz,
        },
    };
    Ok((breakdown, grads))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub class: ParkClass,
    pub bbox: BBox2D,
    pub confidence: f64,
    pub ry_u: UnitRotation,
    pub rz_u: UnitRotation,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        self.bbox.validate()?;
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::OutOfRange {
                what: "confidence",
                value: self.confidence,
            });
        }
        Ok(())
    }

    /// A detection that reproduces a ground-truth record.
    pub fn from_record(r: &AnnotationRecord, confidence: f64) -> Self {
        Self {
            class: r.class,
            bbox: r.bbox,
            confidence,
            ry_u: r.ry_u,
            rz_u: r.rz_u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub det: usize,
    pub truth: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    /// In the order the detections were processed (descending confidence).
    pub pairs: Vec<Match>,
    pub unmatched_dets: Vec<usize>,
    pub unmatched_truths: Vec<usize>,
}

impl Matching {
    /// Truth index matched to each detection.
    pub fn truth_of(&self, n_dets: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n_dets];
        for m in &self.pairs {
            out[m.det] = Some(m.truth);
        }
        out
    }
}

/// Detection indices by descending confidence, ties by index.
fn confidence_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .confidence
            .total_cmp(&dets[a].confidence)
            .then(a.cmp(&b))
    });
    order
}

/// Greedy class-aware matching. Each detection, by descending confidence,
/// takes the unmatched same-class truth with the highest IoU at or above
/// `iou_thresh`; ties go to the lower truth index.
pub fn match_detections(
    dets: &[Detection],
    truths: &[AnnotationRecord],
    iou_thresh: f64,
) -> Result<Matching> {
    if !(iou_thresh > 0.0 && iou_thresh < 1.0) {
        return Err(Error::OutOfRange {
            what: "iou threshold",
            value: iou_thresh,
        });
    }
    let mut taken = vec![false; truths.len()];
    let mut out = Matching::default();
    for d in confidence_order(dets) {
        let det = &dets[d];
        let mut best: Option<(usize, f64)> = None;
        for (t, truth) in truths.iter().enumerate() {
            if taken[t] || truth.class != det.class {
                continue;
            }
            let v = iou(&det.bbox, &truth.bbox);
            if v >= iou_thresh && best.is_none_or(|(_, b)| v > b) {
                best = Some((t, v));
            }
        }
        match best {
            Some((t, v)) => {
                taken[t] = true;
                out.pairs.push(Match {
                    det: d,
                    truth: t,
                    iou: v,
                });
            }
            None => out.unmatched_dets.push(d),
        }
    }
    out.unmatched_dets.sort_unstable();
    out.unmatched_truths = (0..truths.len()).filter(|&t| !taken[t]).collect();
    Ok(out)
}

/// All-point interpolated AP from ranked hits.
///
/// `ranked` holds `(confidence, is_true_positive)` already in rank order.
pub fn ap_from_ranked(ranked: &[(f64, bool)], n_truths: usize) -> Option<f64> {
    if n_truths == 0 {
        return None;
    }
    let mut precision = Vec::with_capacity(ranked.len());
    let mut recall = Vec::with_capacity(ranked.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &(_, hit) in ranked {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / n_truths as f64);
    }
    // precision envelope, right to left
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        if *r > prev_recall {
            ap += (r - prev_recall) * p;
            prev_recall = *r;
        }
    }
    Some(ap.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ApReport {
    /// Per class id; `None` when the class has no ground truth.
    pub per_class: [Option<f64>; 3],
    /// Mean over classes with ground truth; `None` when there is none.
    pub map: Option<f64>,
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Per-image matching results pooled over a dataset.
struct Pooled {
    /// `(confidence, class, matched truth index within the image)` per detection,
    /// in dataset rank order.
    ranked: Vec<(f64, ParkClass, bool)>,
    n_truths: [usize; 3],
    rotation_sq: Vec<f64>,
}

fn pool(images: &[(&[Detection], &[AnnotationRecord])], iou_thresh: f64) -> Result<Pooled> {
    let mut all: Vec<(f64, usize, usize, ParkClass, bool)> = Vec::new();
    let mut n_truths = [0usize; 3];
    let mut rotation_sq = Vec::new();
    for (img, (dets, truths)) in images.iter().enumerate() {
        for d in dets.iter() {
            d.validate()?;
        }
        for t in truths.iter() {
            n_truths[t.class.index()] += 1;
        }
        let m = match_detections(dets, truths, iou_thresh)?;
        let truth_of = m.truth_of(dets.len());
        for (i, d) in dets.iter().enumerate() {
            all.push((d.confidence, img, i, d.class, truth_of[i].is_some()));
        }
        // index order within the image keeps the reduction order fixed
        let mut pairs = m.pairs.clone();
        pairs.sort_by_key(|p| p.det);
        for p in pairs {
            let (d, t) = (&dets[p.det], &truths[p.truth]);
            rotation_sq.push(rotation_mse((d.ry_u, d.rz_u), (t.ry_u, t.rz_u)));
        }
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(Pooled {
        ranked: all.into_iter().map(|(c, _, _, k, hit)| (c, k, hit)).collect(),
        n_truths,
        rotation_sq,
    })
}

fn ap_report(pooled: &Pooled) -> ApReport {
    let mut per_class = [None; 3];
    for class in ParkClass::ALL {
        let ranked: Vec<(f64, bool)> = pooled
            .ranked
            .iter()
            .filter(|(_, k, _)| *k == class)
            .map(|&(c, _, hit)| (c, hit))
            .collect();
        per_class[class.index()] = ap_from_ranked(&ranked, pooled.n_truths[class.index()]);
    }
    ApReport {
        per_class,
        map: mean_defined(&per_class),
    }
}

/// Per-class AP and mAP for a single image.
pub fn average_precision(
    dets: &[Detection],
    truths: &[AnnotationRecord],
    iou_thresh: f64,
) -> Result<ApReport> {
    Ok(ap_report(&pool(&[(dets, truths)], iou_thresh)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub iou_thresh: f64,
    pub ap: ApReport,
    /// Mean rotation MSE over matched pairs, normalized units; `None` without matches.
    pub rotation_mse: Option<f64>,
    pub matched_pairs: usize,
    pub n_detections: usize,
    pub n_truths: usize,
    /// All classes pooled, one point per threshold in 0.00..=1.00.
    pub curve: Vec<CurvePoint>,
}

pub fn curve_threshold(i: usize) -> f64 {
    i as f64 / (CURVE_POINTS - 1) as f64
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Evaluates aligned per-image detections and truths.
///
/// Precision at a threshold with no surviving detections is reported as 0.
pub fn eval_dataset(
    dets: &[Vec<Detection>],
    truths: &[Vec<AnnotationRecord>],
    iou_thresh: f64,
) -> Result<EvalReport> {
    if dets.len() != truths.len() {
        return Err(Error::InvalidConfig("detection and truth lists are not aligned"));
    }
    let images: Vec<(&[Detection], &[AnnotationRecord])> = dets
        .iter()
        .zip(truths)
        .map(|(d, t)| (d.as_slice(), t.as_slice()))
        .collect();
    let pooled = pool(&images, iou_thresh)?;
    let n_truths: usize = pooled.n_truths.iter().sum();

    let rotation_mse = (!pooled.rotation_sq.is_empty()).then(|| {
        pooled.rotation_sq.iter().sum::<f64>() / pooled.rotation_sq.len() as f64
    });

    // greedy matching is prefix-stable in confidence, so a threshold keeps
    // exactly the matches of the detections it keeps
    let mut curve = Vec::with_capacity(CURVE_POINTS);
    for i in 0..CURVE_POINTS {
        let t = curve_threshold(i);
        let (mut kept, mut tp) = (0usize, 0usize);
        for &(c, _, hit) in &pooled.ranked {
            if c >= t {
                kept += 1;
                tp += hit as usize;
            }
        }
        let precision = if kept > 0 { tp as f64 / kept as f64 } else { 0.0 };
        let recall = if n_truths > 0 { tp as f64 / n_truths as f64 } else { 0.0 };
        curve.push(CurvePoint {
            threshold: t,
            precision,
            recall,
            f1: f1(precision, recall),
        });
    }

    Ok(EvalReport {
        iou_thresh,
        ap: ap_report(&pooled),
        rotation_mse,
        matched_pairs: pooled.rotation_sq.len(),
        n_detections: pooled.ranked.len(),
        n_truths,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(cx: f64, cy: f64, w: f64, h: f64) -> BBox2D {
        BBox2D::new(cx, cy, w, h).unwrap()
    }

    fn u(v: f64) -> UnitRotation {
        UnitRotation::new(v).unwrap()
    }

    fn truth(class: ParkClass, b: BBox2D) -> AnnotationRecord {
        AnnotationRecord {
            class,
            bbox: b,
            ry_u: u(0.5),
            rz_u: u(0.5),
        }
    }

    fn det(class: ParkClass, b: BBox2D, conf: f64) -> Detection {
        Detection {
            class,
            bbox: b,
            confidence: conf,
            ry_u: u(0.5),
            rz_u: u(0.5),
        }
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.25, 0.5, 0.5, 0.5);
        let b = bx(0.5, 0.5, 0.5, 0.5);
        assert_eq!(iou(&a, &a), 1.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&bx(0.1, 0.1, 0.1, 0.1), &bx(0.8, 0.8, 0.1, 0.1)), 0.0);
    }

    #[test]
    fn bce_examples() {
        assert!(bce(1.0 - BCE_EPS, true) < 1e-6);
        assert!((bce(0.5, true) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce(0.5, false) - core::f64::consts::LN_2).abs() < 1e-15);
        let v = bce(0.0, true);
        assert!(v.is_finite());
        assert!((v + libm::log(BCE_EPS)).abs() < 1e-12);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(rotation_mse((u(0.3), u(0.9)), (u(0.3), u(0.9))), 0.0);
        assert!((rotation_mse((u(0.5), u(0.5)), (u(0.6), u(0.7))) - 0.025).abs() < 1e-15);
        assert_eq!(rotation_mse((u(0.0), u(0.0)), (u(1.0), u(1.0))), 1.0);
    }

    #[test]
    fn total_loss_examples() {
        let w = LossWeights::default();
        assert_eq!(total_loss(LossTerms::default(), &w).unwrap().total, 0.0);
        let ones = LossTerms {
            obj: 1.0,
            bbox: 1.0,
            cls: 1.0,
            ryz: 1.0,
        };
        assert_eq!(total_loss(ones, &w).unwrap().total, 1.1);
        let base = LossTerms {
            obj: 0.3,
            bbox: 0.2,
            cls: 0.1,
            ryz: 0.4,
        };
        let doubled = LossTerms { ryz: 0.8, ..base };
        let diff = total_loss(doubled, &w).unwrap().total - total_loss(base, &w).unwrap().total;
        assert!((diff - w.ryz * 0.4).abs() < 1e-15);
        assert!(total_loss(LossTerms { obj: -1.0, ..base }, &w).is_err());
    }

    #[test]
    fn weights_validated() {
        let zero = LossWeights {
            obj: 0.0,
            bbox: 0.0,
            cls: 0.0,
            ryz: 0.0,
        };
        assert!(zero.validate().is_err());
        assert!(LossWeights { obj: -0.1, ..LossWeights::default() }.validate().is_err());
    }

    fn sample() -> LossInputs {
        LossInputs {
            p_obj: 0.5,
            y_obj: true,
            p_cls: 0.3,
            y_cls: false,
            pred_box: [0.42, 0.51, 0.3, 0.25],
            truth_box: bx(0.45, 0.5, 0.32, 0.22),
            pred_rot: [0.5, 0.4],
            truth_rot: [0.6, 0.45],
        }
    }

    #[test]
    fn gradient_closed_forms() {
        let w = LossWeights {
            obj: 1.0,
            bbox: 1.0,
            cls: 1.0,
            ryz: 1.0,
        };
        let (_, g) = loss_gradients(&sample(), &w).unwrap();
        assert!((g.d_pred_rot[0] - -0.1).abs() < 1e-15);
        assert_eq!(g.d_p_obj, -2.0);
        let wd = LossWeights::default();
        let (_, g) = loss_gradients(&sample(), &wd).unwrap();
        assert_eq!(g.d_terms.ryz, wd.ryz);
    }

    #[test]
    fn subgradient_points_are_reported() {
        let mut s = sample();
        // shared left edge at x = 0.375 (all values exact in binary)
        s.truth_box = bx(0.5, 0.5, 0.25, 0.5);
        s.pred_box = [0.4375, 0.5, 0.125, 0.25];
        assert_eq!(
            loss_gradients(&s, &LossWeights::default()),
            Err(Error::SubgradientPoint)
        );
        // edge contact with zero overlap
        s.pred_box = [0.25, 0.5, 0.25, 0.25];
        assert_eq!(
            loss_gradients(&s, &LossWeights::default()),
            Err(Error::SubgradientPoint)
        );
        // clearly disjoint: zero gradient, no error
        s.pred_box = [0.125, 0.5, 0.125, 0.25];
        let (_, g) = loss_gradients(&s, &LossWeights::default()).unwrap();
        assert_eq!(g.d_pred_box, [0.0; 4]);
    }

    #[test]
    fn matching_examples() {
        let t = [truth(ParkClass::Parked, bx(0.3, 0.3, 0.2, 0.2))];
        let m = match_detections(&[det(ParkClass::Parked, t[0].bbox, 0.9)], &t, 0.5).unwrap();
        assert_eq!(m.pairs.len(), 1);

        let two = [
            det(ParkClass::Parked, t[0].bbox, 0.6),
            det(ParkClass::Parked, t[0].bbox, 0.9),
        ];
        let m = match_detections(&two, &t, 0.5).unwrap();
        assert_eq!(m.pairs[0].det, 1);
        assert_eq!(m.unmatched_dets, [0]);

        let m = match_detections(&[det(ParkClass::Fallen, t[0].bbox, 0.9)], &t, 0.5).unwrap();
        assert!(m.pairs.is_empty());
        assert_eq!((m.unmatched_dets.len(), m.unmatched_truths.len()), (1, 1));

        assert!(match_detections(&[], &t, 1.0).is_err());
    }

    #[test]
    fn ap_examples() {
        let b = bx(0.3, 0.3, 0.2, 0.2);
        let far = bx(0.8, 0.8, 0.1, 0.1);
        let t = [truth(ParkClass::Parked, b)];
        let ap = |d: &[Detection]| average_precision(d, &t, 0.5).unwrap().per_class[0].unwrap();
        assert_eq!(ap(&[det(ParkClass::Parked, b, 0.9)]), 1.0);
        assert_eq!(
            ap(&[det(ParkClass::Parked, b, 0.9), det(ParkClass::Parked, far, 0.8)]),
            1.0
        );
        assert_eq!(
            ap(&[det(ParkClass::Parked, far, 0.9), det(ParkClass::Parked, b, 0.8)]),
            0.5
        );
        assert_eq!(ap(&[]), 0.0);
        let r = average_precision(&[], &t, 0.5).unwrap();
        assert_eq!(r.per_class[1], None);
        assert_eq!(r.map, Some(0.0));
    }

    #[test]
    fn perfect_predictions() {
        let truths = vec![vec![
            truth(ParkClass::Parked, bx(0.3, 0.3, 0.2, 0.2)),
            truth(ParkClass::Fallen, bx(0.7, 0.6, 0.2, 0.3)),
        ]];
        let dets: Vec<Vec<Detection>> = truths
            .iter()
            .map(|ts| ts.iter().map(|t| Detection::from_record(t, 1.0)).collect())
            .collect();
        let r = eval_dataset(&dets, &truths, 0.5).unwrap();
        assert_eq!(r.ap.map, Some(1.0));
        assert_eq!(r.rotation_mse, Some(0.0));
        assert_eq!(r.curve.len(), CURVE_POINTS);
        assert!(r.curve.iter().all(|p| p.f1 == 1.0));
    }

    #[test]
    fn empty_detections() {
        let truths = vec![vec![truth(ParkClass::Parked, bx(0.3, 0.3, 0.2, 0.2))]];
        let r = eval_dataset(&[vec![]], &truths, 0.5).unwrap();
        assert!(r.curve.iter().all(|p| p.recall == 0.0));
        assert_eq!(r.rotation_mse, None);
        assert!(eval_dataset(&[], &truths, 0.5).is_err());
    }
}
