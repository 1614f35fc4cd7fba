//! Prediction/label matching under IoU and the soft S-IoU.
//!
//! Evaluation runs two independent passes. The prediction pass decides
//! TP/FP for every detection that survives the score threshold; the label
//! pass decides FN for every ground truth. Labels are not consumed by the
//! prediction pass, so several detections may be TP against the same label
//! and `tp + fn` need not equal the number of labels. This is not
//! COCO-style greedy one-to-one matching.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{intersection, union, Region};
use crate::scalar::Scalar;

/// Minimum intersection area (m²) for two instances to match.
pub const MATCH_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "iou")]
    IoU,
    #[serde(rename = "siou")]
    SIoU,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::IoU => "IoU",
            Metric::SIoU => "S-IoU",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "iou" => Ok(Metric::IoU),
            "siou" => Ok(Metric::SIoU),
            _ => Err(Error::InvalidArgument(format!("unknown metric {s:?} (iou|siou)"))),
        }
    }
}

/// Where a ground-truth annotation came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    /// Photo-interpreted on screen.
    PI,
    /// Field work with differential GPS.
    FW,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::PI => "PI",
            Source::FW => "FW",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PI" | "pi" => Ok(Source::PI),
            "FW" | "fw" => Ok(Source::FW),
            _ => Err(Error::InvalidArgument(format!("unknown source {s:?} (PI|FW)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection<T = f64> {
    pub region: Region<T>,
    pub score: T,
    pub tile_id: Option<String>,
}

impl<T: Scalar> Detection<T> {
    pub fn new(region: Region<T>, score: T) -> Result<Self> {
        if !(score >= T::zero() && score <= T::one()) {
            return Err(Error::InvalidArgument(format!("score {score} outside [0, 1]")));
        }
        Ok(Detection {
            region,
            score,
            tile_id: None,
        })
    }

    pub fn with_tile(mut self, tile_id: impl Into<String>) -> Self {
        self.tile_id = Some(tile_id.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth<T = f64> {
    pub region: Region<T>,
    pub id: String,
    pub source: Source,
}

impl<T: Scalar> GroundTruth<T> {
    pub fn new(region: Region<T>, id: impl Into<String>, source: Source) -> Self {
        GroundTruth {
            region,
            id: id.into(),
            source,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchConfig<T = f64> {
    pub metric: Metric,
    /// Metric value at or above which an instance counts as matched, in (0, 1].
    pub overlap_threshold: T,
    /// Detections scoring below this are discarded before matching.
    pub score_threshold: T,
    /// Optional extra membership rule: intersection / label area must reach
    /// this fraction. Zero keeps every positive-area overlap.
    pub min_label_fraction: T,
    /// Under IoU, let each label back at most one TP in the prediction
    /// pass (greedy by descending score, COCO style). Off by default.
    pub exclusive_labels: bool,
}

impl<T: Scalar> MatchConfig<T> {
    pub fn new(metric: Metric, overlap_threshold: T, score_threshold: T) -> Result<Self> {
        let cfg = MatchConfig {
            metric,
            overlap_threshold,
            score_threshold,
            min_label_fraction: T::zero(),
            exclusive_labels: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (zero, one) = (T::zero(), T::one());
        if !(self.overlap_threshold > zero && self.overlap_threshold <= one) {
            return Err(Error::InvalidArgument(format!(
                "overlap threshold {} outside (0, 1]",
                self.overlap_threshold
            )));
        }
        if !(self.score_threshold >= zero && self.score_threshold <= one) {
            return Err(Error::InvalidArgument(format!(
                "score threshold {} outside [0, 1]",
                self.score_threshold
            )));
        }
        if !(self.min_label_fraction >= zero && self.min_label_fraction <= one) {
            return Err(Error::InvalidArgument(format!(
                "min label fraction {} outside [0, 1]",
                self.min_label_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, fp, fn_ }
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        ConfusionCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), Add::add)
    }
}

/// `area(a ∩ b)`, computed with operands in a canonical order so the
/// result does not depend on argument order.
fn pair_intersection_area<T: Scalar>(a: &Region<T>, b: &Region<T>) -> T {
    let (x, y) = if region_order(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    intersection(x, y).area()
}

fn region_order<T: Scalar>(a: &Region<T>, b: &Region<T>) -> Ordering {
    let first = |r: &Region<T>| r.parts().first().map(|p| p.exterior[0]);
    match (first(a), first(b)) {
        (Some(p), Some(q)) => p
            .lex_cmp(&q)
            .then(a.area().partial_cmp(&b.area()).unwrap_or(Ordering::Equal))
            .then(a.vertex_count().cmp(&b.vertex_count())),
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// IoU from the two areas and their intersection. The union is formed as
/// `max + (min - inter)` so it is symmetric and never below either area.
fn iou_from_areas<T: Scalar>(a: T, b: T, inter: T) -> T {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let inter = inter.max(T::zero()).min(lo);
    let union = hi + (lo - inter);
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).min(T::one())
}

/// Intersection over union of two regions.
pub fn iou<T: Scalar>(p: &Region<T>, l: &Region<T>) -> T {
    iou_from_areas(p.area(), l.area(), pair_intersection_area(p, l))
}

fn ratio<T: Scalar>(num: T, den: T) -> T {
    if den <= T::zero() {
        return T::zero();
    }
    (num.max(T::zero()) / den).min(T::one())
}

fn union_of<T: Scalar>(regions: &[&Region<T>]) -> Region<T> {
    match regions {
        [single] => (*single).clone(),
        _ => union(&regions.iter().map(|r| (*r).clone()).collect::<Vec<_>>()),
    }
}

/// Soft IoU of a prediction against the union of its matched labels,
/// normalized by the labels' union area.
pub fn s_iou_prediction<T: Scalar>(p: &Region<T>, matched_labels: &[Region<T>]) -> Result<T> {
    if matched_labels.is_empty() {
        return Err(Error::EmptyMatchSet);
    }
    let refs: Vec<&Region<T>> = matched_labels.iter().collect();
    Ok(s_iou_prediction_refs(p, &refs))
}

fn s_iou_prediction_refs<T: Scalar>(p: &Region<T>, labels: &[&Region<T>]) -> T {
    let u = union_of(labels);
    let inter = pair_intersection_area(p, &u);
    let den = u.area();
    ratio(inter.min(den), den)
}

/// Fraction of a label's area recovered by the union of its matched predictions.
pub fn s_iou_label<T: Scalar>(l: &Region<T>, matched_preds: &[Region<T>]) -> Result<T> {
    if matched_preds.is_empty() {
        return Err(Error::EmptyMatchSet);
    }
    let refs: Vec<&Region<T>> = matched_preds.iter().collect();
    Ok(s_iou_label_refs(l, &refs))
}

fn s_iou_label_refs<T: Scalar>(l: &Region<T>, preds: &[&Region<T>]) -> T {
    let u = union_of(preds);
    let inter = pair_intersection_area(l, &u);
    let den = l.area();
    ratio(inter.min(den), den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    /// Label recovered (not a false negative).
    Found,
    FalseNegative,
}

/// How one instance fared in its pass.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceMatch<T = f64> {
    /// Index into the caller's detection or ground-truth slice.
    pub index: usize,
    /// Counterparts in the match set with their intersection areas,
    /// ordered by counterpart index.
    pub overlaps: Vec<(usize, T)>,
    /// Best IoU counterpart; `None` when nothing matched.
    pub best: Option<usize>,
    /// Metric value compared against the overlap threshold.
    pub value: T,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SceneEvaluation<T = f64> {
    pub counts: ConfusionCounts,
    pub predictions: Vec<InstanceMatch<T>>,
    pub labels: Vec<InstanceMatch<T>>,
    /// Detections discarded for scoring below the threshold.
    pub below_score: usize,
    /// Detections dropped because their region normalized to empty.
    pub empty_detections: Vec<usize>,
}

struct Candidate<'a, T> {
    index: usize,
    region: &'a Region<T>,
    area: T,
}

/// Picks the best IoU counterpart: highest IoU, then larger intersection,
/// then lower index.
fn best_by_iou<T: Scalar>(own_area: T, overlaps: &[(usize, T)], other_areas: &[T]) -> Option<(usize, T)> {
    overlaps
        .iter()
        .map(|&(j, inter)| (j, inter, iou_from_areas(own_area, other_areas[j], inter)))
        .max_by(|a, b| {
            a.2.partial_cmp(&b.2)
                .unwrap_or(Ordering::Equal)
                .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
                .then(b.0.cmp(&a.0))
        })
        .map(|(j, _, v)| (j, v))
}

/// Runs both evaluation passes over one scene.
pub fn evaluate_scene<T: Scalar>(
    dets: &[Detection<T>],
    gts: &[GroundTruth<T>],
    cfg: &MatchConfig<T>,
) -> SceneEvaluation<T> {
    let mut eval = SceneEvaluation::default();
    let mut preds: Vec<Candidate<'_, T>> = Vec::new();
    for (i, d) in dets.iter().enumerate() {
        if d.score < cfg.score_threshold {
            eval.below_score += 1;
        } else if d.region.is_empty() {
            log::debug!("detection {i} has an empty region; dropped");
            eval.empty_detections.push(i);
        } else {
            preds.push(Candidate {
                index: i,
                region: &d.region,
                area: d.region.area(),
            });
        }
    }
    let label_areas: Vec<T> = gts.iter().map(|g| g.region.area()).collect();
    let label_boxes: Vec<_> = gts.iter().map(|g| g.region.bbox()).collect();
    let eps = T::lit(MATCH_EPS);

    // overlaps[k] lists (label, intersection) for surviving prediction k
    let overlaps: Vec<Vec<(usize, T)>> = preds
        .par_iter()
        .map(|p| {
            let pb = p.region.bbox();
            let mut row = Vec::new();
            for (j, g) in gts.iter().enumerate() {
                let hit = matches!((&pb, &label_boxes[j]), (Some(a), Some(b)) if a.intersects(b));
                if !hit {
                    continue;
                }
                let inter = pair_intersection_area(p.region, &g.region);
                let frac_ok = cfg.min_label_fraction <= T::zero()
                    || (label_areas[j] > T::zero() && inter / label_areas[j] >= cfg.min_label_fraction);
                if inter > eps && frac_ok {
                    row.push((j, inter));
                }
            }
            row
        })
        .collect();

    let mut label_overlaps: Vec<Vec<(usize, T)>> = vec![Vec::new(); gts.len()];
    for (k, row) in overlaps.iter().enumerate() {
        for &(j, inter) in row {
            label_overlaps[j].push((k, inter));
        }
    }
    let pred_areas: Vec<T> = preds.iter().map(|p| p.area).collect();

    let mut claimed = vec![false; gts.len()];
    let exclusive = cfg.exclusive_labels && cfg.metric == Metric::IoU;
    let mut order: Vec<usize> = (0..preds.len()).collect();
    if exclusive {
        order.sort_by(|&a, &b| {
            dets[preds[b].index]
                .score
                .partial_cmp(&dets[preds[a].index].score)
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
    }
    let mut pass1: Vec<Option<InstanceMatch<T>>> = vec![None; preds.len()];
    for k in order {
        let p = &preds[k];
        let row = &overlaps[k];
        let best = if exclusive {
            let free: Vec<(usize, T)> = row.iter().copied().filter(|&(j, _)| !claimed[j]).collect();
            best_by_iou(p.area, &free, &label_areas)
        } else {
            best_by_iou(p.area, row, &label_areas)
        };
        let value = match cfg.metric {
            _ if row.is_empty() => T::zero(),
            Metric::IoU => best.map(|b| b.1).unwrap_or(T::zero()),
            Metric::SIoU => {
                let labels: Vec<&Region<T>> = row.iter().map(|&(j, _)| &gts[j].region).collect();
                s_iou_prediction_refs(p.region, &labels)
            }
        };
        let tp = !row.is_empty() && value >= cfg.overlap_threshold;
        if tp {
            eval.counts.tp += 1;
            if let (true, Some((j, _))) = (exclusive, best) {
                claimed[j] = true;
            }
        } else {
            eval.counts.fp += 1;
        }
        pass1[k] = Some(InstanceMatch {
            index: p.index,
            overlaps: row.clone(),
            best: best.map(|b| b.0),
            value,
            outcome: if tp { Outcome::TruePositive } else { Outcome::FalsePositive },
        });
    }
    eval.predictions = pass1.into_iter().map(|m| m.expect("every prediction visited")).collect();

    for (j, g) in gts.iter().enumerate() {
        let row = &label_overlaps[j];
        let best = best_by_iou(label_areas[j], row, &pred_areas);
        let value = match cfg.metric {
            _ if row.is_empty() => T::zero(),
            Metric::IoU => best.map(|b| b.1).unwrap_or(T::zero()),
            Metric::SIoU => {
                let ps: Vec<&Region<T>> = row.iter().map(|&(k, _)| preds[k].region).collect();
                s_iou_label_refs(&g.region, &ps)
            }
        };
        let found = !row.is_empty() && value >= cfg.overlap_threshold;
        if !found {
            eval.counts.fn_ += 1;
        }
        eval.labels.push(InstanceMatch {
            index: j,
            overlaps: row.iter().map(|&(k, a)| (preds[k].index, a)).collect(),
            best: best.map(|b| preds[b.0].index),
            value,
            outcome: if found { Outcome::Found } else { Outcome::FalseNegative },
        });
    }
    eval
}

/// Detections and labels of one scene.
pub type Scene<T> = (Vec<Detection<T>>, Vec<GroundTruth<T>>);

/// Evaluates independent scenes in parallel and sums their counts.
pub fn evaluate_scenes<T: Scalar>(
    scenes: &[Scene<T>],
    cfg: &MatchConfig<T>,
) -> ConfusionCounts {
    scenes
        .par_iter()
        .map(|(d, g)| evaluate_scene(d, g, cfg).counts)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x0: f64, y0: f64, x1: f64, y1: f64) -> Region {
        Region::rect(x0, y0, x1, y1)
    }

    fn det(r: Region, s: f64) -> Detection {
        Detection::new(r, s).unwrap()
    }

    fn gt(r: Region, id: &str) -> GroundTruth {
        GroundTruth::new(r, id, Source::PI)
    }

    #[test]
    fn iou_examples() {
        let a = sq(0.0, 0.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &sq(2.0, 2.0, 3.0, 3.0)), 0.0);
        assert_eq!(iou(&a, &sq(0.0, 0.0, 1.0, 0.5)), 0.5);
    }

    #[test]
    fn s_iou_prediction_examples() {
        let p = sq(0.0, 0.0, 1.0, 1.0);
        let bottom = sq(0.0, 0.0, 1.0, 0.5);
        let top = sq(0.0, 0.5, 1.0, 1.0);
        assert_eq!(s_iou_prediction(&p, std::slice::from_ref(&bottom)).unwrap(), 1.0);
        assert_eq!(s_iou_prediction(&p, std::slice::from_ref(&p)).unwrap(), 1.0);
        assert_eq!(s_iou_prediction(&p, &[bottom, top]).unwrap(), 1.0);
        assert!(matches!(s_iou_prediction(&p, &[]), Err(Error::EmptyMatchSet)));
    }

    #[test]
    fn s_iou_label_examples() {
        let l = sq(0.0, 0.0, 2.0, 1.0);
        let halves = [sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 0.0, 2.0, 1.0)];
        assert_eq!(s_iou_label(&l, &halves).unwrap(), 1.0);
        assert_eq!(s_iou_label(&l, std::slice::from_ref(&l)).unwrap(), 1.0);
        assert_eq!(s_iou_label(&l, &halves[..1]).unwrap(), 0.5);
        assert!(matches!(s_iou_label(&l, &[]), Err(Error::EmptyMatchSet)));
    }

    /// One label, two predictions that jointly cover it and each spill
    /// outside it.
    fn split_scene() -> (Vec<Detection>, Vec<GroundTruth>) {
        let dets = vec![
            det(sq(-0.5, 0.0, 1.0, 1.0), 0.9),
            det(sq(1.0, 0.0, 2.5, 1.0), 0.9),
        ];
        (dets, vec![gt(sq(0.0, 0.0, 2.0, 1.0), "a")])
    }

    #[test]
    fn split_scene_counts() {
        let (d, g) = split_scene();
        let s = evaluate_scene(&d, &g, &MatchConfig::new(Metric::SIoU, 0.5, 0.5).unwrap());
        assert_eq!(s.counts, ConfusionCounts::new(2, 0, 0));
        let i = evaluate_scene(&d, &g, &MatchConfig::new(Metric::IoU, 0.5, 0.5).unwrap());
        assert_eq!(i.counts, ConfusionCounts::new(0, 2, 1));
        assert_eq!(i.predictions[0].value, 0.4);
    }

    #[test]
    fn no_detections_means_all_missed() {
        let g: Vec<_> = (0..3).map(|i| gt(sq(i as f64 * 3.0, 0.0, i as f64 * 3.0 + 1.0, 1.0), "x")).collect();
        for m in [Metric::IoU, Metric::SIoU] {
            let e = evaluate_scene(&[], &g, &MatchConfig::new(m, 0.5, 0.5).unwrap());
            assert_eq!(e.counts, ConfusionCounts::new(0, 0, 3));
        }
    }

    #[test]
    fn perfect_model() {
        let g: Vec<_> = (0..4).map(|i| gt(sq(i as f64 * 3.0, 0.0, i as f64 * 3.0 + 2.0, 1.0), "x")).collect();
        let d: Vec<_> = g.iter().map(|g| det(g.region.clone(), 0.99)).collect();
        for m in [Metric::IoU, Metric::SIoU] {
            for thr in [0.5, 0.75, 1.0] {
                let e = evaluate_scene(&d, &g, &MatchConfig::new(m, thr, 0.5).unwrap());
                assert_eq!(e.counts, ConfusionCounts::new(4, 0, 0));
            }
        }
    }

    #[test]
    fn score_threshold_discards_first() {
        let g = vec![gt(sq(0.0, 0.0, 1.0, 1.0), "a")];
        let d = vec![det(sq(0.0, 0.0, 1.0, 1.0), 0.4)];
        let e = evaluate_scene(&d, &g, &MatchConfig::new(Metric::IoU, 0.5, 0.5).unwrap());
        assert_eq!(e.counts, ConfusionCounts::new(0, 0, 1));
        assert_eq!(e.below_score, 1);
    }

    #[test]
    fn empty_detection_regions_are_reported() {
        let d = vec![det(Region::empty(), 0.9), det(sq(0.0, 0.0, 1.0, 1.0), 0.9)];
        let e = evaluate_scene(&d, &[], &MatchConfig::new(Metric::SIoU, 0.5, 0.0).unwrap());
        assert_eq!(e.empty_detections, vec![0]);
        assert_eq!(e.counts, ConfusionCounts::new(0, 1, 0));
    }

    #[test]
    fn labels_can_be_reused_by_several_predictions() {
        let g = vec![gt(sq(0.0, 0.0, 1.0, 1.0), "a")];
        let d = vec![det(sq(0.0, 0.0, 1.0, 1.0), 0.9), det(sq(0.0, 0.0, 1.0, 0.9), 0.8)];
        let e = evaluate_scene(&d, &g, &MatchConfig::new(Metric::IoU, 0.5, 0.5).unwrap());
        assert_eq!(e.counts, ConfusionCounts::new(2, 0, 0));
    }

    #[test]
    fn exclusive_labels_option() {
        let g = vec![gt(sq(0.0, 0.0, 1.0, 1.0), "a")];
        let d = vec![det(sq(0.0, 0.0, 1.0, 0.9), 0.8), det(sq(0.0, 0.0, 1.0, 1.0), 0.9)];
        let mut cfg = MatchConfig::new(Metric::IoU, 0.5, 0.5).unwrap();
        assert_eq!(evaluate_scene(&d, &g, &cfg).counts, ConfusionCounts::new(2, 0, 0));
        cfg.exclusive_labels = true;
        let e = evaluate_scene(&d, &g, &cfg);
        assert_eq!(e.counts, ConfusionCounts::new(1, 1, 0));
        // the higher-scoring detection wins the label
        assert_eq!(e.predictions[1].outcome, Outcome::TruePositive);
        assert_eq!(e.predictions[0].outcome, Outcome::FalsePositive);
        // no effect under S-IoU
        cfg.metric = Metric::SIoU;
        assert_eq!(evaluate_scene(&d, &g, &cfg).counts, ConfusionCounts::new(2, 0, 0));
    }

    #[test]
    fn min_label_fraction_prunes_slivers() {
        let g = vec![gt(sq(0.0, 0.0, 1.0, 1.0), "a"), gt(sq(1.0, 0.0, 2.0, 1.0), "b")];
        let d = vec![det(sq(0.0, 0.0, 1.05, 1.0), 0.9)];
        let mut cfg = MatchConfig::new(Metric::SIoU, 0.75, 0.0).unwrap();
        let loose = evaluate_scene(&d, &g, &cfg);
        assert_eq!(loose.predictions[0].overlaps.len(), 2);
        assert_eq!(loose.counts, ConfusionCounts::new(0, 1, 1));
        cfg.min_label_fraction = 0.1;
        let strict = evaluate_scene(&d, &g, &cfg);
        assert_eq!(strict.predictions[0].overlaps.len(), 1);
        assert_eq!(strict.counts, ConfusionCounts::new(1, 0, 1));
    }

    #[test]
    fn best_match_tie_break_prefers_lower_index() {
        let g = vec![gt(sq(0.0, 0.0, 1.0, 1.0), "a"), gt(sq(1.0, 0.0, 2.0, 1.0), "b")];
        let d = vec![det(sq(0.5, 0.0, 1.5, 1.0), 0.9)];
        let e = evaluate_scene(&d, &g, &MatchConfig::new(Metric::IoU, 0.3, 0.0).unwrap());
        assert_eq!(e.predictions[0].best, Some(0));
    }

    #[test]
    fn config_ranges() {
        assert!(MatchConfig::new(Metric::IoU, 0.0, 0.5).is_err());
        assert!(MatchConfig::new(Metric::IoU, 1.01, 0.5).is_err());
        assert!(MatchConfig::new(Metric::IoU, 1.0, -0.1).is_err());
        assert!(MatchConfig::new(Metric::IoU, 1.0, 1.0).is_ok());
        assert!(Detection::new(Region::<f64>::empty(), 1.5).is_err());
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("siou".parse::<Metric>().unwrap(), Metric::SIoU);
        assert_eq!("S-IoU".parse::<Metric>().unwrap(), Metric::SIoU);
        assert_eq!("IoU".parse::<Metric>().unwrap(), Metric::IoU);
        assert!("dice".parse::<Metric>().is_err());
    }
}
