//! Precision, recall and F1 from confusion counts, and per-size breakdowns.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{evaluate_scene, ConfusionCounts, Detection, GroundTruth, MatchConfig, Outcome};
use crate::scalar::Scalar;

/// Shrub size classes, ordered from smallest to largest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SizeClass {
    XS,
    S,
    M,
    L,
    XL,
    XXL,
}

/// Left-closed lower bounds (m²) of S through XXL.
pub const SIZE_BOUNDARIES: [f64; 5] = [1.72, 3.62, 9.08, 20.82, 41.06];

/// Smallest annotated shrub area (m²); XS nominally starts here.
pub const MIN_OBSERVED_AREA: f64 = 0.13;

impl SizeClass {
    pub const ALL: [SizeClass; 6] = [
        SizeClass::XS,
        SizeClass::S,
        SizeClass::M,
        SizeClass::L,
        SizeClass::XL,
        SizeClass::XXL,
    ];

    /// Half-open area range `[lo, hi)` in m².
    pub fn range(self) -> (f64, f64) {
        let i = self as usize;
        let lo = if i == 0 { MIN_OBSERVED_AREA } else { SIZE_BOUNDARIES[i - 1] };
        let hi = SIZE_BOUNDARIES.get(i).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeClass::XS => "XS",
            SizeClass::S => "S",
            SizeClass::M => "M",
            SizeClass::L => "L",
            SizeClass::XL => "XL",
            SizeClass::XXL => "XXL",
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SizeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SizeClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown size class {s:?}")))
    }
}

/// Maps a positive area to its size class. Areas under the smallest
/// observed shrub still land in XS.
pub fn classify_size<T: Scalar>(area_m2: T) -> Result<SizeClass> {
    if !(area_m2 > T::zero()) || !area_m2.is_finite() {
        return Err(Error::NonPositiveArea(area_m2.as_f64()));
    }
    if area_m2 < T::lit(MIN_OBSERVED_AREA) {
        log::debug!("area {area_m2} m² is below the smallest observed shrub; classed XS");
    }
    let idx = SIZE_BOUNDARIES
        .iter()
        .take_while(|&&b| area_m2 >= T::lit(b))
        .count();
    Ok(SizeClass::ALL[idx])
}

/// Precision, recall and F1 in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple<T = f64> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

/// Scores for a set of counts. Any zero denominator yields 0.
pub fn precision_recall_f1<T: Scalar>(c: &ConfusionCounts) -> ScoreTriple<T> {
    let hundred = T::lit(100.0);
    let pct = |num: u64, den: u64| {
        if den == 0 {
            T::zero()
        } else {
            hundred * T::from_u64(num).unwrap() / T::from_u64(den).unwrap()
        }
    };
    let precision = pct(c.tp, c.tp + c.fp);
    let recall = pct(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > T::zero() {
        T::two() * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    ScoreTriple {
        precision,
        recall,
        f1,
    }
}

/// Per-size confusion counts plus the global total.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SizeBreakdown {
    /// Only classes that received at least one instance.
    pub by_class: BTreeMap<SizeClass, ConfusionCounts>,
    pub all: ConfusionCounts,
}

impl SizeBreakdown {
    pub fn scores<T: Scalar>(&self) -> BTreeMap<SizeClass, ScoreTriple<T>> {
        self.by_class
            .iter()
            .map(|(k, c)| (*k, precision_recall_f1(c)))
            .collect()
    }
}

/// Evaluates a scene and bins every decision by shrub size.
///
/// Labels are binned by their own area. A detection takes the class that
/// holds most of its intersection area across its matched labels (ties go
/// to the smaller class); a detection with no match is binned by its own
/// area.
pub fn evaluate_by_size<T: Scalar>(
    dets: &[Detection<T>],
    gts: &[GroundTruth<T>],
    cfg: &MatchConfig<T>,
) -> Result<SizeBreakdown> {
    let eval = evaluate_scene(dets, gts, cfg);
    let label_class = gts
        .iter()
        .map(|g| classify_size(g.region.area()))
        .collect::<Result<Vec<_>>>()?;

    let mut out = SizeBreakdown::default();
    for m in &eval.predictions {
        let class = if m.overlaps.is_empty() {
            classify_size(dets[m.index].region.area())?
        } else {
            let mut share: BTreeMap<SizeClass, T> = BTreeMap::new();
            for &(j, inter) in &m.overlaps {
                let e = share.entry(label_class[j]).or_insert(T::zero());
                *e = *e + inter;
            }
            share
                .into_iter()
                .fold(None::<(SizeClass, T)>, |best, (c, a)| match best {
                    Some((_, b)) if b >= a => best,
                    _ => Some((c, a)),
                })
                .map(|(c, _)| c)
                .expect("non-empty overlaps")
        };
        let row = out.by_class.entry(class).or_default();
        match m.outcome {
            Outcome::TruePositive => row.tp += 1,
            _ => row.fp += 1,
        }
    }
    for m in &eval.labels {
        let row = out.by_class.entry(label_class[m.index]).or_default();
        if m.outcome == Outcome::FalseNegative {
            row.fn_ += 1;
        }
    }
    out.all = out.by_class.values().copied().sum();
    debug_assert_eq!(out.all, eval.counts);
    Ok(out)
}

/// One line of a Table-7/Table-9 shaped report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub data: String,
    pub metric: String,
    pub threshold: String,
    pub size: String,
    #[serde(rename = "TP")]
    pub tp: u64,
    #[serde(rename = "FP")]
    pub fp: u64,
    #[serde(rename = "FN")]
    pub fn_: u64,
    #[serde(rename = "P")]
    pub precision: String,
    #[serde(rename = "R")]
    pub recall: String,
    #[serde(rename = "F1")]
    pub f1: String,
}

impl ReportRow {
    /// Percentages are rounded to two decimals here and nowhere else.
    pub fn new(
        data: &str,
        metric: impl fmt::Display,
        threshold: f64,
        size: &str,
        c: &ConfusionCounts,
    ) -> Self {
        let s: ScoreTriple<f64> = precision_recall_f1(c);
        ReportRow {
            data: data.to_string(),
            metric: metric.to_string(),
            threshold: format!("{}", (threshold * 100.0 * 1e6).round() / 1e6),
            size: size.to_string(),
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: format!("{:.2}", s.precision),
            recall: format!("{:.2}", s.recall),
            f1: format!("{:.2}", s.f1),
        }
    }
}
