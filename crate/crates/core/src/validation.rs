//! Observed-versus-predicted statistics over validation sites.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::mapstats::canopy_cover;
use crate::matching::GroundTruth;
use crate::scalar::Scalar;

const M2_PER_HA: f64 = 10_000.0;

/// A validation footprint with its identifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Site<T = f64> {
    pub id: String,
    pub region: Region<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Unit {
    #[serde(rename = "percent_cover")]
    PercentCover,
    #[serde(rename = "count_per_ha")]
    CountPerHectare,
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Unit::PercentCover => "percent_cover",
            Unit::CountPerHectare => "count_per_ha",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Cover,
    Count,
}

impl std::str::FromStr for SeriesKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cover" => Ok(SeriesKind::Cover),
            "count" => Ok(SeriesKind::Count),
            _ => Err(Error::InvalidArgument(format!("unknown series kind {s:?} (cover|count)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedSeries<T = f64> {
    pub site_ids: Vec<String>,
    pub observed: Vec<T>,
    pub predicted: Vec<T>,
    pub unit: Unit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterRow {
    pub site_id: String,
    pub observed: f64,
    pub predicted: f64,
    pub unit: Unit,
}

impl<T: Scalar> PairedSeries<T> {
    pub fn new(site_ids: Vec<String>, observed: Vec<T>, predicted: Vec<T>, unit: Unit) -> Result<Self> {
        if observed.len() != predicted.len() || site_ids.len() != observed.len() {
            return Err(Error::InvalidArgument(format!(
                "series lengths differ: {} ids, {} observed, {} predicted",
                site_ids.len(),
                observed.len(),
                predicted.len()
            )));
        }
        if observed.iter().chain(&predicted).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("series contains a non-finite value".into()));
        }
        Ok(PairedSeries {
            site_ids,
            observed,
            predicted,
            unit,
        })
    }

    /// Unlabelled series; sites are numbered from zero.
    pub fn from_values(observed: Vec<T>, predicted: Vec<T>, unit: Unit) -> Result<Self> {
        let ids = (0..observed.len()).map(|i| i.to_string()).collect();
        Self::new(ids, observed, predicted, unit)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn scatter_rows(&self) -> Vec<ScatterRow> {
        (0..self.len())
            .map(|i| ScatterRow {
                site_id: self.site_ids[i].clone(),
                observed: self.observed[i].as_f64(),
                predicted: self.predicted[i].as_f64(),
                unit: self.unit,
            })
            .collect()
    }
}

fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize(xs.len()).expect("length fits")
}

/// Product-moment correlation of observed and predicted values.
pub fn pearson_r<T: Scalar>(s: &PairedSeries<T>) -> Result<T> {
    if s.len() < 2 {
        return Err(Error::DegenerateVariance(format!("correlation needs at least 2 pairs, got {}", s.len())));
    }
    let (mx, my) = (mean(&s.observed), mean(&s.predicted));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in s.observed.iter().zip(&s.predicted) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if !(sxx > T::zero()) || !(syy > T::zero()) {
        return Err(Error::DegenerateVariance("a series has zero variance".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorStats<T = f64> {
    pub n: usize,
    pub rmse: T,
    pub mae: T,
    /// Mean of predicted minus observed; positive means over-prediction.
    pub mbe: T,
    /// `1 - SS_res / SS_tot` against the 1:1 line. `None` when the
    /// observations have no spread.
    pub r2_identity: Option<T>,
    /// Squared Pearson r, i.e. the least-squares fit's R². `None` when
    /// either series has no spread.
    pub r2_fit: Option<T>,
    pub pearson_r: Option<T>,
}

pub fn error_stats<T: Scalar>(s: &PairedSeries<T>) -> Result<ErrorStats<T>> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("error statistics need at least one pair".into()));
    }
    let n = T::from_usize(s.len()).expect("length fits");
    let (mut sq, mut abs, mut sum) = (T::zero(), T::zero(), T::zero());
    for (&o, &p) in s.observed.iter().zip(&s.predicted) {
        let d = p - o;
        sq = sq + d * d;
        abs = abs + d.abs();
        sum = sum + d;
    }
    let mae = abs / n;
    let mbe = sum / n;
    // the chain rmse >= mae >= |mbe| holds exactly in real arithmetic; keep
    // rounding from breaking it when all errors are equal
    let rmse = (sq / n).sqrt().max(mae);
    let mo = mean(&s.observed);
    let ss_tot: T = s.observed.iter().map(|&o| (o - mo) * (o - mo)).sum();
    let r2_identity = (s.len() >= 2 && ss_tot > T::zero()).then(|| T::one() - sq / ss_tot);
    let r = pearson_r(s).ok();
    Ok(ErrorStats {
        n: s.len(),
        rmse,
        mae,
        mbe,
        r2_identity,
        r2_fit: r.map(|r| r * r),
        pearson_r: r,
    })
}

/// Pairs observed (ground truth) and predicted (map) values per site.
///
/// `Cover` is percent canopy cover. `Count` is shrubs per hectare, counting
/// a shrub when its centroid lies in the site and dividing by the site's
/// exact area.
pub fn build_site_series<T: Scalar>(
    sites: &[Site<T>],
    observed: &[GroundTruth<T>],
    predicted: &[Region<T>],
    kind: SeriesKind,
) -> Result<PairedSeries<T>> {
    let obs_regions: Vec<Region<T>> = observed.iter().map(|g| g.region.clone()).collect();
    let mut obs = Vec::with_capacity(sites.len());
    let mut pred = Vec::with_capacity(sites.len());
    for site in sites {
        let (o, p) = match kind {
            SeriesKind::Cover => (canopy_cover(&obs_regions, &site.region), canopy_cover(predicted, &site.region)),
            SeriesKind::Count => {
                let ha = site.region.area() / T::lit(M2_PER_HA);
                if !(ha > T::zero()) {
                    return Err(Error::NonPositiveArea(site.region.area().as_f64()));
                }
                let count = |rs: &[Region<T>]| {
                    let n = rs
                        .iter()
                        .filter_map(Region::centroid)
                        .filter(|&c| site.region.contains_point(c))
                        .count();
                    T::from_usize(n).expect("count fits") / ha
                };
                (count(&obs_regions), count(predicted))
            }
        };
        obs.push(o);
        pred.push(p);
    }
    let unit = match kind {
        SeriesKind::Cover => Unit::PercentCover,
        SeriesKind::Count => Unit::CountPerHectare,
    };
    PairedSeries::new(sites.iter().map(|s| s.id.clone()).collect(), obs, pred, unit)
}
