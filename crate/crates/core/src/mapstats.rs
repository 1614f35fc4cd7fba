//! Map summaries: shrub density per hectare, altitudinal distribution and
//! canopy cover.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Map;

use crate::geometry::{self, BBox, Point, Region};
use crate::io::FeatureWriter;
use crate::metrics::{classify_size, SizeClass};
use crate::pipeline::DemGrid;
use crate::scalar::Scalar;

/// Density cell edge (m); one cell is one hectare.
pub const HECTARE_EDGE: f64 = 100.0;
pub const HIST_MIN_ALT: f64 = 1900.0;
pub const HIST_MAX_ALT: f64 = 3500.0;
pub const HIST_BIN: f64 = 100.0;

/// Centroid counts on a hectare grid.
///
/// The anchor is the extent's lower-left corner snapped down to a multiple
/// of 100 m. Cells are half-open `[x, x+100) × [y, y+100)`, so a centroid on
/// a shared edge goes to the cell right of / above it. The last row and
/// column reach past the extent, so every point of the closed extent lands
/// in some cell.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub x0: f64,
    pub y0: f64,
    pub ncols: usize,
    pub nrows: usize,
    /// Row-major, row 0 is the southernmost.
    pub counts: Vec<u64>,
    /// Detections whose centroid lies outside the extent.
    pub outside: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub col: usize,
    pub row: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub count: u64,
}

impl DensityGrid {
    pub fn get(&self, col: usize, row: usize) -> u64 {
        self.counts[row * self.ncols + col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn cell_bbox(&self, col: usize, row: usize) -> BBox {
        let x = self.x0 + col as f64 * HECTARE_EDGE;
        let y = self.y0 + row as f64 * HECTARE_EDGE;
        BBox::new(x, y, x + HECTARE_EDGE, y + HECTARE_EDGE)
    }

    /// One row per cell, south to north then west to east.
    pub fn rows(&self) -> Vec<DensityRow> {
        let mut out = Vec::with_capacity(self.counts.len());
        for row in 0..self.nrows {
            for col in 0..self.ncols {
                let b = self.cell_bbox(col, row);
                out.push(DensityRow {
                    col,
                    row,
                    x_min: b.min_x,
                    y_min: b.min_y,
                    count: self.get(col, row),
                });
            }
        }
        out
    }

    pub fn to_geojson(&self, crs: Option<&str>) -> String {
        let mut w = FeatureWriter::new(crs);
        for r in self.rows() {
            let mut p = Map::new();
            p.insert("col".into(), (r.col as u64).into());
            p.insert("row".into(), (r.row as u64).into());
            p.insert("count".into(), r.count.into());
            w.push(&self.cell_bbox(r.col, r.row).to_region(), p);
        }
        w.finish()
    }
}

/// Counts region centroids per hectare cell over `extent`.
pub fn density_grid<T: Scalar>(regions: &[Region<T>], extent: BBox) -> DensityGrid {
    let x0 = (extent.min_x / HECTARE_EDGE).floor() * HECTARE_EDGE;
    let y0 = (extent.min_y / HECTARE_EDGE).floor() * HECTARE_EDGE;
    let ncols = ((extent.max_x - x0) / HECTARE_EDGE).floor() as usize + 1;
    let nrows = ((extent.max_y - y0) / HECTARE_EDGE).floor() as usize + 1;
    let cells: Vec<Option<usize>> = regions
        .par_iter()
        .map(|r| {
            let c = r.centroid()?;
            let (x, y) = (c.x.as_f64(), c.y.as_f64());
            if x < extent.min_x || x > extent.max_x || y < extent.min_y || y > extent.max_y {
                return None;
            }
            let col = (((x - x0) / HECTARE_EDGE).floor() as usize).min(ncols - 1);
            let row = (((y - y0) / HECTARE_EDGE).floor() as usize).min(nrows - 1);
            Some(row * ncols + col)
        })
        .collect();
    let mut counts = vec![0u64; ncols * nrows];
    let mut outside = 0;
    for c in cells {
        match c {
            Some(i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    DensityGrid {
        x0,
        y0,
        ncols,
        nrows,
        counts,
        outside,
    }
}

fn bin_count() -> usize {
    ((HIST_MAX_ALT - HIST_MIN_ALT) / HIST_BIN).round() as usize
}

/// Per-bin counts for one stratum, with out-of-range counters so that
/// `under + bins + over` equals the number of binned shrubs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AltitudeCounts {
    pub bins: Vec<u64>,
    pub under: u64,
    pub over: u64,
    altitudes: Vec<f64>,
}

impl AltitudeCounts {
    fn new() -> Self {
        AltitudeCounts {
            bins: vec![0; bin_count()],
            ..Default::default()
        }
    }

    fn add(&mut self, alt: f64) {
        if alt < HIST_MIN_ALT {
            self.under += 1;
        } else if alt >= HIST_MAX_ALT {
            self.over += 1;
        } else {
            let i = ((alt - HIST_MIN_ALT) / HIST_BIN).floor() as usize;
            let last = self.bins.len() - 1;
            self.bins[i.min(last)] += 1;
        }
        self.altitudes.push(alt);
    }

    pub fn total(&self) -> u64 {
        self.under + self.over + self.bins.iter().sum::<u64>()
    }

    pub fn median(&self) -> Option<f64> {
        median(&self.altitudes)
    }
}

fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AltitudeHistogram {
    pub all: AltitudeCounts,
    /// Present when stratified; every class has an entry.
    pub by_size: Option<BTreeMap<SizeClass, AltitudeCounts>>,
    /// Shrubs whose centroid falls on nodata or outside the DEM.
    pub no_coverage: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRow {
    pub stratum: String,
    pub bin: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MedianRow {
    pub stratum: String,
    pub n: u64,
    pub median_altitude: Option<f64>,
}

impl AltitudeHistogram {
    /// Bin edges, `1900, 2000, …, 3500`.
    pub fn edges() -> Vec<f64> {
        (0..=bin_count()).map(|i| HIST_MIN_ALT + i as f64 * HIST_BIN).collect()
    }

    fn strata(&self) -> Vec<(String, &AltitudeCounts)> {
        let mut s = vec![("All".to_string(), &self.all)];
        if let Some(by) = &self.by_size {
            s.extend(by.iter().map(|(k, v)| (k.to_string(), v)));
        }
        s
    }

    pub fn rows(&self) -> Vec<HistogramRow> {
        let edges = Self::edges();
        let mut out = Vec::new();
        for (name, c) in self.strata() {
            out.push(HistogramRow {
                stratum: name.clone(),
                bin: format!("<{HIST_MIN_ALT}"),
                lo: None,
                hi: Some(HIST_MIN_ALT),
                count: c.under,
            });
            for (i, &n) in c.bins.iter().enumerate() {
                out.push(HistogramRow {
                    stratum: name.clone(),
                    bin: format!("{}-{}", edges[i], edges[i + 1]),
                    lo: Some(edges[i]),
                    hi: Some(edges[i + 1]),
                    count: n,
                });
            }
            out.push(HistogramRow {
                stratum: name,
                bin: format!(">={HIST_MAX_ALT}"),
                lo: Some(HIST_MAX_ALT),
                hi: None,
                count: c.over,
            });
        }
        out
    }

    pub fn median_rows(&self) -> Vec<MedianRow> {
        self.strata()
            .into_iter()
            .map(|(stratum, c)| MedianRow {
                stratum,
                n: c.total(),
                median_altitude: c.median(),
            })
            .collect()
    }
}

/// Bins shrubs by DEM elevation at their centroid, optionally split by
/// size class.
pub fn altitude_histogram<T: Scalar>(regions: &[Region<T>], dem: &DemGrid, by_size: bool) -> AltitudeHistogram {
    let sampled: Vec<Option<(f64, Option<SizeClass>)>> = regions
        .par_iter()
        .map(|r| {
            let c = r.centroid()?;
            let alt = dem.sample(Point::new(c.x.as_f64(), c.y.as_f64()))?;
            Some((alt, classify_size(r.area()).ok()))
        })
        .collect();
    let mut hist = AltitudeHistogram {
        all: AltitudeCounts::new(),
        by_size: by_size.then(|| SizeClass::ALL.iter().map(|&c| (c, AltitudeCounts::new())).collect()),
        no_coverage: 0,
    };
    for s in sampled {
        let Some((alt, class)) = s else {
            hist.no_coverage += 1;
            continue;
        };
        hist.all.add(alt);
        if let (Some(by), Some(class)) = (hist.by_size.as_mut(), class) {
            by.get_mut(&class).expect("all classes present").add(alt);
        }
    }
    if hist.no_coverage > 0 {
        log::warn!("{} shrubs have no DEM value at their centroid and were not binned", hist.no_coverage);
    }
    hist
}

/// Percentage of `site` covered by the union of `regions`.
pub fn canopy_cover<T: Scalar>(regions: &[Region<T>], site: &Region<T>) -> T {
    let site_area = site.area();
    if !(site_area > T::zero()) {
        return T::zero();
    }
    let Some(sb) = site.bbox() else {
        return T::zero();
    };
    let near: Vec<Region<T>> = regions
        .iter()
        .filter(|r| r.bbox().is_some_and(|b| b.intersects(&sb)))
        .cloned()
        .collect();
    let covered = geometry::intersection(&geometry::union(&near), site).area();
    let pct = T::lit(100.0) * covered / site_area;
    pct.max(T::zero()).min(T::lit(100.0))
}
