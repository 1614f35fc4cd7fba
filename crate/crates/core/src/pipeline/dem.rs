use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, Point};
use crate::pipeline::grid::Tile;

/// Regular elevation raster in metres. Row 0 is the northern edge, as in
/// ESRI ASCII grids.
#[derive(Clone, Debug, PartialEq)]
pub struct DemGrid {
    pub ncols: usize,
    pub nrows: usize,
    /// Lower-left corner of the lower-left cell.
    pub xll: f64,
    pub yll: f64,
    pub cell_size: f64,
    pub nodata: f64,
    /// Row-major, north row first.
    pub values: Vec<f64>,
}

impl DemGrid {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cell_size: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 || !(cell_size > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "DEM must be non-empty with positive cell size ({ncols}x{nrows}, {cell_size})"
            )));
        }
        if values.len() != ncols * nrows {
            return Err(Error::InvalidArgument(format!(
                "DEM has {} values, header says {}",
                values.len(),
                ncols * nrows
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() && *v != nodata) {
            return Err(Error::InvalidArgument(format!("DEM value {i} is not finite")));
        }
        Ok(DemGrid {
            ncols,
            nrows,
            xll,
            yll,
            cell_size,
            nodata,
            values,
        })
    }

    /// Builds a DEM by sampling `f` at cell centres.
    pub fn from_fn(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cell_size: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(ncols * nrows);
        for r in 0..nrows {
            for c in 0..ncols {
                let x = xll + (c as f64 + 0.5) * cell_size;
                let y = yll + ((nrows - 1 - r) as f64 + 0.5) * cell_size;
                values.push(f(x, y));
            }
        }
        DemGrid {
            ncols,
            nrows,
            xll,
            yll,
            cell_size,
            nodata: -9999.0,
            values,
        }
    }

    pub fn extent(&self) -> BBox {
        BBox::new(
            self.xll,
            self.yll,
            self.xll + self.ncols as f64 * self.cell_size,
            self.yll + self.nrows as f64 * self.cell_size,
        )
    }

    /// Footprint of cell `(row, col)`.
    pub fn cell_bbox(&self, row: usize, col: usize) -> BBox {
        let x0 = self.xll + col as f64 * self.cell_size;
        let y0 = self.yll + (self.nrows - 1 - row) as f64 * self.cell_size;
        BBox::new(x0, y0, x0 + self.cell_size, y0 + self.cell_size)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.ncols + col];
        (v != self.nodata).then_some(v)
    }

    /// Elevation of the cell containing `p` (half-open cells).
    pub fn sample(&self, p: Point) -> Option<f64> {
        let c = ((p.x - self.xll) / self.cell_size).floor();
        let r_from_south = ((p.y - self.yll) / self.cell_size).floor();
        if c < 0.0 || r_from_south < 0.0 || c >= self.ncols as f64 || r_from_south >= self.nrows as f64 {
            return None;
        }
        self.get(self.nrows - 1 - r_from_south as usize, c as usize)
    }

    /// Valid elevations of cells overlapping `b` with positive area.
    pub fn values_in(&self, b: &BBox) -> Vec<f64> {
        let cs = self.cell_size;
        let lo = |v: f64| ((v / cs).floor() - 1.0).max(0.0) as usize;
        let hi = |v: f64, n: usize| (((v / cs).ceil() + 1.0).max(0.0) as usize).min(n);
        let (c0, c1) = (lo(b.min_x - self.xll), hi(b.max_x - self.xll, self.ncols));
        let (s0, s1) = (lo(b.min_y - self.yll), hi(b.max_y - self.yll, self.nrows));
        let mut out = Vec::new();
        for s in s0..s1 {
            let row = self.nrows - 1 - s;
            for col in c0..c1 {
                let cb = self.cell_bbox(row, col);
                if cb.min_x < b.max_x && cb.max_x > b.min_x && cb.min_y < b.max_y && cb.max_y > b.min_y {
                    if let Some(v) = self.get(row, col) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

/// How a tile's footprint is reduced to one altitude.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AltitudeRule {
    #[default]
    Max,
    Mean,
}

impl std::str::FromStr for AltitudeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(AltitudeRule::Max),
            "mean" => Ok(AltitudeRule::Mean),
            _ => Err(Error::InvalidArgument(format!("unknown altitude rule {s:?} (max|mean)"))),
        }
    }
}

impl std::fmt::Display for AltitudeRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AltitudeRule::Max => "max",
            AltitudeRule::Mean => "mean",
        })
    }
}

pub fn tile_altitude(tile: &Tile, dem: &DemGrid, rule: AltitudeRule) -> Result<f64> {
    let vals = dem.values_in(&tile.footprint());
    if vals.is_empty() {
        return Err(Error::NoDemCoverage(tile.tile_id.clone()));
    }
    Ok(match rule {
        AltitudeRule::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AltitudeRule::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AltitudeFilter {
    pub kept: BTreeSet<String>,
    pub below: BTreeSet<String>,
    /// Tiles whose footprint holds only nodata cells (also dropped).
    pub no_coverage: BTreeSet<String>,
}

/// Keeps tiles whose footprint altitude reaches `min_altitude_m`.
pub fn altitude_filter(tiles: &[Tile], dem: &DemGrid, min_altitude_m: f64, rule: AltitudeRule) -> AltitudeFilter {
    let mut out = AltitudeFilter::default();
    for t in tiles {
        match tile_altitude(t, dem, rule) {
            Ok(a) if a >= min_altitude_m => {
                out.kept.insert(t.tile_id.clone());
            }
            Ok(_) => {
                out.below.insert(t.tile_id.clone());
            }
            Err(e) => {
                log::warn!("{e}; tile dropped");
                out.no_coverage.insert(t.tile_id.clone());
            }
        }
    }
    out
}
