use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, Point};

/// Image edge length in pixels used for model input.
pub const DEFAULT_TILE_PX: u32 = 448;
/// Nominal ground sample distance of the imagery (m/pixel).
pub const DEFAULT_GSD: f64 = 0.13;

/// One image tile. `(x0, y0)` is the lower-left corner in world metres;
/// pixel rows count downwards from the top edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub tile_id: String,
    pub x0: f64,
    pub y0: f64,
    pub cols: u32,
    pub rows: u32,
    pub gsd: f64,
    #[serde(default)]
    pub image_path: Option<PathBuf>,
}

impl Tile {
    pub fn footprint(&self) -> BBox {
        BBox::new(
            self.x0,
            self.y0,
            self.x0 + f64::from(self.cols) * self.gsd,
            self.y0 + f64::from(self.rows) * self.gsd,
        )
    }

    /// Pixel (column, row-from-top) to world coordinates.
    pub fn pixel_to_world(&self, p: Point) -> Point {
        Point::new(
            self.x0 + p.x * self.gsd,
            self.y0 + (f64::from(self.rows) - p.y) * self.gsd,
        )
    }

    pub fn world_to_pixel(&self, p: Point) -> Point {
        Point::new(
            (p.x - self.x0) / self.gsd,
            f64::from(self.rows) - (p.y - self.y0) / self.gsd,
        )
    }
}

/// Regular grid of square tiles anchored at the lower-left of a bbox.
#[derive(Clone, Debug, PartialEq)]
pub struct TileGrid {
    pub origin: Point,
    pub tile_size_px: u32,
    pub gsd: f64,
    pub rows: usize,
    pub cols: usize,
}

impl TileGrid {
    pub fn tile_edge(&self) -> f64 {
        f64::from(self.tile_size_px) * self.gsd
    }

    /// Tiles in row-major order from the south-west corner. Ids are
    /// `r{row}_c{col}`.
    pub fn tiles(&self) -> Vec<Tile> {
        let edge = self.tile_edge();
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(Tile {
                    tile_id: format!("r{r}_c{c}"),
                    x0: self.origin.x + c as f64 * edge,
                    y0: self.origin.y + r as f64 * edge,
                    cols: self.tile_size_px,
                    rows: self.tile_size_px,
                    gsd: self.gsd,
                    image_path: None,
                });
            }
        }
        out
    }

    /// Half-open cell lookup; `None` outside the grid.
    pub fn tile_of(&self, p: Point) -> Option<(usize, usize)> {
        let edge = self.tile_edge();
        let c = ((p.x - self.origin.x) / edge).floor();
        let r = ((p.y - self.origin.y) / edge).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }
}

/// Counts tiles needed to cover `len` with edges of `edge`, tolerating
/// rounding noise when `len` is an exact multiple.
fn tiles_needed(len: f64, edge: f64) -> usize {
    let n = len / edge;
    let r = n.round();
    if (n - r).abs() <= 1e-9 * r.max(1.0) {
        (r as usize).max(1)
    } else {
        n.ceil() as usize
    }
}

pub fn build_tile_grid(bbox: BBox, tile_size_px: u32, gsd: f64) -> Result<TileGrid> {
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) || !bbox.min_x.is_finite() || !bbox.max_y.is_finite() {
        return Err(Error::DegenerateBBox(format!("{bbox:?}")));
    }
    if !(gsd > 0.0) || tile_size_px == 0 {
        return Err(Error::InvalidArgument(format!(
            "tile size {tile_size_px} px and gsd {gsd} must be positive"
        )));
    }
    let edge = f64::from(tile_size_px) * gsd;
    Ok(TileGrid {
        origin: Point::new(bbox.min_x, bbox.min_y),
        tile_size_px,
        gsd,
        rows: tiles_needed(bbox.height(), edge),
        cols: tiles_needed(bbox.width(), edge),
    })
}
