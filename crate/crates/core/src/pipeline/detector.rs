//! The detector port and its adapters.
//!
//! A detector sees one tile at a time and answers in that tile's pixel
//! space (x = column, y = row counted from the top edge). [`run_detector`]
//! moves the answers into world coordinates.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::features::read_features;
use crate::matching::Detection;
use crate::pipeline::grid::Tile;

pub trait DetectorPort: Sync {
    /// Called once before any tile; an error here aborts the run.
    fn check(&self) -> Result<()> {
        Ok(())
    }

    /// Detections for one tile, in tile pixel coordinates.
    fn detect(&self, tile: &Tile) -> Result<Vec<Detection>>;
}

/// In-memory detector for tests and fixtures.
#[derive(Clone, Debug, Default)]
pub struct StubDetector {
    pub per_tile: HashMap<String, Vec<Detection>>,
    pub failing: Vec<String>,
}

impl StubDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, tile_id: &str, dets: Vec<Detection>) -> Self {
        self.per_tile.entry(tile_id.to_string()).or_default().extend(dets);
        self
    }

    pub fn failing_on(mut self, tile_id: &str) -> Self {
        self.failing.push(tile_id.to_string());
        self
    }
}

impl DetectorPort for StubDetector {
    fn detect(&self, tile: &Tile) -> Result<Vec<Detection>> {
        if self.failing.contains(&tile.tile_id) {
            return Err(Error::DetectorUnavailable(format!("stub failure on {}", tile.tile_id)));
        }
        Ok(self.per_tile.get(&tile.tile_id).cloned().unwrap_or_default())
    }
}

/// Reads precomputed `<dir>/<tile_id>.geojson` files. A missing or
/// unreadable file is a failure of that tile.
#[derive(Clone, Debug)]
pub struct FileDetector {
    pub dir: PathBuf,
}

impl FileDetector {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FileDetector { dir: dir.into() }
    }
}

impl DetectorPort for FileDetector {
    fn check(&self) -> Result<()> {
        if self.dir.is_dir() {
            Ok(())
        } else {
            Err(Error::DetectorUnavailable(format!("{} is not a directory", self.dir.display())))
        }
    }

    fn detect(&self, tile: &Tile) -> Result<Vec<Detection>> {
        Ok(read_features(self.dir.join(format!("{}.geojson", tile.tile_id)))?.detections)
    }
}

/// Runs an external program per tile:
///
/// ```text
/// <program> <args..> --image <path> --out <file> --tile-id <id>
///           --x0 <m> --y0 <m> --gsd <m> --cols <px> --rows <px>
/// ```
///
/// The program must write a feature file of detections in pixel space to
/// `--out`. A nonzero exit marks the tile as failed.
#[derive(Clone, Debug)]
pub struct ProcessDetector {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub work_dir: PathBuf,
}

impl ProcessDetector {
    pub fn new(program: impl Into<PathBuf>, work_dir: impl Into<PathBuf>) -> Self {
        ProcessDetector {
            program: program.into(),
            args: Vec::new(),
            work_dir: work_dir.into(),
        }
    }

    fn out_path(&self, tile: &Tile) -> PathBuf {
        self.work_dir.join(format!("{}.geojson", tile.tile_id))
    }
}

fn program_exists(p: &Path) -> bool {
    if p.components().count() > 1 {
        return p.is_file();
    }
    std::env::var_os("PATH")
        .map(|paths| std::env::split_paths(&paths).any(|d| d.join(p).is_file()))
        .unwrap_or(false)
}

impl DetectorPort for ProcessDetector {
    fn check(&self) -> Result<()> {
        if !program_exists(&self.program) {
            return Err(Error::DetectorUnavailable(format!(
                "detector program {} not found",
                self.program.display()
            )));
        }
        std::fs::create_dir_all(&self.work_dir).map_err(|e| Error::io(&self.work_dir, e))
    }

    fn detect(&self, tile: &Tile) -> Result<Vec<Detection>> {
        let out = self.out_path(tile);
        let image = tile
            .image_path
            .as_ref()
            .ok_or_else(|| Error::DetectorUnavailable(format!("tile {} has no image path", tile.tile_id)))?;
        let status = Command::new(&self.program)
            .args(&self.args)
            .arg("--image")
            .arg(image)
            .arg("--out")
            .arg(&out)
            .args(["--tile-id", &tile.tile_id])
            .args(["--x0", &tile.x0.to_string(), "--y0", &tile.y0.to_string()])
            .args(["--gsd", &tile.gsd.to_string()])
            .args(["--cols", &tile.cols.to_string(), "--rows", &tile.rows.to_string()])
            .status()
            .map_err(|e| Error::DetectorUnavailable(format!("{}: {e}", self.program.display())))?;
        if !status.success() {
            return Err(Error::DetectorUnavailable(format!(
                "detector exited with {status} on tile {}",
                tile.tile_id
            )));
        }
        Ok(read_features(out)?.detections)
    }
}

#[derive(Clone, Debug, Default)]
pub struct DetectorRun {
    /// World-coordinate detections, grouped by tile in input order.
    pub detections: Vec<Detection>,
    pub failures: Vec<(String, String)>,
}

/// Runs the detector over tiles on at most `workers` threads.
pub fn run_detector(tiles: &[Tile], detector: &dyn DetectorPort, workers: usize) -> Result<DetectorRun> {
    detector.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::DetectorUnavailable(e.to_string()))?;
    let per_tile: Vec<Result<Vec<Detection>>> = pool.install(|| {
        tiles
            .par_iter()
            .map(|t| {
                detector.detect(t)?.into_iter().map(|d| to_world(t, d)).collect()
            })
            .collect()
    });
    let mut run = DetectorRun::default();
    for (t, res) in tiles.iter().zip(per_tile) {
        match res {
            Ok(ds) => run.detections.extend(ds),
            Err(e) => {
                log::warn!("detector failed on tile {}: {e}", t.tile_id);
                run.failures.push((t.tile_id.clone(), e.to_string()));
            }
        }
    }
    Ok(run)
}

fn to_world(tile: &Tile, d: Detection) -> Result<Detection> {
    Ok(Detection {
        region: d.region.map_points(|p| tile.pixel_to_world(p))?,
        score: d.score,
        tile_id: Some(tile.tile_id.clone()),
    })
}
