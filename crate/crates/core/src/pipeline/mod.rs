//! Wall-to-wall post-processing of tiled detections.
//!
//! Steps: lay a tile grid over the territory, drop tiles below an
//! altitude, run the detector on the rest, dissolve detections that touch
//! across tile seams, drop small objects, then apply the score threshold.

pub mod dem;
pub mod detector;
pub mod dissolve;
pub mod grid;

use std::cmp::Ordering;

pub use dem::{altitude_filter, AltitudeFilter, AltitudeRule, DemGrid};
pub use detector::{run_detector, DetectorPort, FileDetector, ProcessDetector, StubDetector};
pub use dissolve::{dissolve, DissolvedDetection, ScoreField, SNAP_TOLERANCE};
pub use grid::{build_tile_grid, Tile, TileGrid};

use crate::error::Result;
use crate::scalar::Scalar;

/// Objects smaller than this (m²) are removed by default.
pub const DEFAULT_MIN_AREA: f64 = 1.04;
/// Default minimum tile altitude (m).
pub const DEFAULT_MIN_ALTITUDE: f64 = 1900.0;
/// Recommended deployment score threshold.
pub const DEFAULT_THETA: f64 = 0.5;

/// Keeps objects with area at least `min_area_m2`; returns the survivors
/// and the number removed.
pub fn area_filter<T: Scalar>(dets: Vec<DissolvedDetection<T>>, min_area_m2: T) -> (Vec<DissolvedDetection<T>>, usize) {
    let before = dets.len();
    let kept: Vec<_> = dets.into_iter().filter(|d| d.region.area() >= min_area_m2).collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Applies the score threshold on the chosen aggregate and orders the map
/// by centroid `(y, x)`.
pub fn merge_map<T: Scalar>(dets: Vec<DissolvedDetection<T>>, field: ScoreField, theta: T) -> Vec<DissolvedDetection<T>> {
    let mut kept: Vec<(T, T, DissolvedDetection<T>)> = dets
        .into_iter()
        .filter(|d| d.score(field) >= theta)
        .map(|d| {
            let c = d.region.centroid().unwrap_or_default();
            (c.y, c.x, d)
        })
        .collect();
    kept.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
    });
    kept.into_iter().map(|(_, _, d)| d).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub min_altitude: f64,
    pub altitude_rule: AltitudeRule,
    pub min_area: f64,
    pub score_field: ScoreField,
    pub theta: f64,
    pub snap_tolerance: f64,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_altitude: DEFAULT_MIN_ALTITUDE,
            altitude_rule: AltitudeRule::Max,
            min_area: DEFAULT_MIN_AREA,
            score_field: ScoreField::Max,
            theta: DEFAULT_THETA,
            snap_tolerance: SNAP_TOLERANCE,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineReport {
    pub tiles_total: usize,
    pub altitude: AltitudeFilter,
    pub detector_failures: Vec<(String, String)>,
    pub raw_detections: usize,
    pub dissolved: usize,
    pub removed_by_area: usize,
    pub removed_by_score: usize,
}

#[derive(Clone, Debug, Default)]
pub struct PipelineOutput {
    pub map: Vec<DissolvedDetection>,
    pub report: PipelineReport,
}

/// Runs altitude filtering through to the final map.
pub fn run_pipeline(tiles: &[Tile], dem: &DemGrid, detector: &dyn DetectorPort, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let altitude = altitude_filter(tiles, dem, cfg.min_altitude, cfg.altitude_rule);
    let kept: Vec<Tile> = tiles.iter().filter(|t| altitude.kept.contains(&t.tile_id)).cloned().collect();
    let run = run_detector(&kept, detector, cfg.workers)?;
    let dissolved = dissolve(&run.detections, cfg.snap_tolerance);
    let n_dissolved = dissolved.len();
    let (big, removed_by_area) = area_filter(dissolved, cfg.min_area);
    let n_big = big.len();
    let map = merge_map(big, cfg.score_field, cfg.theta);
    let report = PipelineReport {
        tiles_total: tiles.len(),
        altitude,
        detector_failures: run.failures,
        raw_detections: run.detections.len(),
        dissolved: n_dissolved,
        removed_by_area,
        removed_by_score: n_big - map.len(),
    };
    log::info!(
        "pipeline: {} tiles, {} kept by altitude, {} detections, {} objects, {} in map",
        report.tiles_total,
        report.altitude.kept.len(),
        report.raw_detections,
        report.dissolved,
        map.len()
    );
    Ok(PipelineOutput { map, report })
}
