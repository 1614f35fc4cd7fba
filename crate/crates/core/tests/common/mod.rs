//! Shared fixtures: an exact rectangle oracle that never touches the
//! overlay engine, random scene generators and the synthetic pipeline
//! scene.
#![allow(dead_code)]

use canopy::matching::Metric;
use canopy::pipeline::{build_tile_grid, DemGrid, StubDetector, Tile};
use canopy::{BBox, Detection, GroundTruth, Point, Region, Source};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn clip(&self, o: &Rect) -> Option<Rect> {
        let r = Rect::new(self.x0.max(o.x0), self.y0.max(o.y0), self.x1.min(o.x1), self.y1.min(o.y1));
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    pub fn inter_area(&self, o: &Rect) -> f64 {
        self.clip(o).map_or(0.0, |r| r.area())
    }

    pub fn region(&self) -> Region {
        Region::rect(self.x0, self.y0, self.x1, self.y1)
    }

    /// Gap between two rectangles (0 when touching or overlapping).
    pub fn distance(&self, o: &Rect) -> f64 {
        let dx = (o.x0 - self.x1).max(self.x0 - o.x1).max(0.0);
        let dy = (o.y0 - self.y1).max(self.y0 - o.y1).max(0.0);
        dx.hypot(dy)
    }
}

/// Area of a union of rectangles by coordinate compression.
pub fn union_area(rs: &[Rect]) -> f64 {
    let mut xs: Vec<f64> = rs.iter().flat_map(|r| [r.x0, r.x1]).collect();
    let mut ys: Vec<f64> = rs.iter().flat_map(|r| [r.y0, r.y1]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut total = 0.0;
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let (cx, cy) = ((xs[i] + xs[i + 1]) / 2.0, (ys[j] + ys[j + 1]) / 2.0);
            if rs.iter().any(|r| r.x0 < cx && cx < r.x1 && r.y0 < cy && cy < r.y1) {
                total += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            }
        }
    }
    total
}

pub fn oracle_iou(a: &Rect, b: &Rect) -> f64 {
    let i = a.inter_area(b);
    i / (a.area() + b.area() - i)
}

#[derive(Clone, Debug)]
pub struct RectScene {
    pub dets: Vec<(Rect, f64)>,
    pub gts: Vec<Rect>,
}

impl RectScene {
    pub fn detections(&self) -> Vec<Detection> {
        self.dets.iter().map(|(r, s)| Detection::new(r.region(), *s).unwrap()).collect()
    }

    pub fn groundtruths(&self) -> Vec<GroundTruth> {
        self.gts
            .iter()
            .enumerate()
            .map(|(i, r)| GroundTruth::new(r.region(), format!("g{i}"), Source::PI))
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    pub metric: Metric,
    pub thr: f64,
    pub theta: f64,
    pub min_label_fraction: f64,
}

fn member(p: &Rect, l: &Rect, frac: f64) -> bool {
    let i = p.inter_area(l);
    i > 1e-9 && (frac <= 0.0 || i / l.area() >= frac)
}

/// Exhaustive two-pass evaluation straight from pairwise and union areas.
pub fn oracle_counts(s: &RectScene, c: &OracleConfig) -> (u64, u64, u64) {
    let preds: Vec<Rect> = s.dets.iter().filter(|(_, sc)| *sc >= c.theta).map(|(r, _)| *r).collect();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for p in &preds {
        let m: Vec<Rect> = s.gts.iter().copied().filter(|l| member(p, l, c.min_label_fraction)).collect();
        if m.is_empty() {
            fp += 1;
            continue;
        }
        let v = match c.metric {
            Metric::IoU => m.iter().map(|l| oracle_iou(p, l)).fold(0.0, f64::max),
            Metric::SIoU => {
                let clipped: Vec<Rect> = m.iter().filter_map(|l| l.clip(p)).collect();
                union_area(&clipped) / union_area(&m)
            }
        };
        if v >= c.thr {
            tp += 1;
        } else {
            fp += 1;
        }
    }
    for l in &s.gts {
        let m: Vec<Rect> = preds.iter().copied().filter(|p| member(p, l, c.min_label_fraction)).collect();
        if m.is_empty() {
            fn_ += 1;
            continue;
        }
        let v = match c.metric {
            Metric::IoU => m.iter().map(|p| oracle_iou(p, l)).fold(0.0, f64::max),
            Metric::SIoU => {
                let clipped: Vec<Rect> = m.iter().filter_map(|p| p.clip(l)).collect();
                union_area(&clipped) / l.area()
            }
        };
        if v < c.thr {
            fn_ += 1;
        }
    }
    (tp, fp, fn_)
}

pub fn random_rect<R: Rng>(rng: &mut R, dyadic: bool) -> Rect {
    if dyadic {
        // quarter-metre grid: every area and ratio is exact
        let q = |rng: &mut R, lo: i32, hi: i32| rng.random_range(lo..=hi) as f64 * 0.25;
        let (x, y) = (q(rng, 0, 24), q(rng, 0, 24));
        let (w, h) = (q(rng, 1, 12), q(rng, 1, 12));
        Rect::new(x, y, x + w, y + h)
    } else {
        let (x, y) = (rng.random_range(0.0..6.0), rng.random_range(0.0..6.0));
        let (w, h) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        Rect::new(x, y, x + w, y + h)
    }
}

pub fn random_scene<R: Rng>(rng: &mut R, dyadic: bool) -> RectScene {
    let nd = rng.random_range(0..=8);
    let ng = rng.random_range(0..=8);
    let dets = (0..nd)
        .map(|_| {
            let score = if dyadic {
                rng.random_range(0..=4) as f64 * 0.25
            } else {
                rng.random_range(0.0..=1.0)
            };
            (random_rect(rng, dyadic), score)
        })
        .collect();
    let gts = (0..ng).map(|_| random_rect(rng, dyadic)).collect();
    RectScene { dets, gts }
}

/// The 20-shrub, 2x2-tile synthetic deployment scene.
///
/// Altitude rises 1 m per metre northwards from 1800 m, so the southern
/// tile row peaks at 1859 m and the northern one at 1917 m. The shrubs:
///
/// * 4 in the southern tiles, dropped with their tiles;
/// * 11 whole shrubs in the northern tiles, all at least 1.04 m² and
///   scoring at least 0.5 (one exactly 0.5);
/// * 1 shrub cut by the vertical seam into two 0.8 m² halves, each below
///   the area limit, 1.6 m² once dissolved;
/// * 1 larger seam shrub whose halves score 0.4 and 0.6;
/// * 1 shrub detected twice with overlapping masks;
/// * 1 shrub of 0.9 m², removed by area;
/// * 1 shrub scoring 0.3, removed by score.
///
/// Expected map: 11 + 3 = 14 shrubs.
pub struct PipelineScene {
    pub tiles: Vec<Tile>,
    pub dem: DemGrid,
    pub detector: StubDetector,
    pub expected: usize,
}

pub fn pipeline_scene() -> PipelineScene {
    let (ox, oy) = (500_000.0, 4_100_000.0);
    let grid = build_tile_grid(BBox::new(ox, oy, ox + 100.0, oy + 100.0), 448, 0.13).unwrap();
    let tiles = grid.tiles();
    assert_eq!(tiles.len(), 4);
    let dem = DemGrid::from_fn(60, 60, ox, oy, 2.0, |_, y| 1800.0 + (y - oy));
    let tile = |id: &str| tiles.iter().find(|t| t.tile_id == id).unwrap().clone();
    let seam = tile("r1_c0").footprint().max_x - ox;

    // (tile, x0, y0, x1, y1, score) in metres from the grid origin
    let shrubs: Vec<(&str, f64, f64, f64, f64, f64)> = vec![
        // southern row
        ("r0_c0", 10.0, 10.0, 12.0, 12.0, 0.9),
        ("r0_c0", 30.0, 30.0, 31.5, 31.5, 0.8),
        ("r0_c1", 70.0, 10.0, 72.0, 12.0, 0.9),
        ("r0_c1", 90.0, 40.0, 93.0, 43.0, 0.95),
        // whole northern shrubs
        ("r1_c0", 5.0, 65.0, 7.0, 67.0, 0.9),
        ("r1_c0", 15.0, 70.0, 16.5, 71.5, 0.85),
        ("r1_c0", 25.0, 80.0, 28.0, 83.0, 0.7),
        ("r1_c0", 40.0, 90.0, 42.0, 91.0, 0.6),
        ("r1_c0", 10.0, 100.0, 11.2, 101.0, 0.55),
        ("r1_c0", 45.0, 105.0, 46.02, 106.02, 0.5),
        ("r1_c1", 65.0, 65.0, 67.0, 67.0, 0.9),
        ("r1_c1", 75.0, 75.0, 80.0, 80.0, 0.8),
        ("r1_c1", 90.0, 95.0, 92.0, 96.0, 0.75),
        ("r1_c1", 100.0, 70.0, 101.5, 71.0, 0.65),
        ("r1_c1", 110.0, 110.0, 112.0, 112.0, 0.99),
        // seam halves
        ("r1_c0", seam - 0.8, 85.0, seam, 86.0, 0.6),
        ("r1_c1", seam, 85.0, seam + 0.8, 86.0, 0.8),
        ("r1_c0", seam - 2.0, 100.0, seam, 102.0, 0.4),
        ("r1_c1", seam, 100.0, seam + 3.0, 102.0, 0.6),
        // duplicate masks
        ("r1_c0", 20.0, 95.0, 22.0, 97.0, 0.45),
        ("r1_c0", 20.5, 95.5, 22.5, 97.5, 0.7),
        // filtered out
        ("r1_c1", 85.0, 62.0, 85.9, 63.0, 0.9),
        ("r1_c0", 35.0, 110.0, 37.0, 112.0, 0.3),
    ];
    let mut per_tile: std::collections::BTreeMap<String, Vec<Detection>> = Default::default();
    for (id, x0, y0, x1, y1, score) in shrubs {
        let t = tile(id);
        let a = t.world_to_pixel(Point::new(ox + x0, oy + y0));
        let b = t.world_to_pixel(Point::new(ox + x1, oy + y1));
        let px = Region::rect(a.x, b.y, b.x, a.y);
        per_tile.entry(id.to_string()).or_default().push(Detection::new(px, score).unwrap());
    }
    let mut detector = StubDetector::new();
    for (id, dets) in per_tile {
        detector = detector.with(&id, dets);
    }
    PipelineScene {
        tiles,
        dem,
        detector,
        expected: 14,
    }
}
