//! Merging detections of the same object across tile seams.

use std::collections::BTreeSet;

use rayon::prelude::*;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{intersection, union, Point, Region, EMPTY_AREA};
use crate::matching::Detection;
use crate::scalar::Scalar;

/// Default gap (m) under which two detections count as touching.
pub const SNAP_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreField {
    Avg,
    Median,
    #[default]
    Max,
}

impl std::str::FromStr for ScoreField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" | "mean" => Ok(ScoreField::Avg),
            "median" => Ok(ScoreField::Median),
            "max" => Ok(ScoreField::Max),
            _ => Err(Error::InvalidArgument(format!("unknown score field {s:?} (avg|median|max)"))),
        }
    }
}

impl std::fmt::Display for ScoreField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreField::Avg => "avg",
            ScoreField::Median => "median",
            ScoreField::Max => "max",
        })
    }
}

/// One object after dissolving, with aggregated member scores.
#[derive(Clone, Debug, PartialEq)]
pub struct DissolvedDetection<T = f64> {
    pub region: Region<T>,
    pub score_avg: T,
    pub score_median: T,
    pub score_max: T,
    pub member_count: usize,
    pub source_tiles: BTreeSet<String>,
}

impl<T: Scalar> DissolvedDetection<T> {
    pub fn score(&self, field: ScoreField) -> T {
        match field {
            ScoreField::Avg => self.score_avg,
            ScoreField::Median => self.score_median,
            ScoreField::Max => self.score_max,
        }
    }

    fn from_members(region: Region<T>, members: &[&Detection<T>]) -> Self {
        let mut scores: Vec<T> = members.iter().map(|d| d.score).collect();
        scores.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let n = scores.len();
        let sum = scores.iter().fold(T::zero(), |s, &v| s + v);
        let median = if n % 2 == 1 {
            scores[n / 2]
        } else {
            (scores[n / 2 - 1] + scores[n / 2]) * T::half()
        };
        DissolvedDetection {
            region,
            score_avg: (sum / T::from_usize(n).unwrap()).min(scores[n - 1]),
            score_median: median,
            score_max: scores[n - 1],
            member_count: n,
            source_tiles: members.iter().filter_map(|d| d.tile_id.clone()).collect(),
        }
    }

    /// Back to a plain detection carrying one of the aggregate scores.
    pub fn to_detection(&self, field: ScoreField) -> Detection<T> {
        Detection {
            region: self.region.clone(),
            score: self.score(field),
            tile_id: self.source_tiles.iter().next().cloned(),
        }
    }
}

fn point_segment_dist2<T: Scalar>(p: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let d = b.sub(a);
    let len2 = d.dot(d);
    let t = if len2 > T::zero() {
        (p.sub(a).dot(d) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let q = Point::new(a.x + d.x * t, a.y + d.y * t);
    p.sub(q).dot(p.sub(q))
}

fn segments_cross<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let o = |p: Point<T>, q: Point<T>, r: Point<T>| q.sub(p).cross(r.sub(p));
    let opposite = |s: T, t: T| (s > T::zero() && t < T::zero()) || (s < T::zero() && t > T::zero());
    opposite(o(a, b, c), o(a, b, d)) && opposite(o(c, d, a), o(c, d, b))
}

/// Shortest distance between the boundaries of two regions, capped early
/// once it drops to `stop`.
fn boundary_distance<T: Scalar>(a: &Region<T>, b: &Region<T>, stop: T) -> T {
    let edges = |r: &Region<T>| -> Vec<(Point<T>, Point<T>)> {
        r.parts()
            .iter()
            .flat_map(|p| p.rings())
            .flat_map(|ring| ring.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>())
            .collect()
    };
    let (ea, eb) = (edges(a), edges(b));
    let stop2 = stop * stop;
    let mut best = T::infinity();
    for &(p, q) in &ea {
        for &(r, s) in &eb {
            if segments_cross(p, q, r, s) {
                return T::zero();
            }
            let d = point_segment_dist2(p, r, s)
                .min(point_segment_dist2(q, r, s))
                .min(point_segment_dist2(r, p, q))
                .min(point_segment_dist2(s, p, q));
            if d < best {
                best = d;
                if best <= stop2 {
                    return best.sqrt();
                }
            }
        }
    }
    best.sqrt()
}

/// Overlap with positive area, or boundaries within `tolerance`.
pub fn adjacent<T: Scalar>(a: &Region<T>, b: &Region<T>, tolerance: T) -> bool {
    let (Some(ba), Some(bb)) = (a.bbox(), b.bbox()) else {
        return false;
    };
    if !ba.expand(tolerance).intersects(&bb) {
        return false;
    }
    boundary_distance(a, b, tolerance) <= tolerance || intersection(a, b).area() > T::lit(EMPTY_AREA)
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Groups detections into connected components of the adjacency relation.
/// Components are listed by their smallest member index; members ascend.
/// Detections with empty regions are left out.
pub fn components<T: Scalar>(dets: &[Detection<T>], tolerance: T) -> Vec<Vec<usize>> {
    let live: Vec<usize> = (0..dets.len()).filter(|&i| !dets[i].region.is_empty()).collect();
    if live.len() < dets.len() {
        log::debug!("dissolve: skipped {} empty detections", dets.len() - live.len());
    }
    let tol = tolerance.as_f64();
    let boxes: Vec<GeomWithData<Rectangle<[f64; 2]>, usize>> = live
        .iter()
        .map(|&i| {
            let b = dets[i].region.bbox().expect("non-empty region");
            GeomWithData::new(
                Rectangle::from_corners(
                    [b.min_x.as_f64() - tol, b.min_y.as_f64() - tol],
                    [b.max_x.as_f64() + tol, b.max_y.as_f64() + tol],
                ),
                i,
            )
        })
        .collect();
    let tree = RTree::bulk_load(boxes.clone());

    let links: Vec<(usize, usize)> = boxes
        .par_iter()
        .flat_map_iter(|g| {
            let i = g.data;
            let env = AABB::from_corners(g.geom().lower(), g.geom().upper());
            let mut out = Vec::new();
            for other in tree.locate_in_envelope_intersecting(&env) {
                let j = other.data;
                if j > i && adjacent(&dets[i].region, &dets[j].region, tolerance) {
                    out.push((i, j));
                }
            }
            out
        })
        .collect();

    let mut ds = DisjointSet::new(dets.len());
    for (i, j) in links {
        ds.union(i, j);
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for &i in &live {
        groups.entry(ds.find(i)).or_default().push(i);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Unions each connected group of adjacent detections into one object.
pub fn dissolve<T: Scalar>(dets: &[Detection<T>], tolerance: T) -> Vec<DissolvedDetection<T>> {
    components(dets, tolerance)
        .par_iter()
        .map(|members| {
            let ds: Vec<&Detection<T>> = members.iter().map(|&i| &dets[i]).collect();
            let region = if ds.len() == 1 {
                ds[0].region.clone()
            } else {
                union(&ds.iter().map(|d| d.region.clone()).collect::<Vec<_>>())
            };
            DissolvedDetection::from_members(region, &ds)
        })
        .collect()
}
