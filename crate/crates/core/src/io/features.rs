//! GeoJSON feature files carrying detections and ground truths.
//!
//! Each feature is a Polygon or MultiPolygon in projected metres with
//! properties `role` (`detection` | `groundtruth` | `site`), `score`
//! (detections), `id`, `source` (`PI` | `FW`) and optional `tile_id`. Sites
//! are validation footprints. The CRS name sits in
//! a top-level `crs` member and is recorded, never transformed.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, FeatureProblem, ProblemKind, Result};
use crate::geometry::{Point, Polygon, Region};
use crate::matching::{Detection, GroundTruth, Source};
use crate::pipeline::DissolvedDetection;
use crate::validation::Site;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureSet {
    pub crs: Option<String>,
    pub detections: Vec<Detection>,
    /// Per-detection `id` property, or the feature index when absent.
    pub detection_ids: Vec<String>,
    pub groundtruths: Vec<GroundTruth>,
    pub sites: Vec<Site>,
}

impl FeatureSet {
    /// Fails when both sets name a CRS and the names differ.
    pub fn check_crs(&self, other: &FeatureSet) -> Result<()> {
        check_crs(self.crs.as_deref(), other.crs.as_deref())
    }
}

pub fn check_crs(a: Option<&str>, b: Option<&str>) -> Result<()> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(Error::CrsMismatch {
            left: x.to_string(),
            right: y.to_string(),
        }),
        _ => Ok(()),
    }
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text, path)
}

/// Parses feature-file text; `path` only labels errors.
pub fn parse_features(text: &str, path: &Path) -> Result<FeatureSet> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let root: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let root = root
        .as_object()
        .ok_or_else(|| parse_err("top level is not an object".into()))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(parse_err("expected a FeatureCollection".into()));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("missing `features` array".into()))?;

    let mut out = FeatureSet {
        crs: crs_name(root.get("crs")),
        ..Default::default()
    };
    let mut problems = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut seen_sites = HashSet::new();
    for (index, f) in features.iter().enumerate() {
        let mut problem = |kind, message: String| {
            problems.push(FeatureProblem {
                index,
                kind,
                message,
            })
        };
        let Some(obj) = f.as_object() else {
            problem(ProblemKind::Schema, "feature is not an object".into());
            continue;
        };
        let empty = Map::new();
        let props = obj.get("properties").and_then(Value::as_object).unwrap_or(&empty);
        let region = match obj.get("geometry").map(parse_geometry) {
            Some(Ok(r)) => r,
            Some(Err((kind, msg))) => {
                problem(kind, msg);
                continue;
            }
            None => {
                problem(ProblemKind::Geometry, "missing geometry".into());
                continue;
            }
        };
        let id = match props.get("id") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            _ => None,
        };
        let tile_id = props.get("tile_id").and_then(Value::as_str).map(str::to_string);
        match props.get("role").and_then(Value::as_str) {
            Some("detection") => {
                let Some(score) = props.get("score").and_then(Value::as_f64) else {
                    problem(ProblemKind::Schema, "detection without numeric `score`".into());
                    continue;
                };
                match Detection::new(region, score) {
                    Ok(mut d) => {
                        d.tile_id = tile_id;
                        out.detections.push(d);
                        out.detection_ids.push(id.unwrap_or_else(|| index.to_string()));
                    }
                    Err(e) => problem(ProblemKind::Schema, e.to_string()),
                }
            }
            Some("groundtruth") => {
                let id = id.unwrap_or_else(|| format!("gt-{index}"));
                if !seen_ids.insert(id.clone()) {
                    problem(ProblemKind::Schema, format!("duplicate ground-truth id {id:?}"));
                    continue;
                }
                let source = match props.get("source").and_then(Value::as_str) {
                    None => Source::PI,
                    Some(s) => match s.parse::<Source>() {
                        Ok(s) => s,
                        Err(e) => {
                            problem(ProblemKind::Schema, e.to_string());
                            continue;
                        }
                    },
                };
                if region.is_empty() {
                    problem(ProblemKind::Geometry, "ground truth has empty area".into());
                    continue;
                }
                out.groundtruths.push(GroundTruth::new(region, id, source));
            }
            Some("site") => {
                let id = id.unwrap_or_else(|| format!("site-{index}"));
                if !seen_sites.insert(id.clone()) {
                    problem(ProblemKind::Schema, format!("duplicate site id {id:?}"));
                } else if region.is_empty() {
                    problem(ProblemKind::Geometry, "site has empty area".into());
                } else {
                    out.sites.push(Site { id, region });
                }
            }
            Some(other) => problem(ProblemKind::Schema, format!("unknown role {other:?}")),
            None => problem(ProblemKind::Schema, "missing `role`".into()),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Features {
            path: path.to_path_buf(),
            problems,
        });
    }
    Ok(out)
}

fn crs_name(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.clone()),
        Value::Object(o) => o
            .get("properties")
            .and_then(|p| p.get("name"))
            .and_then(Value::as_str)
            .map(str::to_string),
        _ => None,
    }
}

type GeomError = (ProblemKind, String);

fn parse_geometry(g: &Value) -> std::result::Result<Region, GeomError> {
    let schema = |m: &str| (ProblemKind::Geometry, m.to_string());
    let kind = g.get("type").and_then(Value::as_str).ok_or_else(|| schema("geometry without type"))?;
    let coords = g.get("coordinates").ok_or_else(|| schema("geometry without coordinates"))?;
    let polys = match kind {
        "Polygon" => vec![parse_polygon(coords)?],
        "MultiPolygon" => coords
            .as_array()
            .ok_or_else(|| schema("MultiPolygon coordinates are not an array"))?
            .iter()
            .map(parse_polygon)
            .collect::<std::result::Result<_, _>>()?,
        other => return Err(schema(&format!("unsupported geometry type {other:?}"))),
    };
    Region::from_polygons(polys).map_err(|e| (ProblemKind::Geometry, e.to_string()))
}

fn parse_polygon(v: &Value) -> std::result::Result<Polygon, GeomError> {
    let bad = |m: &str| (ProblemKind::Geometry, m.to_string());
    let rings = v.as_array().ok_or_else(|| bad("polygon is not an array of rings"))?;
    let mut parsed = Vec::with_capacity(rings.len());
    for ring in rings {
        let pts = ring.as_array().ok_or_else(|| bad("ring is not an array"))?;
        let mut out = Vec::with_capacity(pts.len());
        for p in pts {
            let xy = p.as_array().ok_or_else(|| bad("position is not an array"))?;
            match (xy.first().and_then(Value::as_f64), xy.get(1).and_then(Value::as_f64)) {
                (Some(x), Some(y)) => out.push(Point::new(x, y)),
                _ => return Err(bad("position needs two numbers")),
            }
        }
        parsed.push(out);
    }
    let mut it = parsed.into_iter();
    let exterior = it.next().ok_or_else(|| bad("polygon has no rings"))?;
    Ok(Polygon::new(exterior, it.collect()))
}

fn coords_json(region: &Region) -> String {
    let ring = |r: &Vec<Point>| {
        let pts: Vec<String> = r
            .iter()
            .map(|p| format!("[{},{}]", json_num(p.x), json_num(p.y)))
            .collect();
        format!("[{}]", pts.join(","))
    };
    let polys: Vec<String> = region
        .parts()
        .iter()
        .map(|p| {
            let rings: Vec<String> = p.rings().map(ring).collect();
            format!("[{}]", rings.join(","))
        })
        .collect();
    format!("[{}]", polys.join(","))
}

/// Shortest representation that parses back to the same `f64`.
fn json_num(v: f64) -> String {
    serde_json::Number::from_f64(v)
        .map(|n| n.to_string())
        .unwrap_or_else(|| "null".into())
}

/// Feature-file writer. One feature per line; output is deterministic.
pub struct FeatureWriter {
    buf: String,
    first: bool,
}

impl FeatureWriter {
    pub fn new(crs: Option<&str>) -> Self {
        let mut buf = String::from("{\"type\":\"FeatureCollection\",");
        if let Some(c) = crs {
            let _ = write!(
                buf,
                "\"crs\":{{\"type\":\"name\",\"properties\":{{\"name\":{}}}}},",
                Value::String(c.to_string())
            );
        }
        buf.push_str("\"features\":[");
        FeatureWriter { buf, first: true }
    }

    /// Appends one MultiPolygon feature with the given properties.
    pub fn push(&mut self, region: &Region, properties: Map<String, Value>) {
        if !self.first {
            self.buf.push(',');
        }
        self.first = false;
        let _ = write!(
            self.buf,
            "\n{{\"type\":\"Feature\",\"geometry\":{{\"type\":\"MultiPolygon\",\"coordinates\":{}}},\"properties\":{}}}",
            coords_json(region),
            Value::Object(properties)
        );
    }

    pub fn push_detection(&mut self, d: &Detection, id: &str) {
        let mut p = Map::new();
        p.insert("role".into(), "detection".into());
        p.insert("id".into(), id.into());
        p.insert("score".into(), d.score.into());
        if let Some(t) = &d.tile_id {
            p.insert("tile_id".into(), t.clone().into());
        }
        self.push(&d.region, p);
    }

    pub fn push_groundtruth(&mut self, g: &GroundTruth) {
        let mut p = Map::new();
        p.insert("role".into(), "groundtruth".into());
        p.insert("id".into(), g.id.clone().into());
        p.insert("source".into(), g.source.to_string().into());
        self.push(&g.region, p);
    }

    /// Map output: a detection whose `score` is the chosen aggregate, plus
    /// all three aggregates and provenance.
    pub fn push_dissolved(&mut self, d: &DissolvedDetection, id: &str, score: f64) {
        let mut p = Map::new();
        p.insert("role".into(), "detection".into());
        p.insert("id".into(), id.into());
        p.insert("score".into(), score.into());
        p.insert("score_avg".into(), d.score_avg.into());
        p.insert("score_median".into(), d.score_median.into());
        p.insert("score_max".into(), d.score_max.into());
        p.insert("member_count".into(), (d.member_count as u64).into());
        p.insert("area_m2".into(), d.region.area().into());
        p.insert(
            "source_tiles".into(),
            Value::Array(d.source_tiles.iter().cloned().map(Value::String).collect()),
        );
        self.push(&d.region, p);
    }

    pub fn push_site(&mut self, site: &Site) {
        let mut p = Map::new();
        p.insert("role".into(), "site".into());
        p.insert("id".into(), site.id.clone().into());
        self.push(&site.region, p);
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("\n]}\n");
        self.buf
    }
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
