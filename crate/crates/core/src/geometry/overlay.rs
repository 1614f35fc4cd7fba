//! Polygon overlay by edge arrangement.
//!
//! All input edges are split at their mutual intersections, near-coincident
//! vertices are snapped together, and each resulting sub-segment is
//! classified by casting a ray from its midpoint to each side. A segment
//! whose two sides disagree under the boolean operator is result boundary;
//! boundary segments are then linked into rings with the filled side on the
//! left. Each input polygon is filled by even-odd parity over its own rings.

use std::collections::HashMap;
use std::f64::consts::TAU;

use super::{ring_signed_area, BBox, Point, Polygon, EMPTY_AREA};
use crate::scalar::Scalar;

/// How operand memberships combine into result membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersection,
    /// First operand minus all others.
    Difference,
    Xor,
}

impl BoolOp {
    fn keep(self, inside: &[bool]) -> bool {
        match self {
            BoolOp::Union => inside.iter().any(|&b| b),
            BoolOp::Intersection => inside.iter().all(|&b| b),
            BoolOp::Difference => inside[0] && !inside[1..].iter().any(|&b| b),
            BoolOp::Xor => inside.iter().filter(|&&b| b).count() % 2 == 1,
        }
    }
}

type RingSet<'a, T> = &'a [Vec<Point<T>>];

struct Edge<T> {
    a: Point<T>,
    b: Point<T>,
    poly: u32,
}

struct Segment {
    u: u32,
    v: u32,
    polys: Vec<u32>,
}

/// Merges points closer than `eps` (per axis) into the first one seen.
struct Snapper<T> {
    eps: T,
    origin: Point<T>,
    cells: HashMap<(i64, i64), Vec<u32>>,
    pts: Vec<Point<T>>,
}

impl<T: Scalar> Snapper<T> {
    fn new(eps: T, origin: Point<T>) -> Self {
        Snapper {
            eps,
            origin,
            cells: HashMap::new(),
            pts: Vec::new(),
        }
    }

    fn key(&self, p: Point<T>) -> (i64, i64) {
        let kx = ((p.x - self.origin.x) / self.eps).floor().to_i64().unwrap_or(0);
        let ky = ((p.y - self.origin.y) / self.eps).floor().to_i64().unwrap_or(0);
        (kx, ky)
    }

    fn id(&mut self, p: Point<T>) -> u32 {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &c in ids {
                        let q = self.pts[c as usize];
                        if (q.x - p.x).abs() <= self.eps && (q.y - p.y).abs() <= self.eps {
                            return c;
                        }
                    }
                }
            }
        }
        let id = self.pts.len() as u32;
        self.pts.push(p);
        self.cells.entry((kx, ky)).or_default().push(id);
        id
    }
}

/// Uniform bins along one axis over segment extents.
struct Strips<T> {
    lo: T,
    inv_width: T,
    bins: Vec<Vec<u32>>,
}

impl<T: Scalar> Strips<T> {
    fn build(segs: &[Segment], pts: &[Point<T>], along_y: bool) -> Self {
        let coord = |p: Point<T>| if along_y { p.y } else { p.x };
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for p in pts {
            lo = lo.min(coord(*p));
            hi = hi.max(coord(*p));
        }
        let n = ((segs.len() as f64).sqrt() * 2.0).clamp(1.0, 4096.0) as usize;
        let span = hi - lo;
        let inv_width = if span > T::zero() {
            T::from_usize(n).unwrap() / span
        } else {
            T::zero()
        };
        let mut strips = Strips {
            lo,
            inv_width,
            bins: vec![Vec::new(); n],
        };
        for (i, s) in segs.iter().enumerate() {
            let (a, b) = (coord(pts[s.u as usize]), coord(pts[s.v as usize]));
            let (b0, b1) = (strips.bin(a.min(b)), strips.bin(a.max(b)));
            for bin in &mut strips.bins[b0..=b1] {
                bin.push(i as u32);
            }
        }
        strips
    }

    fn bin(&self, v: T) -> usize {
        let f = ((v - self.lo) * self.inv_width).floor().to_usize().unwrap_or(0);
        f.min(self.bins.len() - 1)
    }

    fn query(&self, v: T) -> &[u32] {
        &self.bins[self.bin(v)]
    }
}

/// Overlays operands, each a list of polygons given as closed rings.
pub(crate) fn overlay<T: Scalar>(operands: &[Vec<RingSet<'_, T>>], op: BoolOp) -> Vec<Polygon<T>> {
    let mut operand_of = Vec::new();
    let mut edges = Vec::new();
    for (oi, operand) in operands.iter().enumerate() {
        for poly in operand {
            let g = operand_of.len() as u32;
            operand_of.push(oi);
            for ring in poly.iter() {
                for w in ring.windows(2) {
                    if w[0] != w[1] {
                        edges.push(Edge {
                            a: w[0],
                            b: w[1],
                            poly: g,
                        });
                    }
                }
            }
        }
    }
    if edges.is_empty() {
        return Vec::new();
    }

    let bbox = BBox::of_points(edges.iter().flat_map(|e| [&e.a, &e.b])).unwrap();
    let scale = [bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y]
        .iter()
        .map(|v| v.abs())
        .fold(bbox.width().max(bbox.height()), |m, v| m.max(v));
    let eps = scale * T::epsilon() * T::lit(64.0);
    if !(eps > T::zero()) {
        return Vec::new();
    }

    let splits = split_points(&edges, eps);

    let mut snap = Snapper::new(eps, Point::new(bbox.min_x, bbox.min_y));
    for e in &edges {
        snap.id(e.a);
        snap.id(e.b);
    }
    let mut index: HashMap<(u32, u32), usize> = HashMap::new();
    let mut segs: Vec<Segment> = Vec::new();
    for (e, pts) in edges.iter().zip(splits) {
        let d = e.b.sub(e.a);
        let mut ids: Vec<(T, u32)> = pts
            .into_iter()
            .map(|p| {
                let id = snap.id(p);
                (snap.pts[id as usize].sub(e.a).dot(d), id)
            })
            .collect();
        ids.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        ids.dedup_by_key(|x| x.1);
        for w in ids.windows(2) {
            let (u, v) = (w[0].1, w[1].1);
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            let si = *index.entry(key).or_insert_with(|| {
                segs.push(Segment {
                    u: key.0,
                    v: key.1,
                    polys: Vec::new(),
                });
                segs.len() - 1
            });
            segs[si].polys.push(e.poly);
        }
    }
    let pts = snap.pts;

    let boundary = classify(&segs, &pts, &operand_of, operands.len(), op);
    let rings = link_rings(&boundary, &pts);
    assemble(rings, eps)
}

/// Every edge's endpoints plus all points where other edges touch or cross it.
fn split_points<T: Scalar>(edges: &[Edge<T>], eps: T) -> Vec<Vec<Point<T>>> {
    let mut splits: Vec<Vec<Point<T>>> = edges.iter().map(|e| vec![e.a, e.b]).collect();
    let boxes: Vec<BBox<T>> = edges
        .iter()
        .map(|e| BBox::of_points([&e.a, &e.b]).unwrap().expand(eps))
        .collect();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&i, &j| {
        boxes[i]
            .min_x
            .partial_cmp(&boxes[j].min_x)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if boxes[j].min_x > boxes[i].max_x {
                break;
            }
            if !boxes[i].intersects(&boxes[j]) || edges[i].poly == edges[j].poly && shares_vertex(&edges[i], &edges[j]) && !collinear_overlap(&edges[i], &edges[j], eps) {
                continue;
            }
            let (e, f) = (&edges[i], &edges[j]);
            for p in [f.a, f.b] {
                if on_segment(p, e.a, e.b, eps) {
                    splits[i].push(p);
                }
            }
            for p in [e.a, e.b] {
                if on_segment(p, f.a, f.b, eps) {
                    splits[j].push(p);
                }
            }
            if let Some(p) = proper_crossing(e, f) {
                splits[i].push(p);
                splits[j].push(p);
            }
        }
    }
    splits
}

fn shares_vertex<T: Scalar>(e: &Edge<T>, f: &Edge<T>) -> bool {
    e.a == f.a || e.a == f.b || e.b == f.a || e.b == f.b
}

fn collinear_overlap<T: Scalar>(e: &Edge<T>, f: &Edge<T>, eps: T) -> bool {
    let d = e.b.sub(e.a);
    d.cross(f.a.sub(e.a)).abs() <= eps * d.dot(d).sqrt()
        && d.cross(f.b.sub(e.a)).abs() <= eps * d.dot(d).sqrt()
}

fn on_segment<T: Scalar>(p: Point<T>, a: Point<T>, b: Point<T>, eps: T) -> bool {
    let d = b.sub(a);
    let len2 = d.dot(d);
    let t = (p.sub(a).dot(d) / len2).max(T::zero()).min(T::one());
    let q = Point::new(a.x + d.x * t, a.y + d.y * t);
    (p.x - q.x).abs() <= eps && (p.y - q.y).abs() <= eps
}

fn proper_crossing<T: Scalar>(e: &Edge<T>, f: &Edge<T>) -> Option<Point<T>> {
    let d1 = e.b.sub(e.a);
    let d2 = f.b.sub(f.a);
    let o1 = d1.cross(f.a.sub(e.a));
    let o2 = d1.cross(f.b.sub(e.a));
    let o3 = d2.cross(e.a.sub(f.a));
    let o4 = d2.cross(e.b.sub(f.a));
    let opposite = |s: T, t: T| (s > T::zero() && t < T::zero()) || (s < T::zero() && t > T::zero());
    if !(opposite(o1, o2) && opposite(o3, o4)) {
        return None;
    }
    let t = f.a.sub(e.a).cross(d2) / d1.cross(d2);
    Some(Point::new(e.a.x + d1.x * t, e.a.y + d1.y * t))
}

/// Directed result-boundary segments with the filled side on the left.
fn classify<T: Scalar>(
    segs: &[Segment],
    pts: &[Point<T>],
    operand_of: &[usize],
    n_operands: usize,
    op: BoolOp,
) -> Vec<(u32, u32)> {
    let rows = Strips::build(segs, pts, true);
    let cols = Strips::build(segs, pts, false);
    let mut parity = vec![false; operand_of.len()];
    let mut touched: Vec<u32> = Vec::new();
    let mut inside_left = vec![false; n_operands];
    let mut inside_right = vec![false; n_operands];
    let mut out = Vec::new();

    for (si, s) in segs.iter().enumerate() {
        let (p, q) = (pts[s.u as usize], pts[s.v as usize]);
        let m = Point::new((p.x + q.x) * T::half(), (p.y + q.y) * T::half());
        let d = q.sub(p);
        // Left normal; the ray leaves the segment towards its left side.
        let (nx, ny) = (-d.y, d.x);
        let horizontal = nx.abs() >= ny.abs();
        let positive = if horizontal { nx > T::zero() } else { ny > T::zero() };

        touched.clear();
        let candidates = if horizontal { rows.query(m.y) } else { cols.query(m.x) };
        for &ci in candidates {
            if ci as usize == si {
                continue;
            }
            let c = &segs[ci as usize];
            let (a, b) = (pts[c.u as usize], pts[c.v as usize]);
            let hit = if horizontal {
                (a.y > m.y) != (b.y > m.y) && {
                    let x = a.x + (m.y - a.y) * (b.x - a.x) / (b.y - a.y);
                    if positive { x > m.x } else { x < m.x }
                }
            } else {
                (a.x > m.x) != (b.x > m.x) && {
                    let y = a.y + (m.x - a.x) * (b.y - a.y) / (b.x - a.x);
                    if positive { y > m.y } else { y < m.y }
                }
            };
            if hit {
                for &g in &c.polys {
                    parity[g as usize] ^= true;
                    touched.push(g);
                }
            }
        }

        inside_left.iter_mut().for_each(|b| *b = false);
        inside_right.iter_mut().for_each(|b| *b = false);
        for &g in touched.iter().chain(&s.polys) {
            if parity[g as usize] {
                inside_left[operand_of[g as usize]] = true;
            }
        }
        for &g in &s.polys {
            parity[g as usize] ^= true;
        }
        for &g in touched.iter().chain(&s.polys) {
            if parity[g as usize] {
                inside_right[operand_of[g as usize]] = true;
            }
        }
        for &g in touched.iter().chain(&s.polys) {
            parity[g as usize] = false;
        }

        let (l, r) = (op.keep(&inside_left), op.keep(&inside_right));
        if l != r {
            out.push(if l { (s.u, s.v) } else { (s.v, s.u) });
        }
    }
    out
}

/// Links directed segments into closed rings, taking the tightest
/// clockwise turn at shared vertices so rings touching at a point separate.
fn link_rings<T: Scalar>(edges: &[(u32, u32)], pts: &[Point<T>]) -> Vec<Vec<Point<T>>> {
    let angle = |from: u32, to: u32| {
        let d = pts[to as usize].sub(pts[from as usize]);
        d.y.as_f64().atan2(d.x.as_f64())
    };
    let mut outgoing: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, &(u, _)) in edges.iter().enumerate() {
        outgoing.entry(u).or_default().push(i);
    }
    let angles: Vec<f64> = edges.iter().map(|&(u, v)| angle(u, v)).collect();
    let mut used = vec![false; edges.len()];
    let mut rings = Vec::new();

    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut ring = vec![pts[edges[start].0 as usize]];
        let mut cur = start;
        let closed = loop {
            let v = edges[cur].1;
            ring.push(pts[v as usize]);
            let back = angles[cur] + std::f64::consts::PI;
            let next = outgoing[&v]
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let cw = |e: usize| {
                        let r = (back - angles[e]).rem_euclid(TAU);
                        if r <= 0.0 { TAU } else { r }
                    };
                    cw(a).partial_cmp(&cw(b)).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("boundary vertex without outgoing edge");
            if next == start {
                break true;
            }
            if used[next] {
                break false;
            }
            used[next] = true;
            cur = next;
        };
        if closed {
            rings.push(ring);
        } else {
            log::warn!("overlay: dropped an unclosed boundary chain of {} vertices", ring.len());
        }
    }
    rings
}

fn simplify<T: Scalar>(ring: &mut Vec<Point<T>>, eps: T) {
    // ring is open here (no closing duplicate)
    let mut changed = true;
    while changed && ring.len() >= 3 {
        changed = false;
        let n = ring.len();
        for i in 0..n {
            let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            let ac = c.sub(a);
            let len = ac.dot(ac).sqrt();
            let off = if len > T::zero() { ac.cross(b.sub(a)).abs() / len } else { T::infinity() };
            if b == a || off <= eps && b.sub(a).dot(c.sub(b)) >= T::zero() {
                ring.remove(i);
                changed = true;
                break;
            }
        }
    }
}

fn point_in_ring<T: Scalar>(pt: Point<T>, ring: &[Point<T>]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > pt.y) != (b.y > pt.y) {
            let x = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if pt.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn canonical_start<T: Scalar>(mut ring: Vec<Point<T>>) -> Vec<Point<T>> {
    let k = (0..ring.len())
        .min_by(|&i, &j| ring[i].lex_cmp(&ring[j]))
        .unwrap_or(0);
    ring.rotate_left(k);
    ring.push(ring[0]);
    ring
}

/// Sorts rings into exteriors and holes and builds canonical polygons.
fn assemble<T: Scalar>(rings: Vec<Vec<Point<T>>>, eps: T) -> Vec<Polygon<T>> {
    let mut exteriors: Vec<(Vec<Point<T>>, T, BBox<T>)> = Vec::new();
    let mut holes: Vec<Vec<Point<T>>> = Vec::new();
    for mut ring in rings {
        ring.pop();
        simplify(&mut ring, eps);
        if ring.len() < 3 {
            continue;
        }
        let closed = canonical_start(ring);
        let area = ring_signed_area(&closed);
        let perimeter = closed
            .windows(2)
            .map(|w| w[1].sub(w[0]).dot(w[1].sub(w[0])).sqrt())
            .fold(T::zero(), |s, l| s + l);
        if area.abs() < T::lit(EMPTY_AREA) || area.abs() <= eps * perimeter {
            continue;
        }
        if area > T::zero() {
            let bb = BBox::of_points(&closed).unwrap();
            exteriors.push((closed, area, bb));
        } else {
            holes.push(closed);
        }
    }

    let mut polys: Vec<Polygon<T>> = exteriors
        .iter()
        .map(|(r, _, _)| Polygon::new(r.clone(), Vec::new()))
        .collect();
    for hole in holes {
        let probe = Point::new(
            (hole[0].x + hole[1].x) * T::half(),
            (hole[0].y + hole[1].y) * T::half(),
        );
        let owner = exteriors
            .iter()
            .enumerate()
            .filter(|(_, (r, _, bb))| {
                probe.x >= bb.min_x
                    && probe.x <= bb.max_x
                    && probe.y >= bb.min_y
                    && probe.y <= bb.max_y
                    && point_in_ring(probe, r)
            })
            .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i);
        match owner {
            Some(i) => polys[i].holes.push(hole),
            None => log::warn!("overlay: dropped a hole with no enclosing ring"),
        }
    }
    for p in &mut polys {
        p.holes.sort_by(|a, b| a[0].lex_cmp(&b[0]));
    }
    polys.sort_by(|a, b| a.exterior[0].lex_cmp(&b.exterior[0]));
    polys
}
