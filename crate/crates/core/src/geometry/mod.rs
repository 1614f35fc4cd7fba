//! Planar polygon arithmetic in projected metre coordinates.
//!
//! A [`Region`] is always held in normalized form: exterior rings are
//! counter-clockwise, holes clockwise, every ring is explicitly closed, and
//! parts do not overlap. Construction runs the overlay engine once to reach
//! that form, which repairs self-intersections and spikes; after that every
//! boolean operation is total.

mod overlay;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use overlay::BoolOp;

/// Regions with less area than this (m²) count as empty.
pub const EMPTY_AREA: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub(crate) fn sub(self, o: Self) -> Self {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub(crate) fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub(crate) fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub(crate) fn lex_cmp(&self, o: &Self) -> Ordering {
        self.x
            .partial_cmp(&o.x)
            .unwrap_or(Ordering::Equal)
            .then(self.y.partial_cmp(&o.y).unwrap_or(Ordering::Equal))
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T> From<(T, T)> for Point<T> {
    fn from((x, y): (T, T)) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox<T = f64> {
    pub min_x: T,
    pub min_y: T,
    pub max_x: T,
    pub max_y: T,
}

impl<T: Scalar> BBox<T> {
    pub fn new(min_x: T, min_y: T, max_x: T, max_y: T) -> Self {
        BBox {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    fn of_points<'a>(pts: impl IntoIterator<Item = &'a Point<T>>) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = it.next()?;
        let mut b = BBox::new(first.x, first.y, first.x, first.y);
        for p in it {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        Some(b)
    }

    pub fn width(&self) -> T {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> T {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    /// Closed-box overlap test; touching boxes intersect.
    pub fn intersects(&self, o: &Self) -> bool {
        self.min_x <= o.max_x && o.min_x <= self.max_x && self.min_y <= o.max_y && o.min_y <= self.max_y
    }

    pub fn expand(&self, by: T) -> Self {
        BBox::new(self.min_x - by, self.min_y - by, self.max_x + by, self.max_y + by)
    }

    pub fn union(&self, o: &Self) -> Self {
        BBox::new(
            self.min_x.min(o.min_x),
            self.min_y.min(o.min_y),
            self.max_x.max(o.max_x),
            self.max_y.max(o.max_y),
        )
    }

    pub fn to_region(&self) -> Region<T> {
        Region::rect(self.min_x, self.min_y, self.max_x, self.max_y)
    }
}

/// One polygon: an exterior ring and zero or more holes, all closed.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon<T = f64> {
    pub exterior: Vec<Point<T>>,
    pub holes: Vec<Vec<Point<T>>>,
}

impl<T: Scalar> Polygon<T> {
    pub fn new(exterior: Vec<Point<T>>, holes: Vec<Vec<Point<T>>>) -> Self {
        Polygon { exterior, holes }
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<Point<T>>> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn area(&self) -> T {
        let a = self.rings().map(|r| ring_signed_area(r)).fold(T::zero(), |s, a| s + a);
        a.max(T::zero())
    }
}

/// A polygon or multi-polygon in normalized form.
#[derive(Clone, Debug, PartialEq)]
pub struct Region<T = f64> {
    parts: Vec<Polygon<T>>,
}

impl<T: Scalar> Default for Region<T> {
    fn default() -> Self {
        Region::empty()
    }
}

impl<T: Scalar> Region<T> {
    pub fn empty() -> Self {
        Region { parts: Vec::new() }
    }

    /// Axis-aligned rectangle; corners may be given in any order. A
    /// zero-width or zero-height rectangle is the empty region.
    pub fn rect(x0: T, y0: T, x1: T, y1: T) -> Self {
        let (ax, bx) = (x0.min(x1), x0.max(x1));
        let (ay, by) = (y0.min(y1), y0.max(y1));
        if !(bx > ax && by > ay) {
            return Region::empty();
        }
        let ring = vec![
            Point::new(ax, ay),
            Point::new(bx, ay),
            Point::new(bx, by),
            Point::new(ax, by),
            Point::new(ax, ay),
        ];
        Region {
            parts: vec![Polygon::new(ring, Vec::new())],
        }
    }

    /// Builds a single polygon from an exterior ring followed by holes.
    pub fn from_rings(rings: Vec<Vec<Point<T>>>) -> Result<Self> {
        let mut it = rings.into_iter();
        let Some(exterior) = it.next() else {
            return Ok(Region::empty());
        };
        Self::from_polygons(vec![Polygon::new(exterior, it.collect())])
    }

    /// Validates and normalizes raw polygons. Rings may be open or closed
    /// and in either orientation; each polygon is filled by the even-odd
    /// rule over its own rings and separate polygons are unioned.
    pub fn from_polygons(polygons: Vec<Polygon<T>>) -> Result<Self> {
        let mut cleaned = Vec::with_capacity(polygons.len());
        for (pi, poly) in polygons.into_iter().enumerate() {
            let mut rings = Vec::with_capacity(1 + poly.holes.len());
            for (ri, ring) in std::iter::once(poly.exterior).chain(poly.holes).enumerate() {
                rings.push(validate_ring(ring).map_err(|msg| {
                    Error::InvalidGeometry(format!("polygon {pi}, ring {ri}: {msg}"))
                })?);
            }
            cleaned.push(rings);
        }
        let operand: Vec<&[Vec<Point<T>>]> = cleaned.iter().map(|r| r.as_slice()).collect();
        let parts = overlay::overlay(&[operand], BoolOp::Union);
        Ok(Region { parts })
    }

    pub fn parts(&self) -> &[Polygon<T>] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<Polygon<T>> {
        self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.area() < T::lit(EMPTY_AREA)
    }

    /// Total area of all parts minus holes.
    pub fn area(&self) -> T {
        self.parts
            .iter()
            .map(|p| p.area())
            .fold(T::zero(), |s, a| s + a)
    }

    pub fn vertex_count(&self) -> usize {
        self.parts
            .iter()
            .flat_map(|p| p.rings())
            .map(|r| r.len().saturating_sub(1))
            .sum()
    }

    pub fn bbox(&self) -> Option<BBox<T>> {
        BBox::of_points(self.parts.iter().flat_map(|p| &p.exterior))
    }

    /// Area-weighted centroid, `None` for the empty region.
    pub fn centroid(&self) -> Option<Point<T>> {
        let origin = self.bbox().map(|b| Point::new(b.min_x, b.min_y))?;
        let (mut a2, mut cx, mut cy) = (T::zero(), T::zero(), T::zero());
        for ring in self.parts.iter().flat_map(|p| p.rings()) {
            for w in ring.windows(2) {
                let p = w[0].sub(origin);
                let q = w[1].sub(origin);
                let c = p.cross(q);
                a2 = a2 + c;
                cx = cx + (p.x + q.x) * c;
                cy = cy + (p.y + q.y) * c;
            }
        }
        if a2 <= T::zero() {
            return None;
        }
        let three = T::lit(3.0);
        Some(Point::new(
            origin.x + cx / (three * a2),
            origin.y + cy / (three * a2),
        ))
    }

    /// Even-odd point containment. Boundary points on bottom/left edges
    /// count as inside, top/right as outside.
    pub fn contains_point(&self, pt: Point<T>) -> bool {
        let mut inside = false;
        for ring in self.parts.iter().flat_map(|p| p.rings()) {
            for w in ring.windows(2) {
                let (a, b) = (w[0], w[1]);
                if (a.y > pt.y) != (b.y > pt.y) {
                    let x = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
                    if pt.x < x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }

    /// Applies a coordinate transform and re-normalizes. Mirroring
    /// transforms flip ring orientation, which normalization undoes.
    pub fn map_points(&self, mut f: impl FnMut(Point<T>) -> Point<T>) -> Result<Self> {
        let polys = self
            .parts
            .iter()
            .map(|p| {
                Polygon::new(
                    p.exterior.iter().map(|&q| f(q)).collect(),
                    p.holes
                        .iter()
                        .map(|h| h.iter().map(|&q| f(q)).collect())
                        .collect(),
                )
            })
            .collect();
        Self::from_polygons(polys)
    }

    pub fn translate(&self, dx: T, dy: T) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|p| {
                let mv = |r: &Vec<Point<T>>| r.iter().map(|q| Point::new(q.x + dx, q.y + dy)).collect();
                Polygon::new(mv(&p.exterior), p.holes.iter().map(mv).collect())
            })
            .collect();
        Region { parts }
    }

    /// Runs the normalization pass again on an already-normalized region.
    pub fn normalized(&self) -> Self {
        let rings: Vec<Vec<Vec<Point<T>>>> = self
            .parts
            .iter()
            .map(|p| p.rings().cloned().collect())
            .collect();
        let operand: Vec<&[Vec<Point<T>>]> = rings.iter().map(|r| r.as_slice()).collect();
        Region {
            parts: overlay::overlay(&[operand], BoolOp::Union),
        }
    }

    fn polygon_rings(&self) -> Vec<Vec<Vec<Point<T>>>> {
        self.parts
            .iter()
            .map(|p| p.rings().cloned().collect())
            .collect()
    }
}

/// Area of a region, `0` when empty.
pub fn area<T: Scalar>(r: &Region<T>) -> T {
    r.area()
}

pub fn intersection<T: Scalar>(a: &Region<T>, b: &Region<T>) -> Region<T> {
    match (a.bbox(), b.bbox()) {
        (Some(ba), Some(bb)) if ba.intersects(&bb) => binary(a, b, BoolOp::Intersection),
        _ => Region::empty(),
    }
}

pub fn difference<T: Scalar>(a: &Region<T>, b: &Region<T>) -> Region<T> {
    match (a.bbox(), b.bbox()) {
        (Some(ba), Some(bb)) if ba.intersects(&bb) => binary(a, b, BoolOp::Difference),
        _ => a.clone(),
    }
}

/// Union of any number of regions; the empty list yields the empty region.
pub fn union<T: Scalar>(regions: &[Region<T>]) -> Region<T> {
    match regions.len() {
        0 => Region::empty(),
        1 => regions[0].clone(),
        _ => {
            let rings: Vec<Vec<Vec<Point<T>>>> =
                regions.iter().flat_map(|r| r.polygon_rings()).collect();
            let operand: Vec<&[Vec<Point<T>>]> = rings.iter().map(|r| r.as_slice()).collect();
            Region {
                parts: overlay::overlay(&[operand], BoolOp::Union),
            }
        }
    }
}

/// `area(a ∩ b)` without materializing anything when boxes are disjoint.
pub fn intersection_area<T: Scalar>(a: &Region<T>, b: &Region<T>) -> T {
    intersection(a, b).area()
}

fn binary<T: Scalar>(a: &Region<T>, b: &Region<T>, op: BoolOp) -> Region<T> {
    let ra = a.polygon_rings();
    let rb = b.polygon_rings();
    let oa: Vec<&[Vec<Point<T>>]> = ra.iter().map(|r| r.as_slice()).collect();
    let ob: Vec<&[Vec<Point<T>>]> = rb.iter().map(|r| r.as_slice()).collect();
    Region {
        parts: overlay::overlay(&[oa, ob], op),
    }
}

/// Shoelace area of a closed ring, positive for counter-clockwise.
pub(crate) fn ring_signed_area<T: Scalar>(ring: &[Point<T>]) -> T {
    let Some(&o) = ring.first() else {
        return T::zero();
    };
    let mut s = T::zero();
    for w in ring.windows(2) {
        s = s + w[0].sub(o).cross(w[1].sub(o));
    }
    s * T::half()
}

fn validate_ring<T: Scalar>(mut ring: Vec<Point<T>>) -> std::result::Result<Vec<Point<T>>, String> {
    if let Some(bad) = ring.iter().position(|p| !p.is_finite()) {
        return Err(format!("vertex {bad} is not finite"));
    }
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring.dedup();
    let mut distinct = ring.clone();
    distinct.sort_by(|a, b| a.lex_cmp(b));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(format!("ring has {} distinct vertices, need 3", distinct.len()));
    }
    ring.push(ring[0]);
    Ok(ring)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x0: f64, y0: f64, x1: f64, y1: f64) -> Region {
        Region::rect(x0, y0, x1, y1)
    }

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&p| p.into()).collect()
    }

    #[test]
    fn unit_square_area() {
        assert_eq!(sq(0.0, 0.0, 1.0, 1.0).area(), 1.0);
        assert_eq!(Region::<f64>::empty().area(), 0.0);
    }

    #[test]
    fn square_with_hole() {
        let r = Region::from_rings(vec![
            pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]),
            pts(&[(0.5, 0.5), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5)]),
        ])
        .unwrap();
        assert_eq!(r.area(), 3.0);
        assert_eq!(r.parts().len(), 1);
        assert_eq!(r.parts()[0].holes.len(), 1);
        assert!(ring_signed_area(&r.parts()[0].holes[0]) < 0.0);
    }

    #[test]
    fn intersection_examples() {
        let a = sq(0.0, 0.0, 1.0, 1.0);
        let b = sq(0.5, 0.0, 1.5, 1.0);
        assert_eq!(intersection(&a, &b).area(), 0.5);
        assert_eq!(intersection(&a, &a).area(), 1.0);
        assert!(intersection(&a, &sq(3.0, 3.0, 4.0, 4.0)).is_empty());
    }

    #[test]
    fn union_examples() {
        let a = sq(0.0, 0.0, 1.0, 1.0);
        assert_eq!(union(&[a.clone(), sq(5.0, 0.0, 6.0, 1.0)]).area(), 2.0);
        let u = union(&[a.clone(), sq(0.5, 0.0, 1.5, 1.0)]);
        assert_eq!(u.area(), 1.5);
        assert_eq!(u.parts().len(), 1);
        assert_eq!(u.vertex_count(), 4);
        assert_eq!(union(std::slice::from_ref(&a)).area(), 1.0);
    }

    #[test]
    fn abutting_halves_merge_into_one_part() {
        let u = union(&[sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 0.0, 2.0, 1.0)]);
        assert_eq!(u.parts().len(), 1);
        assert_eq!(u, sq(0.0, 0.0, 2.0, 1.0));
    }

    #[test]
    fn corner_touching_squares_stay_two_parts() {
        let u = union(&[sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 1.0, 2.0, 2.0)]);
        assert_eq!(u.parts().len(), 2);
        assert_eq!(u.area(), 2.0);
    }

    #[test]
    fn bowtie_is_repaired() {
        let r = Region::from_rings(vec![pts(&[(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)])])
            .unwrap();
        assert!((r.area() - 2.0).abs() < 1e-12);
        assert_eq!(r.parts().len(), 2);
    }

    #[test]
    fn spike_is_removed() {
        let r = Region::from_rings(vec![pts(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (1.0, 1.0),
            (0.0, 1.0),
        ])])
        .unwrap();
        assert_eq!(r.area(), 1.0);
        assert_eq!(r.vertex_count(), 4);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let r = Region::from_rings(vec![pts(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)])])
            .unwrap();
        assert_eq!(r, sq(0.0, 0.0, 1.0, 1.0));
    }

    #[test]
    fn unrepairable_rings_are_rejected() {
        let e = Region::from_rings(vec![pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)])]).unwrap_err();
        assert!(matches!(e, Error::InvalidGeometry(_)));
        let e = Region::from_rings(vec![pts(&[(0.0, 0.0), (f64::NAN, 0.0), (1.0, 1.0)])])
            .unwrap_err();
        assert!(matches!(e, Error::InvalidGeometry(_)));
    }

    #[test]
    fn collinear_ring_normalizes_to_empty() {
        let r = Region::from_rings(vec![pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])]).unwrap();
        assert!(r.is_empty());
        assert!(r.parts().is_empty());
    }

    #[test]
    fn overlapping_parts_are_merged() {
        let r = Region::from_polygons(vec![
            Polygon::new(pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]), vec![]),
            Polygon::new(pts(&[(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]), vec![]),
        ])
        .unwrap();
        assert_eq!(r.area(), 7.0);
        assert_eq!(r.parts().len(), 1);
    }

    #[test]
    fn difference_cuts_a_hole() {
        let d = difference(&sq(0.0, 0.0, 4.0, 4.0), &sq(1.0, 1.0, 2.0, 2.0));
        assert_eq!(d.area(), 15.0);
        assert_eq!(d.parts()[0].holes.len(), 1);
    }

    #[test]
    fn centroid_and_containment() {
        let r = sq(0.0, 0.0, 2.0, 4.0);
        assert_eq!(r.centroid(), Some(Point::new(1.0, 2.0)));
        assert!(r.contains_point(Point::new(0.0, 0.0)));
        assert!(!r.contains_point(Point::new(2.0, 1.0)));
        assert!(r.contains_point(Point::new(1.0, 1.0)));
    }

    #[test]
    fn large_projected_coordinates_keep_precision() {
        let (x, y) = (447_123.25, 4_101_987.5);
        let a = sq(x, y, x + 1.5, y + 1.0);
        let b = sq(x + 0.5, y, x + 2.0, y + 1.0);
        assert_eq!(intersection(&a, &b).area(), 1.0);
        assert_eq!(union(&[a, b]).area(), 2.0);
    }

    #[test]
    fn triangles_overlap() {
        let a = Region::from_rings(vec![pts(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)])]).unwrap();
        let b = Region::from_rings(vec![pts(&[(4.0, 4.0), (0.0, 4.0), (4.0, 0.0)])]).unwrap();
        let i = intersection(&a, &b);
        assert!(i.is_empty(), "{i:?}");
        let u = union(&[a.clone(), b.clone()]);
        assert!((u.area() - 16.0).abs() < 1e-12);
        let c = Region::from_rings(vec![pts(&[(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)])])
            .unwrap();
        assert!((intersection(&a, &c).area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let a = Region::<f32>::rect(0.0, 0.0, 1.0, 1.0);
        let b = Region::<f32>::rect(0.5, 0.0, 1.5, 1.0);
        assert_eq!(intersection(&a, &b).area(), 0.5);
        assert_eq!(union(&[a, b]).area(), 1.5);
    }
}
