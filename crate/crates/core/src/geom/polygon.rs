//! Simple closed polygons in the plane.

use crate::geom::aabb::Aabb2;
use crate::geom::vec::Vec2;
use crate::geom::GeomError;
use crate::num::{real, Real};

/// Tolerance below which two consecutive vertices count as identical (mm).
pub(crate) const DUPLICATE_TOLERANCE: f64 = 1e-9;
/// Area below which a polygon is considered degenerate (mm²).
const DEGENERATE_AREA: f64 = 1e-9;

/// A simple closed polygon: ordered vertices, implicitly closed (the last
/// vertex connects back to the first), normalized to counter-clockwise
/// orientation on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2D<T> {
    points: Vec<Vec2<T>>,
}

impl<T: Real> Polygon2D<T> {
    /// Build a polygon, enforcing the structural invariants:
    /// at least 3 points, finite coordinates, no two consecutive vertices
    /// closer than 1e-9 mm (including last→first). Orientation is flipped to
    /// counter-clockwise when the signed area is negative.
    pub fn new(points: Vec<Vec2<T>>) -> Result<Self, GeomError> {
        if points.len() < 3 {
            return Err(GeomError::Degenerate(format!(
                "polygon needs at least 3 points, got {}",
                points.len()
            )));
        }
        let n = points.len();
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(GeomError::Degenerate(format!(
                    "non-finite coordinate at vertex {i}"
                )));
            }
            let next = points[(i + 1) % n];
            if p.distance(next) < real(DUPLICATE_TOLERANCE) {
                return Err(GeomError::Degenerate(format!(
                    "consecutive duplicate vertices at index {i}"
                )));
            }
        }
        let mut points = points;
        if shoelace_double(&points) < T::zero() {
            points.reverse();
        }
        Ok(Self { points })
    }

    /// Convenience constructor from coordinate pairs.
    pub fn from_coords(coords: &[(T, T)]) -> Result<Self, GeomError> {
        Self::new(coords.iter().map(|&(x, y)| Vec2::new(x, y)).collect())
    }

    /// Adopt points as-is, skipping validation and winding normalization.
    /// For internal construction of polygons derived from an already valid
    /// one by shape-preserving operations.
    pub(crate) fn from_points_unchecked(points: Vec<Vec2<T>>) -> Self {
        debug_assert!(points.len() >= 3);
        Self { points }
    }

    pub fn points(&self) -> &[Vec2<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Vec2<T>> {
        self.points
    }

    /// Iterate over the closed edge list (each vertex to its successor,
    /// wrapping around).
    pub fn edges(&self) -> impl Iterator<Item = (Vec2<T>, Vec2<T>)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Shoelace signed area; non-negative thanks to CCW normalization.
    pub fn signed_area(&self) -> T {
        shoelace_double(&self.points) * real(0.5)
    }

    /// Enclosed area (mm²). Errors when below the degeneracy threshold.
    pub fn area(&self) -> Result<T, GeomError> {
        let a = self.signed_area().abs();
        if a < real(DEGENERATE_AREA) {
            return Err(GeomError::Degenerate(format!(
                "polygon area {a} below threshold {DEGENERATE_AREA}"
            )));
        }
        Ok(a)
    }

    /// Total boundary length (mm).
    pub fn perimeter(&self) -> Result<T, GeomError> {
        self.area()?; // degenerate polygons are rejected across the metric ops
        Ok(self
            .edges()
            .fold(T::zero(), |acc, (a, b)| acc + a.distance(b)))
    }

    /// Area centroid (center of gravity of the enclosed region).
    pub fn centroid(&self) -> Result<Vec2<T>, GeomError> {
        let a = self.signed_area();
        if a.abs() < real(DEGENERATE_AREA) {
            return Err(GeomError::Degenerate(format!(
                "centroid undefined: polygon area {} below threshold {DEGENERATE_AREA}",
                a.abs()
            )));
        }
        let mut cx = T::zero();
        let mut cy = T::zero();
        for (p, q) in self.edges() {
            let w = p.perp_dot(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        let denom = real::<T>(6.0) * a;
        Ok(Vec2::new(cx / denom, cy / denom))
    }

    pub fn bounding_box(&self) -> Aabb2<T> {
        Aabb2::from_points(self.points.iter().copied()).expect("polygon has >= 3 points")
    }

    /// Even-odd (ray casting) point-in-polygon test.
    pub fn contains_point(&self, p: Vec2<T>) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_int = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_int {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True when no two non-adjacent edges intersect or touch, and no vertex
    /// forms a "spike" (collinear reversal) between its adjacent edges.
    pub fn is_simple(&self) -> bool {
        let n = self.points.len();
        for i in 0..n {
            let (a1, a2) = (self.points[i], self.points[(i + 1) % n]);
            // Spike check at the joint between edge i and edge i+1.
            let a3 = self.points[(i + 2) % n];
            if orient(a1, a2, a3) == T::zero() && (a2 - a1).dot(a3 - a2) < T::zero() {
                return false;
            }
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue; // adjacent through the wrap-around
                }
                let (b1, b2) = (self.points[j], self.points[(j + 1) % n]);
                if segments_touch(a1, a2, b1, b2) {
                    return false;
                }
            }
        }
        true
    }

    /// Apply a point mapping and re-normalize (orientation may flip under the
    /// map, and near-duplicate vertices may appear under contraction).
    pub fn try_map<F: FnMut(Vec2<T>) -> Vec2<T>>(&self, mut f: F) -> Result<Self, GeomError> {
        Self::new(self.points.iter().map(|&p| f(p)).collect())
    }

    /// Reversed copy (orientation normalization will flip it back; useful for
    /// tests exercising the normalization itself).
    pub fn reversed_points(&self) -> Vec<Vec2<T>> {
        let mut p = self.points.clone();
        p.reverse();
        p
    }
}

/// Twice the signed area of the closed vertex loop.
fn shoelace_double<T: Real>(points: &[Vec2<T>]) -> T {
    let n = points.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc += points[i].perp_dot(points[(i + 1) % n]);
    }
    acc
}

/// Orientation predicate: >0 when c is left of a→b, 0 when collinear.
fn orient<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    (b - a).perp_dot(c - a)
}

fn on_segment<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> bool {
    // Assumes c collinear with a–b.
    c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
}

/// Whether segments [p1,p2] and [p3,p4] share any point (proper crossing,
/// endpoint touching, or collinear overlap).
pub(crate) fn segments_touch<T: Real>(p1: Vec2<T>, p2: Vec2<T>, p3: Vec2<T>, p4: Vec2<T>) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    (d1 == z && on_segment(p3, p4, p1))
        || (d2 == z && on_segment(p3, p4, p2))
        || (d3 == z && on_segment(p1, p2, p3))
        || (d4 == z && on_segment(p1, p2, p4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> Polygon2D<f64> {
        Polygon2D::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap()
    }

    #[test]
    fn unit_square_metrics() {
        let p = unit_square();
        assert_relative_eq!(p.area().unwrap(), 1.0);
        assert_relative_eq!(p.perimeter().unwrap(), 4.0);
        let c = p.centroid().unwrap();
        assert_relative_eq!(c.x, 0.5);
        assert_relative_eq!(c.y, 0.5);
    }

    #[test]
    fn right_triangle_area() {
        let p = Polygon2D::from_coords(&[(0.0, 0.0), (3.0, 0.0), (3.0, 4.0)]).unwrap();
        assert_relative_eq!(p.area().unwrap(), 6.0);
        assert_relative_eq!(p.perimeter().unwrap(), 12.0);
    }

    #[test]
    fn l_shape_centroid_matches_rectangle_decomposition() {
        // L-shaped region = [0,2]x[0,1] ∪ [0,1]x[1,2]; oracle by decomposing
        // into the two rectangles and combining their area-weighted centroids.
        let p = Polygon2D::from_coords(&[
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 2.0),
            (0.0, 2.0),
        ])
        .unwrap();
        let (a1, c1) = (2.0, (1.0, 0.5));
        let (a2, c2) = (1.0, (0.5, 1.5));
        let area = a1 + a2;
        let cx = (a1 * c1.0 + a2 * c2.0) / area;
        let cy = (a1 * c1.1 + a2 * c2.1) / area;
        assert_relative_eq!(p.area().unwrap(), area);
        let c = p.centroid().unwrap();
        assert_relative_eq!(c.x, cx, epsilon = 1e-12);
        assert_relative_eq!(c.y, cy, epsilon = 1e-12);
    }

    #[test]
    fn domino_of_two_unit_squares() {
        let p = Polygon2D::from_coords(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]).unwrap();
        assert_relative_eq!(p.area().unwrap(), 2.0);
        let c = p.centroid().unwrap();
        assert_relative_eq!(c.x, 1.0);
        assert_relative_eq!(c.y, 0.5);
    }

    #[test]
    fn orientation_normalized_to_ccw() {
        let cw = Polygon2D::from_coords(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        assert!(cw.signed_area() > 0.0);
        assert_relative_eq!(cw.area().unwrap(), 1.0);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(Polygon2D::<f64>::from_coords(&[(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(
            Polygon2D::<f64>::from_coords(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])
                .is_err()
        );
        // Closing duplicate (last == first) is also rejected.
        assert!(
            Polygon2D::<f64>::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)])
                .is_err()
        );
        assert!(Polygon2D::<f64>::from_coords(&[(0.0, 0.0), (1.0, 0.0), (f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn degenerate_area_rejected_by_metric_ops() {
        let collinear =
            Polygon2D::from_coords(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 1e-12)]).unwrap();
        assert!(collinear.area().is_err());
        assert!(collinear.centroid().is_err());
        assert!(collinear.perimeter().is_err());
    }

    #[test]
    fn point_containment_even_odd() {
        let p = unit_square();
        assert!(p.contains_point(Vec2::new(0.5, 0.5)));
        assert!(!p.contains_point(Vec2::new(1.5, 0.5)));
        assert!(!p.contains_point(Vec2::new(-0.1, 0.5)));
        // Concave polygon: notch excluded.
        let u = Polygon2D::from_coords(&[
            (0.0, 0.0),
            (3.0, 0.0),
            (3.0, 3.0),
            (2.0, 3.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (0.0, 3.0),
        ])
        .unwrap();
        assert!(!u.contains_point(Vec2::new(1.5, 2.0)));
        assert!(u.contains_point(Vec2::new(0.5, 2.0)));
        assert!(u.contains_point(Vec2::new(1.5, 0.5)));
    }

    #[test]
    fn simplicity_detection() {
        assert!(unit_square().is_simple());
        let bowtie =
            Polygon2D::from_coords(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
        assert!(!bowtie.is_simple());
        // Spike: boundary walks out along the x-axis and reverses onto itself.
        let spike =
            Polygon2D::from_coords(&[(0.0, 0.0), (3.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)])
                .unwrap();
        assert!(!spike.is_simple());
        // Collinear vertex that continues straight ahead is harmless.
        let straight =
            Polygon2D::from_coords(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)])
                .unwrap();
        assert!(straight.is_simple());
        // Vertex of one edge resting on a non-adjacent edge.
        let touching =
            Polygon2D::from_coords(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (1.0, 0.0), (0.0, 2.0)])
                .unwrap();
        assert!(!touching.is_simple());
    }

    #[test]
    fn area_invariant_under_cyclic_rotation_and_rigid_motion() {
        let coords = [(0.0, 0.0), (4.0, 0.0), (5.0, 2.0), (2.0, 4.0), (-1.0, 2.0)];
        let base = Polygon2D::from_coords(&coords).unwrap();
        let a0 = base.area().unwrap();
        for k in 1..coords.len() {
            let mut rotated = coords.to_vec();
            rotated.rotate_left(k);
            let p = Polygon2D::from_coords(&rotated).unwrap();
            assert_relative_eq!(p.area().unwrap(), a0, max_relative = 1e-9);
        }
        let theta: f64 = 0.83;
        let t = Vec2::new(-7.0, 11.5);
        let moved = base.try_map(|p| p.rotated(theta) + t).unwrap();
        assert_relative_eq!(moved.area().unwrap(), a0, max_relative = 1e-9);
        assert_relative_eq!(
            moved.perimeter().unwrap(),
            base.perimeter().unwrap(),
            max_relative = 1e-9
        );
    }
}
