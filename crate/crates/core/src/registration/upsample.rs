//! Densifying polygon outlines without changing their shape.

use crate::geom::Polygon2D;
use crate::num::{real, Real};

/// Insert midpoints until the polygon has at least `target` vertices.
///
/// Each step splits the currently longest edge at its midpoint (ties broken
/// toward the lowest edge index), so vertices stay on the original boundary:
/// area and perimeter are preserved to floating-point accuracy and all
/// original vertices are retained. Polygons already at or above `target`
/// are returned unchanged. Splitting stops early if the longest edge falls
/// below the duplicate-vertex tolerance.
pub fn upsample_polygon<T: Real>(p: &Polygon2D<T>, target: usize) -> Polygon2D<T> {
    let mut points: Vec<crate::geom::Vec2<T>> = p.points().to_vec();
    if points.len() >= target {
        return p.clone();
    }
    let mut lengths: Vec<T> = (0..points.len())
        .map(|i| {
            let j = (i + 1) % points.len();
            (points[j] - points[i]).norm()
        })
        .collect();
    // Edges shorter than this would create vertices inside the polygon's
    // duplicate-point tolerance.
    let min_split = real::<T>(4e-9);
    while points.len() < target {
        // Strict comparison keeps the lowest index on ties.
        let mut idx = 0usize;
        for (i, l) in lengths.iter().enumerate().skip(1) {
            if *l > lengths[idx] {
                idx = i;
            }
        }
        let len = lengths[idx];
        if len < min_split {
            break;
        }
        let j = (idx + 1) % points.len();
        let mid = (points[idx] + points[j]) * real(0.5);
        let half = len * real(0.5);
        points.insert(idx + 1, mid);
        lengths[idx] = half;
        lengths.insert(idx + 1, half);
    }
    Polygon2D::from_points_unchecked(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reaches_target_and_preserves_shape() {
        let p = Polygon2D::from_coords(&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (0.0, 3.0)]).unwrap();
        let up = upsample_polygon(&p, 100);
        assert!(up.len() >= 100);
        assert_relative_eq!(up.area().unwrap(), p.area().unwrap(), max_relative = 1e-12);
        assert_relative_eq!(
            up.perimeter().unwrap(),
            p.perimeter().unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn original_vertices_are_retained() {
        let coords: [(f64, f64); 5] = [(0.0, 0.0), (5.0, 0.0), (6.0, 4.0), (2.0, 6.0), (-1.0, 3.0)];
        let p = Polygon2D::from_coords(&coords).unwrap();
        let up = upsample_polygon(&p, 64);
        for &(x, y) in &coords {
            assert!(
                up.points()
                    .iter()
                    .any(|q| (q.x - x).abs() < 1e-15 && (q.y - y).abs() < 1e-15),
                "({x}, {y}) missing after upsampling"
            );
        }
    }

    #[test]
    fn longest_edge_splits_first_with_low_index_ties() {
        // Square with equal edges: the first split must hit edge 0.
        let p = Polygon2D::from_coords(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]).unwrap();
        let up = upsample_polygon(&p, 5);
        assert_eq!(up.len(), 5);
        let pts = up.points();
        // Midpoint of edge 0 inserted between its endpoints.
        assert_relative_eq!(pts[1].x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(pts[1].y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn at_or_above_target_is_identity() {
        let p = Polygon2D::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap();
        assert_eq!(upsample_polygon(&p, 4), p);
        assert_eq!(upsample_polygon(&p, 3), p);
    }

    #[test]
    fn uneven_edges_get_balanced_sampling() {
        // One very long edge and several short ones: after upsampling the
        // longest remaining edge is no more than twice the shortest original
        // spacing scale.
        let p =
            Polygon2D::from_coords(&[(0.0, 0.0), (100.0, 0.0), (100.0, 1.0), (0.0, 1.0)]).unwrap();
        let up = upsample_polygon(&p, 256);
        let pts = up.points();
        let max_edge = (0..pts.len())
            .map(|i| (pts[(i + 1) % pts.len()] - pts[i]).norm())
            .fold(0.0f64, f64::max);
        // Total perimeter 202 over 256 points: max edge must be < 2 * mean.
        assert!(max_edge < 2.0 * 202.0 / 256.0, "max edge {max_edge}");
    }
}
