//! Half-plane clipping of simple polygons, with re-chaining so concave
//! inputs may split into several output pieces.

use super::SliceError;
use crate::geom::{GeomError, Polygon2D, Vec2};
use crate::num::{real, Real};

/// Pieces below this area are discarded (mm^2).
const MIN_PIECE_AREA: f64 = 1e-9;

/// Clip `p` to the half-plane `{ q : (q - point) . inward_normal >= 0 }`.
///
/// Returns the retained pieces (possibly none, possibly several for concave
/// inputs), each counter-clockwise. The kept and discarded sides together
/// conserve the input area to within floating-point tolerance.
pub fn clip_polygon<T: Real>(
    p: &Polygon2D<T>,
    half_plane: (Vec2<T>, Vec2<T>),
) -> Result<Vec<Polygon2D<T>>, SliceError> {
    let (anchor, normal) = half_plane;
    if !(normal.norm() > T::zero()) || !anchor.is_finite() || !normal.is_finite() {
        return Err(SliceError::Degenerate(GeomError::Degenerate(
            "half-plane normal must be finite and non-zero".into(),
        )));
    }
    let pts = p.points();
    let n = pts.len();
    let d: Vec<T> = pts.iter().map(|&q| (q - anchor).dot(normal)).collect();
    // Strictly inside: vertices exactly on the cut line act as crossings
    // (with t = 0 or 1), so edges lying along the line never glue separate
    // pieces together through zero-width bridges.
    let inside = |i: usize| d[i] > T::zero();

    // Entirely inside: the polygon survives whole.
    let Some(first_out) = (0..n).find(|&i| !inside(i)) else {
        return Ok(vec![p.clone()]);
    };
    if (0..n).all(|i| !inside(i)) {
        return Ok(Vec::new());
    }

    // Walk the boundary starting at an outside vertex: every maximal run of
    // inside vertices becomes a chain entered and exited through crossing
    // points that lie exactly on the clip line.
    let mut chains: Vec<Vec<Vec2<T>>> = Vec::new();
    let mut current: Option<Vec<Vec2<T>>> = None;
    for step in 0..n {
        let i = (first_out + step) % n;
        let j = (i + 1) % n;
        let crossing = || {
            let t = d[i] / (d[i] - d[j]);
            pts[i] + (pts[j] - pts[i]) * t
        };
        match (inside(i), inside(j)) {
            (false, true) => {
                let mut c = vec![crossing()];
                c.push(pts[j]);
                current = Some(c);
            }
            (true, true) => current
                .as_mut()
                .expect("chain open while inside")
                .push(pts[j]),
            (true, false) => {
                let mut c = current.take().expect("chain open at exit");
                c.push(crossing());
                chains.push(c);
            }
            (false, false) => {}
        }
    }
    debug_assert!(current.is_none());
    if chains.is_empty() {
        return Ok(Vec::new());
    }

    // Each chain starts and ends on the clip line. Sort all 2k line points
    // by their position along the line; for a simple polygon consecutive
    // pairs bound intervals interior to the polygon, so they become the cut
    // edges joining an exit of one chain to the entry of the next.
    let tangent = Vec2::new(-normal.y, normal.x);
    struct End {
        s: f64,
        chain: usize,
        is_exit: bool,
    }
    let mut ends: Vec<End> = Vec::with_capacity(chains.len() * 2);
    for (k, c) in chains.iter().enumerate() {
        let entry = c[0];
        let exit = *c.last().unwrap();
        ends.push(End {
            s: (entry - anchor).dot(tangent).to_f64_lossy(),
            chain: k,
            is_exit: false,
        });
        ends.push(End {
            s: (exit - anchor).dot(tangent).to_f64_lossy(),
            chain: k,
            is_exit: true,
        });
    }
    ends.sort_by(|a, b| {
        a.s.partial_cmp(&b.s)
            .expect("finite line positions")
            .then_with(|| a.chain.cmp(&b.chain))
            .then_with(|| a.is_exit.cmp(&b.is_exit))
    });
    // next_chain[exit chain] = chain entered across the cut edge.
    let mut next_chain = vec![usize::MAX; chains.len()];
    for pair in ends.chunks(2) {
        let [a, b] = pair else {
            return Err(SliceError::Degenerate(GeomError::Degenerate(
                "odd number of clip crossings".into(),
            )));
        };
        let (exit, entry) = match (a.is_exit, b.is_exit) {
            (true, false) => (a, b),
            (false, true) => (b, a),
            _ => {
                return Err(SliceError::Degenerate(GeomError::Degenerate(
                    "clip crossings do not alternate along the cut line".into(),
                )))
            }
        };
        next_chain[exit.chain] = entry.chain;
    }

    // Stitch chains into closed components by following cut edges.
    let mut visited = vec![false; chains.len()];
    let mut pieces: Vec<Polygon2D<T>> = Vec::new();
    for start in 0..chains.len() {
        if visited[start] {
            continue;
        }
        let mut points: Vec<Vec2<T>> = Vec::new();
        let mut k = start;
        loop {
            visited[k] = true;
            points.extend_from_slice(&chains[k]);
            k = next_chain[k];
            if k == usize::MAX {
                return Err(SliceError::Degenerate(GeomError::Degenerate(
                    "unpaired clip crossing".into(),
                )));
            }
            if k == start {
                break;
            }
            if visited[k] {
                return Err(SliceError::Degenerate(GeomError::Degenerate(
                    "clip chains interleave inconsistently".into(),
                )));
            }
        }
        // Merge joints that would violate the polygon's duplicate-vertex
        // tolerance (crossings can land arbitrarily close to a vertex that
        // nearly touches the cut line).
        let dup = real(crate::geom::polygon::DUPLICATE_TOLERANCE);
        points.dedup_by(|a, b| (*a - *b).norm() < dup);
        if points.len() >= 2 && (points[0] - *points.last().unwrap()).norm() < dup {
            points.pop();
        }
        if points.len() < 3 {
            continue;
        }
        match Polygon2D::new(points) {
            Ok(piece) => {
                if piece.signed_area() >= real(MIN_PIECE_AREA) {
                    pieces.push(piece);
                }
            }
            Err(_) => continue, // sliver collapsed below tolerance
        }
    }
    Ok(pieces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn poly(coords: &[(f64, f64)]) -> Polygon2D<f64> {
        Polygon2D::from_coords(coords).unwrap()
    }

    fn total_area(pieces: &[Polygon2D<f64>]) -> f64 {
        pieces.iter().map(|p| p.area().unwrap()).sum()
    }

    #[test]
    fn square_halved_vertically() {
        let sq = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        let right = clip_polygon(&sq, (Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0))).unwrap();
        assert_eq!(right.len(), 1);
        assert_relative_eq!(right[0].area().unwrap(), 2.0, epsilon = 1e-12);
        let bb = right[0].bounding_box();
        assert_relative_eq!(bb.min.x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn keep_all_and_keep_none() {
        let sq = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let all = clip_polygon(&sq, (Vec2::new(-5.0, 0.0), Vec2::new(1.0, 0.0))).unwrap();
        assert_eq!(all.len(), 1);
        assert_relative_eq!(all[0].area().unwrap(), 1.0, epsilon = 1e-12);
        let none = clip_polygon(&sq, (Vec2::new(5.0, 0.0), Vec2::new(1.0, 0.0))).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn u_shape_splits_into_two_pieces() {
        // U-shaped polygon: clipping away the bottom bar leaves two separate
        // vertical prongs.
        let u = poly(&[
            (0.0, 0.0),
            (3.0, 0.0),
            (3.0, 3.0),
            (2.0, 3.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (0.0, 3.0),
        ]);
        let top = clip_polygon(&u, (Vec2::new(0.0, 1.5), Vec2::new(0.0, 1.0))).unwrap();
        assert_eq!(top.len(), 2);
        for piece in &top {
            assert_relative_eq!(piece.area().unwrap(), 1.5, epsilon = 1e-12);
            assert!(piece.is_simple());
        }
        // Pieces and complement conserve area.
        let bottom = clip_polygon(&u, (Vec2::new(0.0, 1.5), Vec2::new(0.0, -1.0))).unwrap();
        assert_relative_eq!(
            total_area(&top) + total_area(&bottom),
            u.area().unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn cut_through_vertex_is_clean() {
        // Diamond cut exactly through its left/right vertices.
        let diamond = poly(&[(1.0, 0.0), (2.0, 1.0), (1.0, 2.0), (0.0, 1.0)]);
        let upper = clip_polygon(&diamond, (Vec2::new(0.0, 1.0), Vec2::new(0.0, 1.0))).unwrap();
        assert_eq!(upper.len(), 1);
        assert_relative_eq!(upper[0].area().unwrap(), 1.0, epsilon = 1e-12);
        let lower = clip_polygon(&diamond, (Vec2::new(0.0, 1.0), Vec2::new(0.0, -1.0))).unwrap();
        assert_relative_eq!(
            total_area(&upper) + total_area(&lower),
            diamond.area().unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn non_axis_aligned_cut() {
        let sq = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        // Cut along the main diagonal, keep the upper-left triangle.
        let d = std::f64::consts::FRAC_1_SQRT_2;
        let tri = clip_polygon(&sq, (Vec2::new(0.5, 0.5), Vec2::new(-d, d))).unwrap();
        assert_eq!(tri.len(), 1);
        assert_relative_eq!(tri[0].area().unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_normal_rejected() {
        let sq = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let err = clip_polygon(&sq, (Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)));
        assert!(matches!(err, Err(SliceError::Degenerate(_))));
    }

    #[test]
    fn comb_splits_into_three() {
        // E-shaped comb with three teeth pointing up.
        let comb = poly(&[
            (0.0, 0.0),
            (5.0, 0.0),
            (5.0, 2.0),
            (4.0, 2.0),
            (4.0, 1.0),
            (3.0, 1.0),
            (3.0, 2.0),
            (2.0, 2.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 2.0),
            (0.0, 2.0),
        ]);
        let teeth = clip_polygon(&comb, (Vec2::new(0.0, 1.0), Vec2::new(0.0, 1.0))).unwrap();
        assert_eq!(teeth.len(), 3);
        for t in &teeth {
            assert_relative_eq!(t.area().unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        /// Clipping with a half-plane and its complement conserves area for
        /// arbitrary star-shaped (hence simple) polygons and cut lines.
        #[test]
        fn area_conservation(
            radii in proptest::collection::vec(0.2f64..5.0, 5..24),
            cx in -2.0f64..2.0,
            cy in -2.0f64..2.0,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let n = radii.len();
            let pts: Vec<(f64, f64)> = radii
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let a = std::f64::consts::TAU * i as f64 / n as f64;
                    (r * a.cos(), r * a.sin())
                })
                .collect();
            let p = Polygon2D::from_coords(&pts).unwrap();
            let anchor = Vec2::new(cx, cy);
            let normal = Vec2::new(angle.cos(), angle.sin());
            let kept = clip_polygon(&p, (anchor, normal)).unwrap();
            let dropped = clip_polygon(&p, (anchor, -normal)).unwrap();
            let sum = total_area(&kept) + total_area(&dropped);
            let full = p.area().unwrap();
            prop_assert!(
                (sum - full).abs() <= 1e-9 * full.max(1.0),
                "kept+dropped {} vs full {}",
                sum,
                full
            );
            for piece in kept.iter().chain(dropped.iter()) {
                prop_assert!(piece.signed_area() > 0.0);
            }
        }
    }
}
