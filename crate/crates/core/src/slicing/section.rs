//! Plane/mesh intersection producing closed planar loops.

use std::collections::HashMap;

use super::SliceError;
use crate::geom::{PlaneFrame, Polygon2D, Vec2};
use crate::mesh::TriMesh;
use crate::num::{real, Real};

/// Endpoint welding tolerance for chaining section segments (mm).
const CHAIN_TOLERANCE: f64 = 1e-6;
/// Loops below this area are discarded (mm^2).
const MIN_LOOP_AREA: f64 = 1e-6;

/// Quantised key for a 2D point, welding coincident segment endpoints.
fn key<T: Real>(p: Vec2<T>) -> (i64, i64) {
    let q = |v: T| (v.to_f64_lossy() / CHAIN_TOLERANCE).round() as i64;
    (q(p.x), q(p.y))
}

/// Intersect a closed mesh with a plane.
///
/// Returns the intersection as one or more closed loops in the plane's
/// (u, v) coordinates, counter-clockwise, largest first. Vertices exactly on
/// the plane are treated as lying on the positive side, so tangential
/// contacts never produce spurious degenerate loops.
pub fn plane_section<T: Real>(
    mesh: &TriMesh<T>,
    frame: &PlaneFrame<T>,
) -> Result<Vec<Polygon2D<T>>, SliceError> {
    // Signed distance per vertex, computed once.
    let dist: Vec<T> = mesh
        .vertices
        .iter()
        .map(|&v| frame.signed_distance(v))
        .collect();
    let positive = |d: T| d >= T::zero();

    // One segment per triangle straddling the plane. Intersection points are
    // computed per *undirected vertex-index edge* so the two triangles
    // sharing an edge produce bitwise-identical endpoints.
    let mut edge_points: HashMap<(u32, u32), Vec2<T>> = HashMap::new();
    let mut point_on = |a: u32, b: u32| -> Vec2<T> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        *edge_points.entry((a, b)).or_insert_with(|| {
            let (da, db) = (dist[a as usize], dist[b as usize]);
            let t = da / (da - db);
            let pa = mesh.vertices[a as usize];
            let pb = mesh.vertices[b as usize];
            frame.project(pa + (pb - pa) * t)
        })
    };

    let mut segments: Vec<(Vec2<T>, Vec2<T>)> = Vec::new();
    for tri in &mesh.triangles {
        let signs = [
            positive(dist[tri[0] as usize]),
            positive(dist[tri[1] as usize]),
            positive(dist[tri[2] as usize]),
        ];
        if signs.iter().all(|&s| s) || signs.iter().all(|&s| !s) {
            continue;
        }
        // Exactly two of the three edges straddle the plane.
        let mut pts = Vec::with_capacity(2);
        for e in [(0, 1), (1, 2), (2, 0)] {
            if signs[e.0] != signs[e.1] {
                pts.push(point_on(tri[e.0], tri[e.1]));
            }
        }
        debug_assert_eq!(pts.len(), 2);
        if pts.len() == 2 && key(pts[0]) != key(pts[1]) {
            segments.push((pts[0], pts[1]));
        }
    }
    if segments.is_empty() {
        return Err(SliceError::NoIntersection);
    }

    // Chain segments into loops: each welded endpoint must join exactly two
    // segment ends for the section of a closed mesh.
    let mut incidence: HashMap<(i64, i64), Vec<(usize, bool)>> = HashMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        incidence.entry(key(a)).or_default().push((i, false));
        incidence.entry(key(b)).or_default().push((i, true));
    }
    if let Some((k, ends)) = incidence.iter().find(|(_, ends)| ends.len() != 2) {
        return Err(SliceError::OpenLoop(format!(
            "section endpoint near ({:.6}, {:.6}) joins {} segment ends (expected 2)",
            k.0 as f64 * CHAIN_TOLERANCE,
            k.1 as f64 * CHAIN_TOLERANCE,
            ends.len()
        )));
    }

    let mut used = vec![false; segments.len()];
    let mut loops: Vec<Polygon2D<T>> = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        let mut points: Vec<Vec2<T>> = Vec::new();
        let mut cur = start;
        let mut entering_at_b = false; // we enter segment `start` at its `a` end
        loop {
            used[cur] = true;
            let (a, b) = segments[cur];
            let (enter, exit) = if entering_at_b { (b, a) } else { (a, b) };
            points.push(enter);
            let exit_key = key(exit);
            let ends = &incidence[&exit_key];
            let Some(&(next, next_is_b)) = ends.iter().find(|&&(s, _)| s != cur) else {
                return Err(SliceError::OpenLoop("segment chain dead-ends".into()));
            };
            if next == start {
                break;
            }
            if used[next] {
                return Err(SliceError::OpenLoop(
                    "segment chain re-enters a consumed loop".into(),
                ));
            }
            cur = next;
            entering_at_b = next_is_b;
        }
        // Weld consecutive duplicates under the chaining tolerance.
        points.dedup_by(|a, b| key(*a) == key(*b));
        if points.len() >= 2 && key(points[0]) == key(*points.last().unwrap()) {
            points.pop();
        }
        if points.len() < 3 {
            continue;
        }
        match Polygon2D::new(points) {
            Ok(poly) => {
                if poly.signed_area() >= real(MIN_LOOP_AREA) {
                    loops.push(poly);
                }
            }
            Err(_) => continue, // degenerate sliver loop: drop
        }
    }

    if loops.is_empty() {
        return Err(SliceError::NoIntersection);
    }
    loops.sort_by(|a, b| {
        b.signed_area()
            .partial_cmp(&a.signed_area())
            .expect("finite areas")
            .then_with(|| {
                let (ba, bb) = (a.bounding_box(), b.bounding_box());
                (ba.min.x, ba.min.y)
                    .partial_cmp(&(bb.min.x, bb.min.y))
                    .expect("finite bounds")
            })
    });
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::mesh::testutil::unit_cube;
    use crate::mesh::{uv_ellipsoid, TriMesh};
    use approx::assert_relative_eq;

    #[test]
    fn unit_cube_mid_section_is_unit_square() {
        let cube = unit_cube();
        let loops = plane_section(&cube, &PlaneFrame::transverse(0.5)).unwrap();
        assert_eq!(loops.len(), 1);
        let sq = &loops[0];
        assert_relative_eq!(sq.area().unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(sq.perimeter().unwrap(), 4.0, epsilon = 1e-12);
        let c = sq.centroid().unwrap();
        assert_relative_eq!(c.x, 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.y, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sphere_section_area_matches_circle() {
        // Sphere radius 10 cut at z = 6: circle radius 8, area 64*pi.
        let sphere = uv_ellipsoid(Vec3::new(10.0, 10.0, 10.0), 256, 512).unwrap();
        let loops = plane_section(&sphere, &PlaneFrame::transverse(6.0)).unwrap();
        assert_eq!(loops.len(), 1);
        let area = loops[0].area().unwrap();
        let exact = 64.0 * std::f64::consts::PI;
        assert!(
            (area - exact).abs() / exact < 0.01,
            "area {area} vs {exact}"
        );
        assert!(area < exact, "inscribed section should underestimate");
    }

    #[test]
    fn two_separated_boxes_give_two_loops() {
        let a = unit_cube();
        let b = unit_cube()
            .transformed(&crate::geom::AffineTransform3D::from_parts(
                crate::geom::Mat3::identity(),
                Vec3::new(3.0, 0.0, 0.0),
            ))
            .unwrap();
        let all = TriMesh::concat(&[a, b]);
        let loops = plane_section(&all, &PlaneFrame::transverse(0.5)).unwrap();
        assert_eq!(loops.len(), 2);
        assert_relative_eq!(loops[0].area().unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(loops[1].area().unwrap(), 1.0, epsilon = 1e-12);
        // Deterministic order: area tie broken by min corner; left box first.
        assert!(loops[0].bounding_box().min.x < loops[1].bounding_box().min.x);
    }

    #[test]
    fn plane_missing_the_mesh_errors() {
        let cube = unit_cube();
        let err = plane_section(&cube, &PlaneFrame::transverse(5.0)).unwrap_err();
        assert!(matches!(err, SliceError::NoIntersection));
    }

    #[test]
    fn open_mesh_fails_to_chain() {
        let mut broken = unit_cube();
        // Remove a triangle that straddles z = 0.5 so the section cannot
        // close around the resulting hole.
        let idx = broken
            .triangles
            .iter()
            .position(|t| {
                let zs: Vec<f64> = t.iter().map(|&i| broken.vertices[i as usize].z).collect();
                zs.iter().any(|&z| z < 0.5) && zs.iter().any(|&z| z > 0.5)
            })
            .unwrap();
        broken.triangles.remove(idx);
        let err = plane_section(&broken, &PlaneFrame::transverse(0.5)).unwrap_err();
        assert!(matches!(err, SliceError::OpenLoop(_)), "{err:?}");
    }

    #[test]
    fn sagittal_section_of_cube() {
        // Frame (u, v) = (y, z): sagittal cut of the unit cube at x = 0.25
        // is the unit square in (y, z).
        let cube = unit_cube();
        let loops = plane_section(&cube, &PlaneFrame::sagittal(0.25)).unwrap();
        assert_eq!(loops.len(), 1);
        assert_relative_eq!(loops[0].area().unwrap(), 1.0, epsilon = 1e-12);
        let bb = loops[0].bounding_box();
        assert_relative_eq!(bb.min.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(bb.max.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn plane_through_vertices_is_tolerated() {
        // Octahedron-like double pyramid whose equator vertices lie exactly
        // on the cutting plane: on-plane vertices count as positive, so the
        // section comes from the lower pyramid's faces and still closes.
        let verts = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let tris = vec![
            [0u32, 1, 4],
            [1, 2, 4],
            [2, 3, 4],
            [3, 0, 4],
            [1, 0, 5],
            [2, 1, 5],
            [3, 2, 5],
            [0, 3, 5],
        ];
        let octa = TriMesh::new(verts, tris).unwrap();
        assert!(octa.is_closed());
        let loops = plane_section(&octa, &PlaneFrame::transverse(0.0)).unwrap();
        assert_eq!(loops.len(), 1);
        // The section at the equator is the square with diagonal 2.
        assert_relative_eq!(loops[0].area().unwrap(), 2.0, epsilon = 1e-9);
    }
}
