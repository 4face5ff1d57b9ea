//! Convex hull of registered roi points, with a planar fallback.

use std::collections::HashSet;

use super::{provenance_id, ReconstructionError, ReconstructionMesh, ReconstructionMethod};
use crate::geom::{Vec2, Vec3};
use crate::mesh::TriMesh;
use crate::num::Real;
use crate::registration::RegistrationResult;

/// Points within this distance of a common plane are treated as coplanar
/// and hulled in 2D (mm).
const COPLANAR_TOLERANCE: f64 = 1e-6;

fn insufficient(msg: impl Into<String>) -> ReconstructionError {
    ReconstructionError::InsufficientPoints(msg.into())
}

/// 2D convex hull, counter-clockwise, by the monotone-chain construction.
/// Collinear boundary points are dropped.
fn hull_2d(mut pts: Vec<Vec2<f64>>) -> Result<Vec<Vec2<f64>>, ReconstructionError> {
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).expect("finite points"));
    pts.dedup_by(|a, b| a == b);
    if pts.len() < 3 {
        return Err(insufficient("fewer than 3 distinct coplanar points"));
    }
    let cross = |o: Vec2<f64>, a: Vec2<f64>, b: Vec2<f64>| (a - o).perp_dot(b - o);
    let build = |iter: &mut dyn Iterator<Item = Vec2<f64>>| {
        let mut chain: Vec<Vec2<f64>> = Vec::new();
        for p in iter {
            while chain.len() >= 2
                && cross(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0.0
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain.pop();
        chain
    };
    let lower = build(&mut pts.iter().copied());
    let upper = build(&mut pts.iter().rev().copied());
    let mut hull = lower;
    hull.extend(upper);
    if hull.len() < 3 {
        return Err(insufficient("coplanar points are collinear"));
    }
    Ok(hull)
}

struct Face {
    v: [u32; 3],
    normal: Vec3<f64>,
    offset: f64,
    alive: bool,
    outside: Vec<u32>,
}

impl Face {
    fn distance(&self, p: Vec3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Build a face over `v`, flipping its winding if needed so the interior
/// point lies behind it.
fn oriented_face(points: &[Vec3<f64>], mut v: [u32; 3], interior: Vec3<f64>) -> Face {
    let plane = |v: [u32; 3]| {
        let a = points[v[0] as usize];
        let b = points[v[1] as usize];
        let c = points[v[2] as usize];
        let n = (b - a).cross(c - a);
        let len = n.norm();
        let n = if len > 0.0 { n / len } else { n };
        (n, n.dot(a))
    };
    let (mut normal, mut offset) = plane(v);
    if normal.dot(interior) - offset > 0.0 {
        v.swap(1, 2);
        let p = plane(v);
        normal = p.0;
        offset = p.1;
    }
    Face {
        v,
        normal,
        offset,
        alive: true,
        outside: Vec::new(),
    }
}

/// Prism over a convex counter-clockwise outline lying in the plane
/// `origin + x u + y v`, swept `thickness` symmetrically along `u x v`.
fn convex_prism(
    hull: &[Vec2<f64>],
    origin: Vec3<f64>,
    u: Vec3<f64>,
    v: Vec3<f64>,
    thickness: f64,
) -> TriMesh<f64> {
    let n = hull.len();
    let normal = u.cross(v);
    let half = normal * (thickness * 0.5);
    let mut vertices: Vec<Vec3<f64>> = Vec::with_capacity(2 * n);
    for &q in hull {
        vertices.push(origin + u * q.x + v * q.y - half);
    }
    for &q in hull {
        vertices.push(origin + u * q.x + v * q.y + half);
    }
    let bot = |i: usize| i as u32;
    let top = |i: usize| (i + n) as u32;
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(4 * n - 4);
    for i in 1..n - 1 {
        triangles.push([top(0), top(i), top(i + 1)]);
        triangles.push([bot(0), bot(i + 1), bot(i)]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([bot(i), bot(j), top(j)]);
        triangles.push([bot(i), top(j), top(i)]);
    }
    TriMesh::new(vertices, triangles).expect("prism indices are valid")
}

/// Convex hull of a 3D point cloud as a closed triangle mesh with outward
/// orientation.
///
/// If all points lie within [`COPLANAR_TOLERANCE`] of a common plane, the 2D
/// hull is extruded symmetrically by `coplanar_thickness` instead. Fewer
/// than three distinct points, or collinear points, are insufficient. The
/// construction runs in f64 and converts back to `T` at the end.
pub fn convex_hull_points<T: Real>(
    input: &[Vec3<T>],
    coplanar_thickness: T,
) -> Result<TriMesh<T>, ReconstructionError> {
    let mut points: Vec<Vec3<f64>> = input
        .iter()
        .map(|p| Vec3::new(p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy()))
        .collect();
    if points.iter().any(|p| !p.is_finite()) {
        return Err(insufficient("points must be finite"));
    }
    points.sort_by(|a, b| {
        (a.x, a.y, a.z)
            .partial_cmp(&(b.x, b.y, b.z))
            .expect("finite points")
    });
    points.dedup_by(|a, b| a == b);
    if points.len() < 3 {
        return Err(insufficient(format!(
            "{} distinct points span no solid",
            points.len()
        )));
    }

    // Initial simplex: lexicographic minimum, farthest point from it, the
    // point of maximal triangle area, then the point farthest off-plane.
    let p0 = 0usize;
    let (mut p1, mut best) = (0usize, 0.0f64);
    for (i, &p) in points.iter().enumerate() {
        let d = (p - points[p0]).dot(p - points[p0]);
        if d > best {
            best = d;
            p1 = i;
        }
    }
    if best.sqrt() <= COPLANAR_TOLERANCE {
        return Err(insufficient("all points coincide"));
    }
    let e01 = points[p1] - points[p0];
    let (mut p2, mut best_area) = (0usize, 0.0f64);
    for (i, &p) in points.iter().enumerate() {
        let a = e01.cross(p - points[p0]).norm();
        if a > best_area {
            best_area = a;
            p2 = i;
        }
    }
    if best_area / e01.norm() <= COPLANAR_TOLERANCE {
        return Err(insufficient("points are collinear"));
    }
    let plane_n = {
        let n = e01.cross(points[p2] - points[p0]);
        n / n.norm()
    };
    let (mut p3, mut best_h) = (0usize, 0.0f64);
    for (i, &p) in points.iter().enumerate() {
        let h = plane_n.dot(p - points[p0]).abs();
        if h > best_h {
            best_h = h;
            p3 = i;
        }
    }

    if best_h <= COPLANAR_TOLERANCE {
        // Planar cloud: hull in-plane and extrude by the slab thickness.
        let thickness = coplanar_thickness.to_f64_lossy();
        if !(thickness > 0.0) {
            return Err(insufficient(
                "coplanar points with non-positive extrusion thickness",
            ));
        }
        let origin = points[p0];
        let u = e01 / e01.norm();
        let v = plane_n.cross(u);
        let planar: Vec<Vec2<f64>> = points
            .iter()
            .map(|&p| Vec2::new((p - origin).dot(u), (p - origin).dot(v)))
            .collect();
        let hull = hull_2d(planar)?;
        return convert_mesh(convex_prism(&hull, origin, u, v, thickness));
    }

    // Incremental hull: start from the simplex, repeatedly lift the farthest
    // outside point over its face, replacing the visible faces by a cone
    // from the horizon.
    let diag = {
        let lo = points.iter().fold(points[0], |m, &p| {
            Vec3::new(m.x.min(p.x), m.y.min(p.y), m.z.min(p.z))
        });
        let hi = points.iter().fold(points[0], |m, &p| {
            Vec3::new(m.x.max(p.x), m.y.max(p.y), m.z.max(p.z))
        });
        (hi - lo).norm()
    };
    let eps = 1e-9 * diag.max(1.0);
    let interior = (points[p0] + points[p1] + points[p2] + points[p3]) / 4.0;
    let simplex = [p0 as u32, p1 as u32, p2 as u32, p3 as u32];
    let mut faces: Vec<Face> = vec![
        oriented_face(&points, [simplex[0], simplex[1], simplex[2]], interior),
        oriented_face(&points, [simplex[0], simplex[1], simplex[3]], interior),
        oriented_face(&points, [simplex[0], simplex[2], simplex[3]], interior),
        oriented_face(&points, [simplex[1], simplex[2], simplex[3]], interior),
    ];
    for i in 0..points.len() as u32 {
        if simplex.contains(&i) {
            continue;
        }
        let p = points[i as usize];
        if let Some(f) = faces.iter_mut().find(|f| f.distance(p) > eps) {
            f.outside.push(i);
        }
    }

    while let Some(fi) = faces.iter().position(|f| f.alive && !f.outside.is_empty()) {
        let apex = *faces[fi]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                let da = faces[fi].distance(points[a as usize]);
                let db = faces[fi].distance(points[b as usize]);
                da.partial_cmp(&db)
                    .expect("finite distances")
                    .then(b.cmp(&a)) // ties toward the lowest index
            })
            .expect("outside set is non-empty");
        let apex_p = points[apex as usize];

        let visible: Vec<usize> = (0..faces.len())
            .filter(|&i| faces[i].alive && faces[i].distance(apex_p) > eps)
            .collect();
        debug_assert!(visible.contains(&fi));
        let visible_edges: HashSet<(u32, u32)> = visible
            .iter()
            .flat_map(|&i| {
                let v = faces[i].v;
                [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]
            })
            .collect();
        let mut orphans: Vec<u32> = Vec::new();
        for &i in &visible {
            faces[i].alive = false;
            orphans.extend(faces[i].outside.drain(..).filter(|&p| p != apex));
        }
        let mut new_faces: Vec<Face> = Vec::new();
        for &i in &visible {
            let v = faces[i].v;
            for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
                if !visible_edges.contains(&(b, a)) {
                    new_faces.push(oriented_face(&points, [a, b, apex], interior));
                }
            }
        }
        for p in orphans {
            let q = points[p as usize];
            if let Some(f) = new_faces.iter_mut().find(|f| f.distance(q) > eps) {
                f.outside.push(p);
            }
        }
        faces.extend(new_faces);
    }

    // Compact surviving faces into a mesh.
    let mut remap: Vec<i64> = vec![-1; points.len()];
    let mut vertices: Vec<Vec3<f64>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    for f in faces.iter().filter(|f| f.alive) {
        let mut tri = [0u32; 3];
        for (slot, &vi) in tri.iter_mut().zip(f.v.iter()) {
            if remap[vi as usize] < 0 {
                remap[vi as usize] = vertices.len() as i64;
                vertices.push(points[vi as usize]);
            }
            *slot = remap[vi as usize] as u32;
        }
        triangles.push(tri);
    }
    convert_mesh(TriMesh::new(vertices, triangles).map_err(ReconstructionError::Mesh)?)
}

fn convert_mesh<T: Real>(mesh: TriMesh<f64>) -> Result<TriMesh<T>, ReconstructionError> {
    let vertices = mesh
        .vertices
        .iter()
        .map(|p| Vec3::new(T::of(p.x), T::of(p.y), T::of(p.z)))
        .collect();
    TriMesh::new(vertices, mesh.triangles).map_err(ReconstructionError::Mesh)
}

/// Convex hull over *all* roi points of the given results, pooled across
/// classes (class label "ALL").
///
/// If every roi point lies in one plane, the 2D hull is extruded by the
/// largest source slab thickness.
pub fn convex_hull<T: Real>(
    results: &[RegistrationResult<T>],
) -> Result<ReconstructionMesh<T>, ReconstructionError> {
    let mut pts: Vec<Vec3<T>> = Vec::new();
    let mut provenance: Vec<String> = Vec::new();
    let mut thickness = T::zero();
    for r in results {
        for (k, (class, poly)) in r.registered_rois.iter().enumerate() {
            pts.extend(poly.points_3d());
            provenance.push(provenance_id(r, k, class));
            thickness = thickness.max(r.thickness_mm);
        }
    }
    if pts.is_empty() {
        return Err(insufficient("no roi points to hull"));
    }
    let mesh = convex_hull_points(&pts, thickness)?;
    Ok(ReconstructionMesh {
        class_label: "ALL".to_string(),
        mesh,
        method: ReconstructionMethod::ConvexHull,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn v3(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn cube_corners() -> Vec<Vec3<f64>> {
        let mut v = Vec::new();
        for &x in &[0.0, 1.0] {
            for &y in &[0.0, 1.0] {
                for &z in &[0.0, 1.0] {
                    v.push(v3(x, y, z));
                }
            }
        }
        v
    }

    /// Every input point must lie on or behind every hull face.
    fn assert_contains_all(mesh: &TriMesh<f64>, points: &[Vec3<f64>], tol: f64) {
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
            let n = (b - a).cross(c - a);
            let n = n / n.norm();
            for &p in points {
                assert!(
                    n.dot(p - a) <= tol,
                    "point {p:?} lies {} outside a hull face",
                    n.dot(p - a)
                );
            }
        }
    }

    #[test]
    fn cube_corners_hull() {
        let mesh = convex_hull_points(&cube_corners(), 1.0).unwrap();
        assert!(mesh.is_closed());
        assert_eq!(mesh.vertex_count(), 8);
        assert_eq!(mesh.triangle_count(), 12);
        assert_relative_eq!(mesh.signed_volume().unwrap(), 1.0, epsilon = 1e-12);
        assert_contains_all(&mesh, &cube_corners(), 1e-6);
    }

    #[test]
    fn interior_points_do_not_change_the_hull() {
        let mut pts = cube_corners();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            pts.push(v3(
                rng.gen_range(0.01..0.99),
                rng.gen_range(0.01..0.99),
                rng.gen_range(0.01..0.99),
            ));
        }
        let mesh = convex_hull_points(&pts, 1.0).unwrap();
        assert_eq!(mesh.vertex_count(), 8);
        assert_relative_eq!(mesh.signed_volume().unwrap(), 1.0, epsilon = 1e-12);
        assert_contains_all(&mesh, &pts, 1e-6);
    }

    #[test]
    fn octahedron_volume() {
        let pts = vec![
            v3(1.0, 0.0, 0.0),
            v3(-1.0, 0.0, 0.0),
            v3(0.0, 1.0, 0.0),
            v3(0.0, -1.0, 0.0),
            v3(0.0, 0.0, 1.0),
            v3(0.0, 0.0, -1.0),
        ];
        let mesh = convex_hull_points(&pts, 1.0).unwrap();
        assert!(mesh.is_closed());
        assert_eq!(mesh.triangle_count(), 8);
        assert_relative_eq!(mesh.signed_volume().unwrap(), 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn random_cloud_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pts: Vec<Vec3<f64>> = (0..300)
            .map(|_| {
                v3(
                    rng.gen_range(-20.0..20.0),
                    rng.gen_range(-10.0..10.0),
                    rng.gen_range(-5.0..5.0),
                )
            })
            .collect();
        let mesh = convex_hull_points(&pts, 1.0).unwrap();
        assert!(mesh.is_closed());
        assert!(mesh.signed_volume().unwrap() > 0.0);
        assert_contains_all(&mesh, &pts, 1e-6);
        // Idempotence: hulling the hull vertices reproduces the volume.
        let again = convex_hull_points(&mesh.vertices, 1.0).unwrap();
        assert_relative_eq!(
            again.signed_volume().unwrap(),
            mesh.signed_volume().unwrap(),
            max_relative = 1e-12
        );
        // Determinism.
        let twin = convex_hull_points(&pts, 1.0).unwrap();
        assert_eq!(twin.vertices, mesh.vertices);
        assert_eq!(twin.triangles, mesh.triangles);
    }

    #[test]
    fn sphere_surface_hull_approximates_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec3<f64>> = (0..600)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = (1.0 - z * z).sqrt();
                v3(10.0 * r * a.cos(), 10.0 * r * a.sin(), 10.0 * z)
            })
            .collect();
        let mesh = convex_hull_points(&pts, 1.0).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 1000.0;
        let vol = mesh.signed_volume().unwrap();
        assert!(vol < exact, "inscribed hull must underestimate");
        assert!(vol > 0.9 * exact, "volume {vol} too small vs {exact}");
    }

    #[test]
    fn coplanar_points_extrude_to_a_slab() {
        // Square plus interior points at z = 3, thickness 2.
        let mut pts = vec![
            v3(0.0, 0.0, 3.0),
            v3(2.0, 0.0, 3.0),
            v3(2.0, 2.0, 3.0),
            v3(0.0, 2.0, 3.0),
            v3(1.0, 1.0, 3.0),
            v3(0.5, 1.5, 3.0),
        ];
        let mesh = convex_hull_points(&pts, 2.0).unwrap();
        assert!(mesh.is_closed());
        assert_relative_eq!(mesh.signed_volume().unwrap(), 8.0, epsilon = 1e-9);
        let bb = mesh.bounding_box().unwrap();
        assert_relative_eq!(bb.min.z, 2.0, epsilon = 1e-12);
        assert_relative_eq!(bb.max.z, 4.0, epsilon = 1e-12);
        // Tilted plane: same behaviour regardless of orientation.
        let rot = |p: Vec3<f64>| v3(p.x, p.y * 0.8 - p.z * 0.6, p.y * 0.6 + p.z * 0.8);
        pts = pts.into_iter().map(rot).collect();
        let tilted = convex_hull_points(&pts, 2.0).unwrap();
        assert_relative_eq!(tilted.signed_volume().unwrap(), 8.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_inputs_are_insufficient() {
        // Two points.
        let err = convex_hull_points(&[v3(0.0, 0.0, 0.0), v3(1.0, 0.0, 0.0)], 1.0);
        assert!(matches!(
            err,
            Err(ReconstructionError::InsufficientPoints(_))
        ));
        // Collinear points.
        let line: Vec<Vec3<f64>> = (0..10).map(|i| v3(i as f64, 0.0, 0.0)).collect();
        let err = convex_hull_points(&line, 1.0);
        assert!(matches!(
            err,
            Err(ReconstructionError::InsufficientPoints(_))
        ));
        // Coplanar with zero thickness.
        let square = vec![
            v3(0.0, 0.0, 0.0),
            v3(1.0, 0.0, 0.0),
            v3(1.0, 1.0, 0.0),
            v3(0.0, 1.0, 0.0),
        ];
        let err = convex_hull_points(&square, 0.0);
        assert!(matches!(
            err,
            Err(ReconstructionError::InsufficientPoints(_))
        ));
    }

    #[test]
    fn pooled_hull_from_results() {
        use crate::geom::{PlaneFrame, Polygon2D};
        use crate::registration::{PlanarPolygon3D, RegistrationResult, Similarity2D};
        let mk = |z: f64, label: &str| {
            let frame = PlaneFrame::transverse(z);
            let square =
                Polygon2D::from_coords(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)]).unwrap();
            RegistrationResult::<f64> {
                slide_name: format!("s{z}"),
                polygon_name: "p".into(),
                case_id: "c".into(),
                transform: Similarity2D::identity(),
                iou: 1.0,
                restart_angle_deg: 0.0,
                iterations_used: 0,
                registered_contour: PlanarPolygon3D {
                    frame,
                    outline: square.clone(),
                },
                registered_rois: vec![(
                    label.to_string(),
                    PlanarPolygon3D {
                        frame,
                        outline: square,
                    },
                )],
                thickness_mm: 2.0,
            }
        };
        let results = vec![mk(0.0, "A"), mk(5.0, "B")];
        let hull = convex_hull(&results).unwrap();
        assert_eq!(hull.class_label, "ALL");
        assert_eq!(hull.method, ReconstructionMethod::ConvexHull);
        assert_eq!(hull.provenance.len(), 2);
        // Two parallel squares 5 apart: hull is the 4 x 4 x 5 box.
        assert_relative_eq!(hull.mesh.signed_volume().unwrap(), 80.0, epsilon = 1e-9);
    }
}
