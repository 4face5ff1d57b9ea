//! Procedural closed surfaces: superellipsoid tessellation, axis-aligned
//! ellipsoids, and the generic prostate stand-in model.

use crate::geom::Vec3;
use crate::mesh::{MeshError, TriMesh};
use crate::num::{real, Real};

/// Default tessellation for the generic model (stacks, slices).
pub const DEFAULT_MODEL_TESSELLATION: (usize, usize) = (64, 128);

/// Shape exponent of the generic model: slightly boxier than an ellipsoid.
const GENERIC_MODEL_EXPONENT: f64 = 0.8;

/// Signed power: `sign(w)·|w|^e`. Classic superellipsoid auxiliary.
fn signed_pow<T: Real>(w: T, e: T) -> T {
    if w == T::zero() {
        T::zero()
    } else {
        w.signum() * w.abs().powf(e)
    }
}

/// Tessellate the superellipsoid with the given semi-axes and exponent as a
/// closed, outward-oriented UV grid with `stacks` latitude bands and
/// `slices` longitude steps.
fn superellipsoid<T: Real>(
    semi_axes: Vec3<T>,
    exponent: T,
    stacks: usize,
    slices: usize,
) -> TriMesh<T> {
    debug_assert!(stacks >= 2 && slices >= 3);
    let mut vertices: Vec<Vec3<T>> = Vec::with_capacity(2 + (stacks - 1) * slices);
    // Poles first.
    vertices.push(Vec3::new(T::zero(), T::zero(), -semi_axes.z));
    vertices.push(Vec3::new(T::zero(), T::zero(), semi_axes.z));
    let pi = T::PI();
    let two_pi = pi + pi;
    for i in 1..stacks {
        // Latitude from -pi/2 (south pole) to +pi/2 (north pole), exclusive.
        let lat = -pi * real::<T>(0.5) + pi * real::<T>(i as f64) / real::<T>(stacks as f64);
        let (sv, cv) = lat.sin_cos();
        let ring_r = signed_pow(cv, exponent);
        let z = semi_axes.z * signed_pow(sv, exponent);
        for j in 0..slices {
            let lon = two_pi * real::<T>(j as f64) / real::<T>(slices as f64);
            let (su, cu) = lon.sin_cos();
            vertices.push(Vec3::new(
                semi_axes.x * ring_r * signed_pow(cu, exponent),
                semi_axes.y * ring_r * signed_pow(su, exponent),
                z,
            ));
        }
    }
    let ring = |i: usize, j: usize| (2 + (i - 1) * slices + j % slices) as u32;
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(2 * slices * (stacks - 1));
    for j in 0..slices {
        // South cap: outward is -z.
        triangles.push([0, ring(1, j + 1), ring(1, j)]);
        // North cap: outward is +z.
        triangles.push([1, ring(stacks - 1, j), ring(stacks - 1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j + 1), ring(i + 1, j));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriMesh::new(vertices, triangles).expect("procedural indices are in range")
}

/// Closed axis-aligned ellipsoid centred at the origin (UV-sphere
/// tessellation scaled to the given semi-axes).
pub fn uv_ellipsoid<T: Real>(
    semi_axes: Vec3<T>,
    stacks: usize,
    slices: usize,
) -> Result<TriMesh<T>, MeshError> {
    if !(semi_axes.x > T::zero() && semi_axes.y > T::zero() && semi_axes.z > T::zero()) {
        return Err(MeshError::Argument(format!(
            "ellipsoid semi-axes must be positive, got ({}, {}, {})",
            semi_axes.x, semi_axes.y, semi_axes.z
        )));
    }
    if stacks < 2 || slices < 3 {
        return Err(MeshError::Argument(format!(
            "ellipsoid tessellation too coarse: stacks {stacks} (needs >= 2), slices {slices} (needs >= 3)"
        )));
    }
    Ok(superellipsoid(semi_axes, T::one(), stacks, slices))
}

/// Procedural stand-in for a prostate surface model: a superellipsoid
/// (exponent 0.8) whose bounding box is exactly
/// `width × height × depth` mm (x = left-right, y = ventral-dorsal,
/// z = apex-base).
pub fn generic_prostate_model<T: Real>(
    width_mm: T,
    height_mm: T,
    depth_mm: T,
    tessellation: (usize, usize),
) -> Result<TriMesh<T>, MeshError> {
    let (stacks, slices) = tessellation;
    if !(width_mm > T::zero() && height_mm > T::zero() && depth_mm > T::zero()) {
        return Err(MeshError::Argument(format!(
            "model dimensions must be positive, got ({width_mm}, {height_mm}, {depth_mm})"
        )));
    }
    if stacks < 8 || slices < 8 {
        return Err(MeshError::Argument(format!(
            "model tessellation too coarse: stacks {stacks}, slices {slices} (both need >= 8)"
        )));
    }
    let half = real::<T>(0.5);
    let unit = superellipsoid(
        Vec3::new(half, half, half),
        real(GENERIC_MODEL_EXPONENT),
        stacks,
        slices,
    );
    // Normalize to the exact requested extents: the tessellation does not
    // necessarily attain the analytic semi-axes, so measure and rescale.
    let bb = unit.bounding_box().expect("tessellation is non-empty");
    let e = bb.extent();
    let mut mesh = unit;
    for v in &mut mesh.vertices {
        v.x = v.x / e.x * width_mm;
        v.y = v.y / e.y * height_mm;
        v.z = v.z / e.z * depth_mm;
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uv_sphere_volume_approaches_analytic() {
        let r = 1.0;
        let sphere = uv_ellipsoid(Vec3::new(r, r, r), 64, 128).unwrap();
        assert!(sphere.is_closed());
        let v = sphere.signed_volume().unwrap();
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
        assert!(
            (v - analytic).abs() / analytic < 0.005,
            "tessellated volume {v} vs analytic {analytic}"
        );
        assert!(v < analytic, "inscribed tessellation must underestimate");
    }

    #[test]
    fn ellipsoid_volume_scales_with_semi_axes() {
        let (a, b, c) = (3.0, 1.5, 2.0);
        let e = uv_ellipsoid(Vec3::new(a, b, c), 64, 128).unwrap();
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * a * b * c;
        let v = e.signed_volume().unwrap();
        assert!((v - analytic).abs() / analytic < 0.005);
    }

    #[test]
    fn generic_model_extents_are_exact() {
        let m = generic_prostate_model(40.0, 30.0, 35.0, DEFAULT_MODEL_TESSELLATION).unwrap();
        let bb = m.bounding_box().unwrap();
        let e = bb.extent();
        assert_relative_eq!(e.x, 40.0, epsilon = 1e-6);
        assert_relative_eq!(e.y, 30.0, epsilon = 1e-6);
        assert_relative_eq!(e.z, 35.0, epsilon = 1e-6);
        // Centred at the origin.
        let c = bb.center();
        assert!(c.norm() < 1e-9);
    }

    #[test]
    fn generic_model_is_closed_and_outward() {
        let m = generic_prostate_model(40.0, 30.0, 35.0, (16, 32)).unwrap();
        assert!(m.is_closed());
        assert!(m.signed_volume().unwrap() > 0.0);
    }

    #[test]
    fn generic_model_volume_between_ellipsoid_and_box() {
        let (w, h, d) = (40.0, 30.0, 35.0);
        let m = generic_prostate_model(w, h, d, DEFAULT_MODEL_TESSELLATION).unwrap();
        let v = m.signed_volume().unwrap();
        let ellipsoid = 4.0 / 3.0 * std::f64::consts::PI * (w / 2.0) * (h / 2.0) * (d / 2.0);
        let box_v = w * h * d;
        assert!(
            v > ellipsoid && v < box_v,
            "volume {v} not in ({ellipsoid}, {box_v})"
        );
    }

    #[test]
    fn unit_dims_give_equal_extents() {
        let m = generic_prostate_model(1.0, 1.0, 1.0, (16, 16)).unwrap();
        let e = m.bounding_box().unwrap().extent();
        assert_relative_eq!(e.x, e.y, epsilon = 1e-12);
        assert_relative_eq!(e.y, e.z, epsilon = 1e-12);
    }

    #[test]
    fn vertices_satisfy_superellipsoid_implicit_equation() {
        // Before normalization the vertices lie on the analytic surface; the
        // normalization rescales axes, so test via the rescaled implicit
        // form: ((x/ax)^(2/e) + (y/ay)^(2/e))^1 + (z/az)^(2/e) = 1 with the
        // attained semi-axes.
        let m = generic_prostate_model::<f64>(2.0, 2.0, 2.0, (32, 64)).unwrap();
        let bb = m.bounding_box().unwrap();
        let a = bb.extent() * 0.5;
        let p = 2.0 / GENERIC_MODEL_EXPONENT;
        // The attained extents may be smaller than the analytic semi-axis, so
        // residuals can exceed 0 slightly; allow a modest band.
        for v in &m.vertices {
            let r =
                (v.x / a.x).abs().powf(p) + (v.y / a.y).abs().powf(p) + (v.z / a.z).abs().powf(p);
            assert!(
                (0.9..=1.1).contains(&r),
                "implicit residual {r} for vertex {v:?}"
            );
        }
    }

    #[test]
    fn bad_arguments_rejected() {
        assert!(matches!(
            generic_prostate_model(0.0, 1.0, 1.0, (16, 16)),
            Err(MeshError::Argument(_))
        ));
        assert!(matches!(
            generic_prostate_model(1.0, 1.0, 1.0, (4, 16)),
            Err(MeshError::Argument(_))
        ));
        assert!(matches!(
            uv_ellipsoid(Vec3::new(1.0, -1.0, 1.0), 16, 16),
            Err(MeshError::Argument(_))
        ));
    }

    #[test]
    fn no_self_intersections_at_coarse_tessellation() {
        // Brute-force triangle/triangle overlap scan with bbox prefilter.
        let m = generic_prostate_model(40.0, 30.0, 35.0, (12, 24)).unwrap();
        let tris: Vec<[Vec3<f64>; 3]> = (0..m.triangle_count())
            .map(|t| m.triangle_vertices(t))
            .collect();
        let boxes: Vec<crate::geom::Aabb3<f64>> = tris
            .iter()
            .map(|t| crate::geom::Aabb3::from_points(t.iter().copied()).unwrap())
            .collect();
        let shares_vertex = |a: &[Vec3<f64>; 3], b: &[Vec3<f64>; 3]| {
            a.iter().any(|p| b.iter().any(|q| p.distance(*q) < 1e-12))
        };
        for i in 0..tris.len() {
            for j in (i + 1)..tris.len() {
                if !boxes[i].overlaps(&boxes[j]) || shares_vertex(&tris[i], &tris[j]) {
                    continue;
                }
                assert!(
                    !triangles_intersect(&tris[i], &tris[j]),
                    "triangles {i} and {j} intersect"
                );
            }
        }
    }

    /// Segment-triangle based triangle-triangle intersection (sufficient for
    /// non-coplanar, vertex-disjoint pairs as filtered above).
    fn triangles_intersect(a: &[Vec3<f64>; 3], b: &[Vec3<f64>; 3]) -> bool {
        let edge_hits = |tri: &[Vec3<f64>; 3], seg: (Vec3<f64>, Vec3<f64>)| {
            let n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
            let (p, q) = seg;
            let dp = n.dot(p - tri[0]);
            let dq = n.dot(q - tri[0]);
            if dp * dq > 0.0 || (dp == 0.0 && dq == 0.0) {
                return false;
            }
            let t = dp / (dp - dq);
            let x = p + (q - p) * t;
            // Barycentric containment.
            let (v0, v1, v2) = (tri[1] - tri[0], tri[2] - tri[0], x - tri[0]);
            let (d00, d01, d11, d20, d21) =
                (v0.dot(v0), v0.dot(v1), v1.dot(v1), v2.dot(v0), v2.dot(v1));
            let denom = d00 * d11 - d01 * d01;
            if denom.abs() < 1e-18 {
                return false;
            }
            let v = (d11 * d20 - d01 * d21) / denom;
            let w = (d00 * d21 - d01 * d20) / denom;
            v > 1e-9 && w > 1e-9 && (1.0 - v - w) > 1e-9
        };
        for k in 0..3 {
            if edge_hits(a, (b[k], b[(k + 1) % 3])) || edge_hits(b, (a[k], a[(k + 1) % 3])) {
                return true;
            }
        }
        false
    }
}
