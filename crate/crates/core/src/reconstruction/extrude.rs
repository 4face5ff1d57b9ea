//! Triangulation of planar outlines and prism extrusion.

use std::collections::BTreeMap;

use super::{provenance_id, ReconstructionError, ReconstructionMesh, ReconstructionMethod};
use crate::geom::{PlaneFrame, Polygon2D, Vec2, Vec3};
use crate::mesh::TriMesh;
use crate::num::{real, Real};
use crate::registration::RegistrationResult;

fn orient<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    (b - a).perp_dot(c - a)
}

fn strictly_inside<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> bool {
    orient(a, b, p) > T::zero() && orient(b, c, p) > T::zero() && orient(c, a, p) > T::zero()
}

/// Triangulate a simple polygon by ear clipping.
///
/// Returns exactly `len - 2` index triangles oriented counter-clockwise
/// (matching the polygon's normalized winding). Collinear vertices yield
/// zero-area ears, which are kept so the count and the edge structure stay
/// exact. Fails with [`ReconstructionError::SelfIntersection`] when no ear
/// exists, which cannot happen for a simple polygon.
pub fn ear_clip<T: Real>(p: &Polygon2D<T>) -> Result<Vec<[usize; 3]>, ReconstructionError> {
    let pts = p.points();
    let mut active: Vec<usize> = (0..pts.len()).collect();
    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(pts.len() - 2);
    while active.len() > 3 {
        let n = active.len();
        let mut clipped = false;
        for k in 0..n {
            let ia = active[(k + n - 1) % n];
            let ib = active[k];
            let ic = active[(k + 1) % n];
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if orient(a, b, c) < T::zero() {
                continue; // reflex corner
            }
            let blocked = active
                .iter()
                .any(|&j| j != ia && j != ib && j != ic && strictly_inside(pts[j], a, b, c));
            if blocked {
                continue;
            }
            triangles.push([ia, ib, ic]);
            active.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            return Err(ReconstructionError::SelfIntersection(
                "no ear found; outline is not simple".into(),
            ));
        }
    }
    triangles.push([active[0], active[1], active[2]]);
    Ok(triangles)
}

/// Closed prism: the outline swept symmetrically along its plane normal.
///
/// Vertices: the outline ring at `-thickness/2` then at `+thickness/2`
/// (2n total). Caps are ear-clip triangulations (top as-is, bottom with
/// flipped winding); sides are two triangles per outline edge. The result
/// is closed with outward orientation and its volume equals
/// `outline area * thickness`.
pub(crate) fn prism_mesh<T: Real>(
    outline: &Polygon2D<T>,
    frame: &PlaneFrame<T>,
    thickness: T,
) -> Result<TriMesh<T>, ReconstructionError> {
    if !(thickness > T::zero()) {
        return Err(ReconstructionError::InsufficientPoints(
            "prism thickness must be positive".into(),
        ));
    }
    let area = outline.area()?; // rejects near-zero outlines
    let cap = ear_clip(outline)?;
    let normal = frame.normal();
    let half = thickness * real(0.5);
    let pts = outline.points();
    let n = pts.len();
    let mut vertices: Vec<Vec3<T>> = Vec::with_capacity(2 * n);
    for &q in pts {
        vertices.push(frame.lift(q) - normal * half);
    }
    for &q in pts {
        vertices.push(frame.lift(q) + normal * half);
    }
    let top = |i: usize| (i + n) as u32;
    let bot = |i: usize| i as u32;
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(4 * n - 4);
    for t in &cap {
        triangles.push([top(t[0]), top(t[1]), top(t[2])]);
        triangles.push([bot(t[0]), bot(t[2]), bot(t[1])]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([bot(i), bot(j), top(j)]);
        triangles.push([bot(i), top(j), top(i)]);
    }
    let mesh = TriMesh::new(vertices, triangles)?;
    let volume = mesh.signed_volume()?;
    let expected = area * thickness;
    if ((volume - expected) / expected).abs() > real(1e-9) {
        return Err(ReconstructionError::Degenerate(
            crate::geom::GeomError::Degenerate(format!(
                "prism volume {volume} deviates from area x thickness {expected}"
            )),
        ));
    }
    Ok(mesh)
}

/// Extrude every registered roi into a prism of its slab thickness,
/// grouped per class label (sorted), one mesh per class.
pub fn linear_extrusion<T: Real>(
    results: &[RegistrationResult<T>],
) -> Result<Vec<ReconstructionMesh<T>>, ReconstructionError> {
    let mut by_class: BTreeMap<String, (Vec<TriMesh<T>>, Vec<String>)> = BTreeMap::new();
    for r in results {
        for (k, (class, poly)) in r.registered_rois.iter().enumerate() {
            if !poly.outline.is_simple() {
                return Err(ReconstructionError::SelfIntersection(format!(
                    "roi {} of slide {} self-intersects",
                    k, r.slide_name
                )));
            }
            let prism = prism_mesh(&poly.outline, &poly.frame, r.thickness_mm)?;
            let slot = by_class.entry(class.clone()).or_default();
            slot.0.push(prism);
            slot.1.push(provenance_id(r, k, class));
        }
    }
    Ok(by_class
        .into_iter()
        .map(|(class_label, (meshes, provenance))| ReconstructionMesh {
            class_label,
            mesh: TriMesh::concat(&meshes),
            method: ReconstructionMethod::LinearExtrusion,
            provenance,
        })
        .collect())
}
