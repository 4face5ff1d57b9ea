//! Virtual slicing: apply a sectioning protocol to a surface model,
//! producing named planar reference polygons.

mod clip;
mod io;
mod section;

pub use clip::clip_polygon;
pub use io::{export_reference_obj, parse_reference_model, serialize_reference_model};
pub use section::plane_section;

use crate::geom::{Aabb3, GeomError, PlaneFrame, Polygon2D, Vec2};
use crate::mesh::{MeshError, TriMesh};
use crate::num::{real, Real};
use crate::protocol::{ApexBaseSpec, Region, SectioningProtocol, Side};

/// Errors raised while slicing a model.
#[derive(Debug, thiserror::Error)]
pub enum SliceError {
    /// Section segments could not be chained into closed loops (open or
    /// non-manifold mesh).
    #[error("section loop cannot be closed: {0}")]
    OpenLoop(String),
    /// The cutting plane misses the mesh interior.
    #[error("plane does not intersect the mesh")]
    NoIntersection,
    /// Degenerate geometry encountered.
    #[error(transparent)]
    Degenerate(#[from] GeomError),
    /// The protocol asks for fragments the mesh geometry cannot provide.
    #[error("protocol does not fit the mesh: {0}")]
    ProtocolMeshMismatch(String),
    /// Underlying mesh failure.
    #[error(transparent)]
    Mesh(#[from] MeshError),
    /// Unparseable reference-model document.
    #[error("reference model format error: {0}")]
    Format(String),
}

/// A named planar polygon produced by slicing: the virtual counterpart of
/// one histology slide/fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePolygon<T> {
    /// Canonical fragment id text.
    pub name: String,
    /// Plane the polygon lives in. Central fragments: normal +z; apex/base
    /// (sagittal) fragments: normal +x.
    pub frame: PlaneFrame<T>,
    /// Outline in frame coordinates.
    pub outline: Polygon2D<T>,
    /// Width of the slab this polygon stands in for (mm).
    pub thickness_mm: T,
    pub region: Region,
}

/// All reference polygons of one case, in protocol order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel<T> {
    pub case_id: String,
    pub polygons: Vec<ReferencePolygon<T>>,
    /// Bounding box of the source mesh.
    pub source_extent: Aabb3<T>,
}

impl<T: Real> ReferenceModel<T> {
    pub fn find(&self, name: &str) -> Option<&ReferencePolygon<T>> {
        self.polygons.iter().find(|p| p.name == name)
    }
}

/// Largest-area polygon from a pool of clip fragments; `None` when empty.
fn largest<T: Real>(pool: Vec<Polygon2D<T>>) -> Option<Polygon2D<T>> {
    pool.into_iter().max_by(|a, b| {
        a.signed_area()
            .partial_cmp(&b.signed_area())
            .expect("areas are finite")
    })
}

/// In-plane half-plane clip of every loop, pooling the fragments.
fn clip_all<T: Real>(
    loops: &[Polygon2D<T>],
    point: Vec2<T>,
    inward_normal: Vec2<T>,
) -> Result<Vec<Polygon2D<T>>, SliceError> {
    let mut out = Vec::new();
    for l in loops {
        out.extend(clip_polygon(l, (point, inward_normal))?);
    }
    Ok(out)
}

/// Apply the sectioning protocol to a closed mesh.
///
/// Central slices are transverse (z) cuts of the region between the apex and
/// base offsets, sectioned at each slab's mid-plane and split at the slice's
/// area centroid into left/right (and ventral/dorsal when requested). The
/// apex and base regions are cut sagittally (x) per compartment, with the
/// section polygons clipped to the region's z-band. Offsets come from the
/// protocol unless overridden.
pub fn build_reference_model<T: Real>(
    mesh: &TriMesh<T>,
    protocol: &SectioningProtocol,
    apex_offset_override: Option<T>,
    base_offset_override: Option<T>,
) -> Result<ReferenceModel<T>, SliceError> {
    let bb = mesh.bounding_box()?;
    let apex_offset = apex_offset_override.unwrap_or_else(|| T::of(protocol.apex.offset_mm));
    let base_offset = base_offset_override.unwrap_or_else(|| T::of(protocol.base.offset_mm));
    if !(apex_offset > T::zero() && base_offset > T::zero()) {
        return Err(SliceError::ProtocolMeshMismatch(
            "apex/base offsets must be positive".into(),
        ));
    }
    let z_extent = bb.extent().z;
    if z_extent <= apex_offset + base_offset {
        return Err(SliceError::ProtocolMeshMismatch(format!(
            "mesh z-extent {z_extent} mm does not exceed apex+base offsets {} mm",
            apex_offset + base_offset
        )));
    }

    let mut polygons: Vec<ReferencePolygon<T>> = Vec::new();

    // --- Apex region ------------------------------------------------------
    let apex_lo = bb.min.z;
    let apex_hi = bb.min.z + apex_offset;
    sagittal_region(
        mesh,
        &protocol.apex,
        apex_lo,
        apex_hi,
        Region::Apex,
        &mut polygons,
    )?;

    // --- Central slices ---------------------------------------------------
    let central_lo = bb.min.z + apex_offset;
    let central_hi = bb.max.z - base_offset;
    let n = protocol.central.len();
    let slab = (central_hi - central_lo) / real(n as f64);
    for slice in &protocol.central {
        let mid_z = central_lo + slab * (T::of(slice.index as f64) - real(0.5));
        let frame = PlaneFrame::transverse(mid_z);
        let loops = match plane_section(mesh, &frame) {
            Ok(l) => l,
            Err(SliceError::NoIntersection) => {
                return Err(SliceError::ProtocolMeshMismatch(format!(
                    "central slice {} misses the mesh",
                    slice.index
                )))
            }
            Err(e) => return Err(e),
        };
        for (k, id) in slice.ids.iter().enumerate() {
            let compartment = id.compartment();
            let mut pool = Vec::new();
            for l in &loops {
                let c = l.centroid()?;
                // +x = patient left.
                let x_dir = match compartment.side {
                    Side::Left => T::one(),
                    Side::Right => -T::one(),
                };
                let mut pieces = clip_all(std::slice::from_ref(l), c, Vec2::new(x_dir, T::zero()))?;
                if let Some(frontal) = compartment.frontal {
                    // +y = ventral.
                    let y_dir = match frontal {
                        crate::protocol::Frontal::Ventral => T::one(),
                        crate::protocol::Frontal::Dorsal => -T::one(),
                    };
                    pieces = clip_all(&pieces, c, Vec2::new(T::zero(), y_dir))?;
                }
                pool.extend(pieces);
            }
            let Some(outline) = largest(pool) else {
                return Err(SliceError::ProtocolMeshMismatch(format!(
                    "central slice {} compartment {} produced no polygon",
                    slice.index,
                    slice.ids[k].compartment()
                )));
            };
            polygons.push(ReferencePolygon {
                name: id.canonical(),
                frame,
                outline,
                thickness_mm: slab,
                region: Region::Central(slice.index),
            });
        }
    }

    // --- Base region ------------------------------------------------------
    let base_lo = bb.max.z - base_offset;
    let base_hi = bb.max.z;
    sagittal_region(
        mesh,
        &protocol.base,
        base_lo,
        base_hi,
        Region::Base,
        &mut polygons,
    )?;

    // Reorder into protocol order (apex, central, base traversal).
    let order: Vec<String> = crate::protocol::fragment_ids(protocol)
        .into_iter()
        .map(|(id, _)| id.canonical())
        .collect();
    polygons.sort_by_key(|p| {
        order
            .iter()
            .position(|n| *n == p.name)
            .unwrap_or(usize::MAX)
    });

    Ok(ReferenceModel {
        case_id: protocol.case_id.clone(),
        polygons,
        source_extent: bb,
    })
}

/// Cut one apex/base region into its sagittal fragments.
///
/// The region between `z_lo` and `z_hi` is characterised by its transverse
/// section at the region's mid-z (the "whole-region section"): that
/// section's area centroid fixes the left/right (and ventral/dorsal) split
/// lines, and its bounding box fixes the lateral extent that is divided
/// into equal-width sagittal slabs per compartment (sequence 1 = most
/// medial). Each fragment is the mesh's sagittal section at the slab
/// mid-plane, clipped to the region's z-band and, when frontally split, to
/// the compartment's y half-plane.
fn sagittal_region<T: Real>(
    mesh: &TriMesh<T>,
    spec: &ApexBaseSpec,
    z_lo: T,
    z_hi: T,
    region: Region,
    out: &mut Vec<ReferencePolygon<T>>,
) -> Result<(), SliceError> {
    let label = region.label();
    let mid_z = (z_lo + z_hi) * real(0.5);
    let loops = match plane_section(mesh, &PlaneFrame::transverse(mid_z)) {
        Ok(l) => l,
        Err(SliceError::NoIntersection) => {
            return Err(SliceError::ProtocolMeshMismatch(format!(
                "{label} region section at z={mid_z} misses the mesh"
            )))
        }
        Err(e) => return Err(e),
    };
    let whole = largest(loops).ok_or_else(|| {
        SliceError::ProtocolMeshMismatch(format!("{label} region section is empty"))
    })?;
    let centroid = whole.centroid()?;
    let bb = whole.bounding_box();

    for (compartment, ids) in &spec.sections {
        let count = ids.len();
        // Lateral span of this side, from the split line outward.
        let (medial, lateral) = match compartment.side {
            Side::Left => (centroid.x, bb.max.x),
            Side::Right => (centroid.x, bb.min.x),
        };
        let step = (lateral - medial) / real(count as f64);
        let mut produced = 0usize;
        for (j, id) in ids.iter().enumerate() {
            let x_mid = medial + step * (real::<T>(j as f64) + real(0.5));
            let frame = PlaneFrame::sagittal(x_mid);
            let loops = match plane_section(mesh, &frame) {
                Ok(l) => l,
                Err(SliceError::NoIntersection) => continue,
                Err(e) => return Err(e),
            };
            // Frame coordinates are (u, v) = (y, z): clip to the z-band and,
            // for frontally split compartments, the y half-plane.
            let mut pieces = clip_all(
                &loops,
                Vec2::new(T::zero(), z_lo),
                Vec2::new(T::zero(), T::one()),
            )?;
            pieces = clip_all(
                &pieces,
                Vec2::new(T::zero(), z_hi),
                Vec2::new(T::zero(), -T::one()),
            )?;
            if let Some(frontal) = compartment.frontal {
                let y_dir = match frontal {
                    crate::protocol::Frontal::Ventral => T::one(),
                    crate::protocol::Frontal::Dorsal => -T::one(),
                };
                pieces = clip_all(
                    &pieces,
                    Vec2::new(centroid.y, T::zero()),
                    Vec2::new(y_dir, T::zero()),
                )?;
            }
            let Some(outline) = largest(pieces) else {
                continue; // this slab misses the region; tolerated per-fragment
            };
            produced += 1;
            out.push(ReferencePolygon {
                name: id.canonical(),
                frame,
                outline,
                thickness_mm: step.abs(),
                region,
            });
        }
        if produced == 0 {
            return Err(SliceError::ProtocolMeshMismatch(format!(
                "{label} compartment {compartment} produced no polygon"
            )));
        }
    }
    Ok(())
}
