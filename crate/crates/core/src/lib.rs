//! Reconstruction of 3D tumour volumes from annotated 2D histology slides.
//!
//! The library covers the full pipeline for prostatectomy specimens:
//!
//! 1. [`protocol`] — parse and validate the machine-readable sectioning
//!    protocol that records how the specimen was grossed.
//! 2. [`mesh`] + [`slicing`] — load or generate a 3D surface model and apply
//!    the protocol to it, producing named planar reference polygons.
//! 3. [`annotation`] — ingest slide annotations (tissue contour plus
//!    class-labelled tumour regions) from GeoJSON.
//! 4. [`registration`] — superimpose each slide contour onto its reference
//!    polygon with a rotation-restarted, rigid-plus-scale coherent point
//!    drift solver, scored by rasterized intersection-over-union.
//! 5. [`reconstruction`] — turn the registered annotations into volumetric
//!    meshes via convex hull, Gaussian splatter, or linear extrusion.
//!
//! All geometry is generic over the floating-point scalar (see
//! [`num::Real`]); the aliases below fix `f64` (and `f32` where useful) for
//! callers that do not need the generality. Units are millimetres
//! throughout. The world frame is +x = patient left, +y = ventral,
//! +z = base direction (apex at low z).

// Validation guards are written `!(x > eps)` rather than `x <= eps` so that
// NaN takes the rejection branch; the lint prefers the latter.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotation;
pub mod geom;
pub mod mesh;
pub mod num;
pub mod protocol;
pub mod reconstruction;
pub mod registration;
pub mod slicing;

pub use geom::GeomError;

/// `f64` aliases for the main geometric and pipeline types.
pub type Vec2_64 = geom::Vec2<f64>;
pub type Vec3_64 = geom::Vec3<f64>;
pub type Polygon64 = geom::Polygon2D<f64>;
pub type PlaneFrame64 = geom::PlaneFrame<f64>;
pub type Aabb2_64 = geom::Aabb2<f64>;
pub type Aabb3_64 = geom::Aabb3<f64>;
pub type AffineTransform64 = geom::AffineTransform3D<f64>;
pub type TriMesh64 = mesh::TriMesh<f64>;
pub type ReferencePolygon64 = slicing::ReferencePolygon<f64>;
pub type ReferenceModel64 = slicing::ReferenceModel<f64>;
pub type SlideAnnotations64 = annotation::SlideAnnotations<f64>;
pub type Similarity64 = registration::Similarity2D<f64>;
pub type RegistrationResult64 = registration::RegistrationResult<f64>;
pub type PlanarPolygon64 = registration::PlanarPolygon3D<f64>;
pub type ReconstructionMesh64 = reconstruction::ReconstructionMesh<f64>;

/// `f32` aliases for the core geometry types.
pub type Vec2_32 = geom::Vec2<f32>;
pub type Vec3_32 = geom::Vec3<f32>;
pub type Polygon32 = geom::Polygon2D<f32>;
pub type PlaneFrame32 = geom::PlaneFrame<f32>;
pub type TriMesh32 = mesh::TriMesh<f32>;
