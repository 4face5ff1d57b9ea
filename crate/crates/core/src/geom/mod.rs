//! Geometric primitives: vectors, polygons, plane frames, transforms.

pub mod aabb;
pub mod plane;
pub mod polygon;
pub mod svd2;
pub mod transform;
pub mod vec;

pub use aabb::{Aabb2, Aabb3};
pub use plane::{PlaneFrame, PlaneFrameDto};
pub use polygon::Polygon2D;
pub use svd2::{svd2, Svd2};
pub use transform::AffineTransform3D;
pub use vec::{Mat3, Vec2, Vec3};

/// Errors raised by geometric primitives.
#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    /// The input geometry collapses below the documented tolerances
    /// (too few points, zero area, non-orthonormal basis, ...).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
}
