//! Planar similarity transforms (rotation + isotropic scale + translation).

use crate::geom::{GeomError, Polygon2D, Vec2};
use crate::num::Real;

/// `p -> scale * R(rotation) * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity2D<T> {
    /// Rotation angle in radians, counter-clockwise.
    pub rotation: T,
    /// Isotropic scale, positive.
    pub scale: T,
    pub translation: Vec2<T>,
}

impl<T: Real> Similarity2D<T> {
    pub fn identity() -> Self {
        Self {
            rotation: T::zero(),
            scale: T::one(),
            translation: Vec2::new(T::zero(), T::zero()),
        }
    }

    pub fn new(rotation: T, scale: T, translation: Vec2<T>) -> Self {
        debug_assert!(scale > T::zero(), "similarity scale must be positive");
        Self {
            rotation,
            scale,
            translation,
        }
    }

    /// Pure rotation about an arbitrary pivot point.
    pub fn rotation_about(angle: T, pivot: Vec2<T>) -> Self {
        Self {
            rotation: angle,
            scale: T::one(),
            translation: pivot - pivot.rotated(angle),
        }
    }

    pub fn apply(&self, p: Vec2<T>) -> Vec2<T> {
        p.rotated(self.rotation) * self.scale + self.translation
    }

    /// Apply to every vertex of a polygon. Fails only if the image collapses
    /// below polygon validity tolerances.
    pub fn apply_polygon(&self, p: &Polygon2D<T>) -> Result<Polygon2D<T>, GeomError> {
        p.try_map(|q| self.apply(q))
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self {
            rotation: self.rotation + inner.rotation,
            scale: self.scale * inner.scale,
            translation: self.apply(inner.translation),
        }
    }

    pub fn inverse(&self) -> Self {
        let inv_scale = T::one() / self.scale;
        let back = -(self.translation.rotated(-self.rotation)) * inv_scale;
        Self {
            rotation: -self.rotation,
            scale: inv_scale,
            translation: back,
        }
    }
}

/// Coarse alignment of `moving` onto `fixed`: equalise bounding-box longest
/// sides and superpose area centroids, with no rotation.
pub fn prealign<T: Real>(
    moving: &Polygon2D<T>,
    fixed: &Polygon2D<T>,
) -> Result<Similarity2D<T>, GeomError> {
    let mb = moving.bounding_box();
    let fb = fixed.bounding_box();
    let mlong = mb.longest_side();
    if !(mlong > T::zero()) {
        return Err(GeomError::Degenerate(
            "moving polygon has zero extent".into(),
        ));
    }
    let scale = fb.longest_side() / mlong;
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(GeomError::Degenerate(
            "degenerate bounding boxes for prealignment".into(),
        ));
    }
    let cm = moving.centroid()?;
    let cf = fixed.centroid()?;
    Ok(Similarity2D {
        rotation: T::zero(),
        scale,
        translation: cf - cm * scale,
    })
}
