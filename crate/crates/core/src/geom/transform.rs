//! Affine transforms of 3D space.

use crate::geom::vec::{Mat3, Vec3};
use crate::num::Real;

/// Affine map `p ↦ linear·p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform3D<T> {
    pub linear: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> AffineTransform3D<T> {
    pub fn identity() -> Self {
        Self {
            linear: Mat3::identity(),
            translation: Vec3::zero(),
        }
    }

    pub fn from_parts(linear: Mat3<T>, translation: Vec3<T>) -> Self {
        Self {
            linear,
            translation,
        }
    }

    /// Rotation by the given angles (radians) about the fixed world axes,
    /// applied in order x, then y, then z.
    pub fn rotation_xyz(rx: T, ry: T, rz: T) -> Self {
        let m = Mat3::rotation_z(rz)
            .mul_mat(&Mat3::rotation_y(ry))
            .mul_mat(&Mat3::rotation_x(rx));
        Self::from_parts(m, Vec3::zero())
    }

    pub fn uniform_scale(s: T) -> Self {
        Self::from_parts(Mat3::scaling(s), Vec3::zero())
    }

    pub fn scale_xyz(sx: T, sy: T, sz: T) -> Self {
        let z = T::zero();
        Self::from_parts(
            Mat3::from_rows([sx, z, z], [z, sy, z], [z, z, sz]),
            Vec3::zero(),
        )
    }

    pub fn translation_of(t: Vec3<T>) -> Self {
        Self::from_parts(Mat3::identity(), t)
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self {
            linear: self.linear.mul_mat(&inner.linear),
            translation: self.linear.mul_vec(inner.translation) + self.translation,
        }
    }

    pub fn apply_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.linear.mul_vec(p) + self.translation
    }

    pub fn apply_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.linear.mul_vec(v)
    }

    pub fn determinant(&self) -> T {
        self.linear.determinant()
    }

    pub fn inverse(&self) -> Option<Self> {
        let inv = self.linear.inverse()?;
        Some(Self {
            linear: inv,
            translation: -inv.mul_vec(self.translation),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_and_apply() {
        let a = AffineTransform3D::translation_of(Vec3::new(1.0, 0.0, 0.0));
        let b = AffineTransform3D::uniform_scale(2.0);
        // (a ∘ b)(p) = 2p + (1,0,0)
        let ab = a.compose(&b);
        assert_eq!(
            ab.apply_point(Vec3::new(1.0, 1.0, 1.0)),
            Vec3::new(3.0, 2.0, 2.0)
        );
        // (b ∘ a)(p) = 2(p + (1,0,0))
        let ba = b.compose(&a);
        assert_eq!(
            ba.apply_point(Vec3::new(1.0, 1.0, 1.0)),
            Vec3::new(4.0, 2.0, 2.0)
        );
    }

    #[test]
    fn inverse_undoes() {
        let t = AffineTransform3D::rotation_xyz(0.3, -0.7, 1.1)
            .compose(&AffineTransform3D::uniform_scale(1.7))
            .compose(&AffineTransform3D::translation_of(Vec3::new(
                4.0, -2.0, 9.0,
            )));
        let inv = t.inverse().unwrap();
        let p = Vec3::new(0.2, 5.0, -3.0);
        let back = inv.apply_point(t.apply_point(p));
        assert_relative_eq!(back.x, p.x, epsilon = 1e-12);
        assert_relative_eq!(back.y, p.y, epsilon = 1e-12);
        assert_relative_eq!(back.z, p.z, epsilon = 1e-12);
    }

    #[test]
    fn euler_order_is_x_then_y_then_z() {
        let rx = 0.4;
        let rz = -0.9;
        let t = AffineTransform3D::rotation_xyz(rx, 0.0, rz);
        let manual = Mat3::rotation_z(rz).mul_mat(&Mat3::rotation_x(rx));
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(t.linear.rows[i][j], manual.rows[i][j]);
            }
        }
    }

    #[test]
    fn singular_transform_has_no_inverse() {
        let t = AffineTransform3D::scale_xyz(1.0, 0.0, 1.0);
        assert!(t.inverse().is_none());
        assert_eq!(t.determinant(), 0.0);
    }
}
