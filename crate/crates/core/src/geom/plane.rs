//! Planar coordinate frames embedded in 3D.

use serde::{Deserialize, Serialize};

use crate::geom::vec::{Vec2, Vec3};
use crate::geom::GeomError;
use crate::num::{real, Real};

/// An oriented plane with an in-plane orthonormal basis.
///
/// `project` maps world points into (u, v) plane coordinates; `lift` is its
/// right inverse for points on the plane. The plane normal is `u × v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame<T> {
    origin: Vec3<T>,
    u: Vec3<T>,
    v: Vec3<T>,
}

impl<T: Real> PlaneFrame<T> {
    /// Validated constructor: `u` and `v` must be unit length and mutually
    /// orthogonal (tolerance 1e-12, relaxed to a few ulps for narrow scalars).
    pub fn new(origin: Vec3<T>, u: Vec3<T>, v: Vec3<T>) -> Result<Self, GeomError> {
        let tol = real::<T>(1e-12).max(T::epsilon() * real(16.0));
        if (u.norm() - T::one()).abs() > tol || (v.norm() - T::one()).abs() > tol {
            return Err(GeomError::Degenerate(
                "plane frame basis vectors must be unit length".into(),
            ));
        }
        if u.dot(v).abs() > tol {
            return Err(GeomError::Degenerate(
                "plane frame basis vectors must be orthogonal".into(),
            ));
        }
        Ok(Self { origin, u, v })
    }

    /// Transverse frame: plane z = `z`, u = +x, v = +y, normal = +z.
    pub fn transverse(z: T) -> Self {
        Self {
            origin: Vec3::new(T::zero(), T::zero(), z),
            u: Vec3::new(T::one(), T::zero(), T::zero()),
            v: Vec3::new(T::zero(), T::one(), T::zero()),
        }
    }

    /// Sagittal frame: plane x = `x`, u = +y, v = +z, normal = +x.
    pub fn sagittal(x: T) -> Self {
        Self {
            origin: Vec3::new(x, T::zero(), T::zero()),
            u: Vec3::new(T::zero(), T::one(), T::zero()),
            v: Vec3::new(T::zero(), T::zero(), T::one()),
        }
    }

    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }

    pub fn u(&self) -> Vec3<T> {
        self.u
    }

    pub fn v(&self) -> Vec3<T> {
        self.v
    }

    pub fn normal(&self) -> Vec3<T> {
        self.u.cross(self.v)
    }

    /// World point → in-plane (u, v) coordinates.
    pub fn project(&self, p: Vec3<T>) -> Vec2<T> {
        let d = p - self.origin;
        Vec2::new(d.dot(self.u), d.dot(self.v))
    }

    /// In-plane coordinates → world point on the plane.
    pub fn lift(&self, q: Vec2<T>) -> Vec3<T> {
        self.origin + self.u * q.x + self.v * q.y
    }

    /// Signed distance of a world point from the plane (along the normal).
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        (p - self.origin).dot(self.normal())
    }
}

/// Serialization shadow of [`PlaneFrame`] in fixed `f64` precision.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneFrameDto {
    pub origin: [f64; 3],
    pub u: [f64; 3],
    pub v: [f64; 3],
}

impl<T: Real> From<&PlaneFrame<T>> for PlaneFrameDto {
    fn from(f: &PlaneFrame<T>) -> Self {
        let v3 = |v: Vec3<T>| [v.x.to_f64_lossy(), v.y.to_f64_lossy(), v.z.to_f64_lossy()];
        Self {
            origin: v3(f.origin),
            u: v3(f.u),
            v: v3(f.v),
        }
    }
}

impl PlaneFrameDto {
    pub fn to_frame<T: Real>(&self) -> Result<PlaneFrame<T>, GeomError> {
        let v3 = |a: [f64; 3]| Vec3::new(T::of(a[0]), T::of(a[1]), T::of(a[2]));
        PlaneFrame::new(v3(self.origin), v3(self.u), v3(self.v))
    }
}
