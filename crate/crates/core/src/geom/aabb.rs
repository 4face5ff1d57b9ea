//! Axis-aligned bounding boxes in 2D and 3D.

use crate::geom::vec::{Vec2, Vec3};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb2<T> {
    pub min: Vec2<T>,
    pub max: Vec2<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb3<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb2<T> {
    pub fn from_points<I: IntoIterator<Item = Vec2<T>>>(points: I) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut min = first;
        let mut max = first;
        for p in iter {
            min = min.min(p);
            max = max.max(p);
        }
        Some(Self { min, max })
    }

    pub fn union(self, rhs: Self) -> Self {
        Self {
            min: self.min.min(rhs.min),
            max: self.max.max(rhs.max),
        }
    }

    pub fn extent(&self) -> Vec2<T> {
        self.max - self.min
    }

    pub fn longest_side(&self) -> T {
        let e = self.extent();
        e.x.max(e.y)
    }

    pub fn center(&self) -> Vec2<T> {
        (self.min + self.max) * T::of(0.5)
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn overlaps(&self, rhs: &Self) -> bool {
        self.min.x <= rhs.max.x
            && rhs.min.x <= self.max.x
            && self.min.y <= rhs.max.y
            && rhs.min.y <= self.max.y
    }
}

impl<T: Real> Aabb3<T> {
    pub fn from_points<I: IntoIterator<Item = Vec3<T>>>(points: I) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut min = first;
        let mut max = first;
        for p in iter {
            min = min.min(p);
            max = max.max(p);
        }
        Some(Self { min, max })
    }

    pub fn union(self, rhs: Self) -> Self {
        Self {
            min: self.min.min(rhs.min),
            max: self.max.max(rhs.max),
        }
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::of(0.5)
    }

    pub fn overlaps(&self, rhs: &Self) -> bool {
        self.min.x <= rhs.max.x
            && rhs.min.x <= self.max.x
            && self.min.y <= rhs.max.y
            && rhs.min.y <= self.max.y
            && self.min.z <= rhs.max.z
            && rhs.min.z <= self.max.z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_from_points() {
        let b = Aabb2::from_points([
            Vec2::new(1.0, 5.0),
            Vec2::new(-2.0, 3.0),
            Vec2::new(0.5, 7.0),
        ])
        .unwrap();
        assert_eq!(b.min, Vec2::new(-2.0, 3.0));
        assert_eq!(b.max, Vec2::new(1.0, 7.0));
        assert_eq!(b.longest_side(), 4.0);
        assert_eq!(b.center(), Vec2::new(-0.5, 5.0));
        assert!(Aabb2::<f64>::from_points([]).is_none());
    }

    #[test]
    fn union_and_overlap() {
        let a = Aabb3::from_points([Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0)]).unwrap();
        let b = Aabb3::from_points([Vec3::new(2.0, 0.0, 0.0), Vec3::new(3.0, 1.0, 1.0)]).unwrap();
        assert!(!a.overlaps(&b));
        let u = a.union(b);
        assert_eq!(u.extent(), Vec3::new(3.0, 1.0, 1.0));
        let c = Aabb3::from_points([Vec3::new(0.5, 0.5, 0.5), Vec3::new(2.5, 0.6, 0.6)]).unwrap();
        assert!(a.overlaps(&c) && b.overlaps(&c));
    }
}
