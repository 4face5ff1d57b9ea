//! Closed-form singular value decomposition of a 2x2 matrix.
//!
//! The decomposition is returned in the "signed" convention
//! `A = R(phi) * diag(s1, s2) * R(theta)^T` where both factors are proper
//! rotations and the sign of `s2` carries `sign(det A)`. This form feeds the
//! Procrustes step of the registration solver directly: the optimal rotation
//! restricted to proper rotations is `R(phi - theta)` and the associated
//! correlation sum is `s1 + s2` (the determinant-sign correction is exactly
//! the signedness of `s2`).

use crate::num::Real;

/// Result of [`svd2`]: `a = R(phi) * diag(s1, s2) * R(theta)^T`.
///
/// Invariants: `s1 >= |s2|`, `s1 >= 0`, `sign(s2) == sign(det a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd2<T> {
    pub phi: T,
    pub theta: T,
    pub s1: T,
    pub s2: T,
}

impl<T: Real> Svd2<T> {
    /// Angle of the proper rotation maximising `trace(A^T R)`.
    #[inline]
    pub fn procrustes_angle(&self) -> T {
        self.phi - self.theta
    }

    /// `trace(A^T R)` at the optimum, i.e. `s1 + s2` in the signed form.
    #[inline]
    pub fn procrustes_trace(&self) -> T {
        self.s1 + self.s2
    }
}

/// Decompose the row-major 2x2 matrix `[[a, b], [c, d]]`.
pub fn svd2<T: Real>(a: T, b: T, c: T, d: T) -> Svd2<T> {
    let half = T::of(0.5);
    let e = (a + d) * half;
    let f = (a - d) * half;
    let g = (c + b) * half;
    let h = (c - b) * half;

    let q = e.hypot(h);
    let r = f.hypot(g);
    let s1 = q + r;
    let s2 = q - r;

    // atan2(0, 0) = 0 keeps the degenerate cases (zero matrix, pure
    // similarity) on a valid branch of the decomposition.
    let a1 = g.atan2(f); // phi + theta
    let a2 = h.atan2(e); // phi - theta
    let phi = (a1 + a2) * half;
    let theta = (a1 - a2) * half;

    Svd2 { phi, theta, s1, s2 }
}
