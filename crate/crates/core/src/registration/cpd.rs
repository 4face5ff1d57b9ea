//! Probabilistic point-set registration: a rigid-plus-scale variant of
//! coherent point drift. The moving set is modelled as a Gaussian mixture
//! whose components drift under one shared similarity transform; EM
//! alternates soft correspondences (E-step) with a closed-form similarity
//! fit and variance update (M-step).

use super::{CpdConfig, RegistrationError, Similarity2D};
use crate::geom::{svd2, GeomError, Vec2};
use crate::num::{real, Real};

/// Variance floor (mm^2): once the mixture variance falls this low the sets
/// coincide to machine precision and iteration stops.
const SIGMA2_FLOOR: f64 = 1e-12;
/// Fraction of the all-pairs mean squared distance used as the initial
/// variance. The full all-pairs value is so hot that the first E-step's
/// correspondences are nearly uniform, which snaps every rotation restart to
/// the same moment-aligned pose; a tighter start keeps each restart inside
/// its own rotational basin while still reaching across realistic jitter.
const INIT_VARIANCE_FRACTION: f64 = 0.1;
/// Gaussian terms with squared distance beyond `EXP_CUTOFF * 2 sigma^2` are
/// treated as zero (exp(-45) ~ 3e-20, far below accumulation noise).
const EXP_CUTOFF: f64 = 45.0;

/// Result of one EM run.
#[derive(Debug, Clone, Copy)]
pub struct CpdOutcome<T> {
    /// Maps the original moving points onto the fixed set (the initial
    /// transform is folded in).
    pub transform: Similarity2D<T>,
    /// EM iterations actually performed.
    pub iterations: usize,
    /// Final mixture variance (mm^2).
    pub sigma2: T,
    /// False when the iteration cap was reached before the variance settled.
    pub converged: bool,
}

fn degenerate(msg: impl Into<String>) -> RegistrationError {
    RegistrationError::Degenerate(GeomError::Degenerate(msg.into()))
}

/// Register `moving` onto `fixed` with a similarity transform, starting
/// from `init`.
///
/// The E-step computes soft correspondences under an isotropic Gaussian of
/// variance sigma^2 with a uniform outlier component of mass
/// `config.outlier_weight`; the M-step fits rotation (via a closed-form
/// 2x2 singular value decomposition of the weighted cross-covariance),
/// optionally isotropic scale, and translation, then re-estimates sigma^2.
/// sigma^2 starts at a fixed fraction of the mean squared distance between
/// the sets after `init`, so the search stays local to the initial pose
/// rather than collapsing every start onto one moment-aligned solution.
/// Convergence is a relative sigma^2 change below
/// `config.sigma_tolerance`; hitting `config.max_iterations` first is
/// reported via [`CpdOutcome::converged`], not an error. A non-finite
/// variance is a [`RegistrationError::NonConvergence`].
pub fn cpd_similarity<T: Real>(
    fixed: &[Vec2<T>],
    moving: &[Vec2<T>],
    config: &CpdConfig<T>,
    init: &Similarity2D<T>,
) -> Result<CpdOutcome<T>, RegistrationError> {
    let n = fixed.len();
    let m = moving.len();
    if n < 3 || m < 3 {
        return Err(degenerate(format!(
            "point sets too small to register ({n} fixed, {m} moving)"
        )));
    }
    let w = config.outlier_weight;
    if !(w >= T::zero() && w < T::one()) {
        return Err(degenerate("outlier weight must lie in [0, 1)"));
    }

    // Bake the initial transform into the moving set; EM then estimates a
    // similarity on top of it and the two are composed at the end.
    let y0: Vec<Vec2<T>> = moving.iter().map(|&p| init.apply(p)).collect();
    let mut ty = y0.clone();

    // Initial variance: a fraction of the mean squared distance over all
    // pairs, per dimension (the sum decomposes as
    // Sum_{n,m} |x - y|^2 = M sum|x|^2 + N sum|y|^2 - 2 sum(x) . sum(y)).
    let (mut sx, mut sy) = (
        Vec2::new(T::zero(), T::zero()),
        Vec2::new(T::zero(), T::zero()),
    );
    let (mut sxx, mut syy) = (T::zero(), T::zero());
    for &x in fixed {
        sx += x;
        sxx += x.dot(x);
    }
    for &y in &ty {
        sy += y;
        syy += y.dot(y);
    }
    let nf = real::<T>(n as f64);
    let mf = real::<T>(m as f64);
    let two = real::<T>(2.0);
    let mut sigma2 = (mf * sxx + nf * syy - two * sx.dot(sy)) / (two * nf * mf)
        * real::<T>(INIT_VARIANCE_FRACTION);
    if !sigma2.is_finite() {
        return Err(RegistrationError::NonConvergence(
            "initial variance is not finite".into(),
        ));
    }
    let floor = real::<T>(SIGMA2_FLOOR);
    let mut cur = Similarity2D::identity();
    let mut iterations = 0usize;
    let mut converged = sigma2 <= floor; // already coincident
    let mut row = vec![T::zero(); m];
    let cutoff = real::<T>(EXP_CUTOFF);

    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let two_s2 = two * sigma2;
        let outlier_term = if w > T::zero() {
            two * T::PI() * sigma2 * w * mf / ((T::one() - w) * nf)
        } else {
            T::zero()
        };
        let reach = cutoff * two_s2;

        // Accumulated raw moments of the soft-correspondence weights.
        let mut s1 = T::zero();
        let mut sum_x = Vec2::new(T::zero(), T::zero());
        let mut sum_y = Vec2::new(T::zero(), T::zero());
        let (mut axx, mut axy, mut ayx, mut ayy) = (T::zero(), T::zero(), T::zero(), T::zero());
        let mut sq_x = T::zero();
        let mut sq_y = T::zero();

        for &x in fixed {
            let mut den = outlier_term;
            for (k, &t) in ty.iter().enumerate() {
                let d = x - t;
                let d2 = d.dot(d);
                if d2 < reach {
                    let e = (-d2 / two_s2).exp();
                    row[k] = e;
                    den += e;
                } else {
                    row[k] = T::zero();
                }
            }
            if !(den > T::zero()) {
                continue; // no mixture component reaches this point
            }
            let inv = T::one() / den;
            for (k, &e) in row.iter().enumerate() {
                if e == T::zero() {
                    continue;
                }
                let p = e * inv;
                let y = y0[k];
                s1 += p;
                sum_x += x * p;
                sum_y += y * p;
                axx += p * x.x * y.x;
                axy += p * x.x * y.y;
                ayx += p * x.y * y.x;
                ayy += p * x.y * y.y;
                sq_x += p * x.dot(x);
                sq_y += p * y.dot(y);
            }
        }

        if !(s1 > T::zero()) {
            return Err(RegistrationError::NonConvergence(
                "correspondence mass vanished".into(),
            ));
        }

        // Weighted centroids and centered second moments.
        let mu_x = sum_x / s1;
        let mu_y = sum_y / s1;
        let a = axx - mu_x.x * sum_y.x;
        let b = axy - mu_x.x * sum_y.y;
        let c = ayx - mu_x.y * sum_y.x;
        let d = ayy - mu_x.y * sum_y.y;
        let var_x = sq_x - sum_x.dot(sum_x) / s1;
        let var_y = sq_y - sum_y.dot(sum_y) / s1;

        let svd = svd2(a, b, c, d);
        let theta = svd.procrustes_angle();
        let trace = svd.procrustes_trace();
        let scale = if config.estimate_scale {
            let s = trace / var_y;
            if !(s > T::zero()) || !s.is_finite() {
                return Err(degenerate("scale estimate collapsed"));
            }
            s
        } else {
            T::one()
        };
        let translation = mu_x - mu_y.rotated(theta) * scale;
        cur = Similarity2D {
            rotation: theta,
            scale,
            translation,
        };
        for (t, &y) in ty.iter_mut().zip(y0.iter()) {
            *t = cur.apply(y);
        }

        let residual = var_x - two * scale * trace + scale * scale * var_y;
        let new_sigma2 = (residual / (two * s1)).max(T::zero());
        if !new_sigma2.is_finite() {
            return Err(RegistrationError::NonConvergence(format!(
                "variance became non-finite after {iterations} iterations"
            )));
        }
        let denom = sigma2.max(real(1e-300));
        if new_sigma2 <= floor || (sigma2 - new_sigma2).abs() / denom < config.sigma_tolerance {
            converged = true;
        }
        sigma2 = new_sigma2;
    }

    Ok(CpdOutcome {
        transform: cur.compose(init),
        iterations,
        sigma2,
        converged,
    })
}
