//! Gaussian blob reconstruction: one axis-aligned ellipsoid per roi, sized
//! from the per-axis spread of its registered points.

use std::collections::BTreeMap;

use super::{provenance_id, ReconstructionError, ReconstructionMesh, ReconstructionMethod};
use crate::geom::{AffineTransform3D, GeomError, Vec3};
use crate::mesh::{uv_ellipsoid, TriMesh};
use crate::num::{real, Real};
use crate::registration::RegistrationResult;

/// Parameters of the Gaussian blob reconstruction.
#[derive(Debug, Clone)]
pub struct SplatterConfig<T: Real> {
    /// Ellipsoid semi-axis per world axis = `radius_factor` x standard
    /// deviation of the roi points along that axis.
    pub radius_factor: T,
    /// Floor for the standard deviation along the slab normal, where a
    /// planar contour has no spread of its own. `None` falls back to half
    /// the source slab thickness.
    pub min_normal_sigma_mm: Option<T>,
    /// Ellipsoid tessellation (stacks, slices).
    pub tessellation: (usize, usize),
}

impl<T: Real> Default for SplatterConfig<T> {
    fn default() -> Self {
        Self {
            radius_factor: real(2.0),
            min_normal_sigma_mm: None,
            tessellation: (16, 32),
        }
    }
}

fn degenerate(msg: impl Into<String>) -> ReconstructionError {
    ReconstructionError::Degenerate(GeomError::Degenerate(msg.into()))
}

/// Replace every roi with an axis-aligned ellipsoid centred on its point
/// mean, semi-axes `radius_factor` x the population standard deviation per
/// world axis. The deviation along the slab normal (the dominant axis of the
/// slab frame's normal) is floored so planar contours still gain thickness.
/// Blobs are grouped per class label, ordered by class name.
pub fn gaussian_splatter<T: Real>(
    results: &[RegistrationResult<T>],
    config: &SplatterConfig<T>,
) -> Result<Vec<ReconstructionMesh<T>>, ReconstructionError> {
    if !(config.radius_factor > T::zero()) {
        return Err(degenerate("splatter radius factor must be positive"));
    }
    let (stacks, slices) = config.tessellation;
    let mut classes: BTreeMap<String, (Vec<TriMesh<T>>, Vec<String>)> = BTreeMap::new();
    for r in results {
        for (k, (class, poly)) in r.registered_rois.iter().enumerate() {
            let pts = poly.points_3d();
            let n = real::<T>(pts.len() as f64);
            let mut mean = Vec3::new(T::zero(), T::zero(), T::zero());
            for &p in &pts {
                mean += p;
            }
            mean = mean / n;
            let mut var = [T::zero(); 3];
            for &p in &pts {
                let d = p - mean;
                var[0] += d.x * d.x;
                var[1] += d.y * d.y;
                var[2] += d.z * d.z;
            }
            let mut sigma = var.map(|v| (v / n).sqrt());
            let nrm = poly.frame.normal();
            let weights = [nrm.x.abs(), nrm.y.abs(), nrm.z.abs()];
            let axis = if weights[0] >= weights[1] && weights[0] >= weights[2] {
                0
            } else if weights[1] >= weights[2] {
                1
            } else {
                2
            };
            let floor = config
                .min_normal_sigma_mm
                .unwrap_or(r.thickness_mm * real(0.5));
            if !(floor > T::zero()) {
                return Err(degenerate(format!(
                    "normal-axis deviation floor must be positive, got {floor}"
                )));
            }
            sigma[axis] = sigma[axis].max(floor);
            if sigma.iter().any(|&s| !(s > T::zero())) {
                return Err(degenerate(format!(
                    "roi '{}' of slide '{}' has no in-plane spread",
                    class, r.slide_name
                )));
            }
            let semi = Vec3::new(
                sigma[0] * config.radius_factor,
                sigma[1] * config.radius_factor,
                sigma[2] * config.radius_factor,
            );
            let blob = uv_ellipsoid(semi, stacks, slices)?
                .transformed(&AffineTransform3D::translation_of(mean))?;
            let entry = classes.entry(class.clone()).or_default();
            entry.0.push(blob);
            entry.1.push(provenance_id(r, k, class));
        }
    }
    if classes.is_empty() {
        return Err(ReconstructionError::InsufficientPoints(
            "no roi points to splatter".into(),
        ));
    }
    Ok(classes
        .into_iter()
        .map(|(class_label, (meshes, provenance))| ReconstructionMesh {
            class_label,
            mesh: TriMesh::concat(meshes.iter()),
            method: ReconstructionMethod::GaussianSplatter,
            provenance,
        })
        .collect())
}
