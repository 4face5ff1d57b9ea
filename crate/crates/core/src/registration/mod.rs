//! Registration of 2D slide annotations onto reference polygons.

mod cpd;
mod io;
mod iou;
mod similarity;
mod upsample;

pub use cpd::{cpd_similarity, CpdOutcome};
pub use io::{export_registered_obj, parse_registered, serialize_registered, ObjGrouping};
pub use iou::iou;
pub use similarity::{prealign, Similarity2D};
pub use upsample::upsample_polygon;

use crate::annotation::SlideAnnotations;
use crate::geom::{GeomError, PlaneFrame, Polygon2D, Vec3};
use crate::num::{real, Real};
use crate::slicing::ReferencePolygon;

/// Errors raised during registration.
#[derive(Debug, thiserror::Error)]
pub enum RegistrationError {
    /// The EM iteration produced a non-finite variance.
    #[error("registration did not converge: {0}")]
    NonConvergence(String),
    /// Degenerate geometry or configuration.
    #[error(transparent)]
    Degenerate(#[from] GeomError),
    /// No rotation restart produced a scorable candidate.
    #[error("no registration candidate: {0}")]
    NoCandidate(String),
    /// Unparseable registered-slides document.
    #[error("registered slides format error: {0}")]
    Format(String),
}

/// Tuning for registration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpdConfig<T> {
    /// Contours are upsampled to at least this many points before EM.
    pub target_points: usize,
    /// Uniform outlier mass in `[0, 1)`.
    pub outlier_weight: T,
    /// EM iteration cap per restart.
    pub max_iterations: usize,
    /// Relative variance change treated as converged.
    pub sigma_tolerance: T,
    /// Number of coarse initial rotations tried.
    pub rotation_restarts: usize,
    /// Angular spacing of the restarts, degrees.
    pub restart_step_deg: T,
    /// Raster resolution for candidate scoring.
    pub iou_resolution: usize,
    /// Estimate isotropic scale during EM (otherwise only the prealignment
    /// scales the contour and EM is purely rigid).
    pub estimate_scale: bool,
}

impl<T: Real> Default for CpdConfig<T> {
    fn default() -> Self {
        Self {
            target_points: 500,
            outlier_weight: T::zero(),
            max_iterations: 150,
            sigma_tolerance: real(1e-8),
            rotation_restarts: 8,
            restart_step_deg: real(45.0),
            iou_resolution: 512,
            estimate_scale: true,
        }
    }
}

/// A 2D polygon embedded in a 3D plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPolygon3D<T> {
    pub frame: PlaneFrame<T>,
    pub outline: Polygon2D<T>,
}

impl<T: Real> PlanarPolygon3D<T> {
    /// Outline vertices in world coordinates.
    pub fn points_3d(&self) -> Vec<Vec3<T>> {
        self.outline
            .points()
            .iter()
            .map(|&p| self.frame.lift(p))
            .collect()
    }
}

/// Outcome of registering one slide onto its reference polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult<T> {
    pub slide_name: String,
    /// Reference polygon the slide was registered onto.
    pub polygon_name: String,
    pub case_id: String,
    /// Winning similarity, mapping original slide coordinates into the
    /// reference polygon's plane coordinates (prealignment included).
    pub transform: Similarity2D<T>,
    /// Raster intersection-over-union of the registered (upsampled) contour
    /// against the reference outline.
    pub iou: T,
    /// Initial rotation of the winning restart, degrees.
    pub restart_angle_deg: T,
    /// EM iterations used by the winning restart.
    pub iterations_used: usize,
    /// Slide outline after the winning transform, in the reference plane.
    pub registered_contour: PlanarPolygon3D<T>,
    /// Classified rois after the winning transform, in document order.
    pub registered_rois: Vec<(String, PlanarPolygon3D<T>)>,
    /// Slab thickness inherited from the reference polygon (mm).
    pub thickness_mm: T,
}

/// Register a slide's contour onto a reference polygon and carry its rois
/// along.
///
/// Both outlines are upsampled to `config.target_points`; the moving contour
/// is prealigned (bounding-box scale, centroid superposition), then EM runs
/// once per coarse rotation restart (`k * restart_step_deg` about the
/// reference centroid, k = 0, 1, ...). Candidates are scored by rasterized
/// intersection-over-union against the reference outline; the best score
/// wins, ties resolved toward the smallest restart angle. The winning
/// transform is applied to the *original* contour and rois, which are
/// lifted into the reference polygon's plane.
pub fn register_slide<T: Real>(
    slide: &SlideAnnotations<T>,
    reference: &ReferencePolygon<T>,
    config: &CpdConfig<T>,
    case_id: &str,
) -> Result<RegistrationResult<T>, RegistrationError> {
    let fixed_up = upsample_polygon(&reference.outline, config.target_points);
    let moving_up = upsample_polygon(&slide.contour, config.target_points);
    let pre = prealign(&moving_up, &fixed_up)?;
    let pivot = fixed_up.centroid()?;
    let fixed_pts = fixed_up.points();
    let moving_pts = moving_up.points();

    struct Candidate<T> {
        transform: Similarity2D<T>,
        iou: T,
        restart_deg: T,
        iterations: usize,
    }
    let mut best: Option<Candidate<T>> = None;
    let mut failures: Vec<String> = Vec::new();
    for k in 0..config.rotation_restarts {
        let restart_deg = config.restart_step_deg * real(k as f64);
        let spin = Similarity2D::rotation_about(restart_deg.to_radians(), pivot);
        let init = spin.compose(&pre);
        let outcome = match cpd_similarity(fixed_pts, moving_pts, config, &init) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("restart {restart_deg}: {e}"));
                continue;
            }
        };
        let registered = match outcome.transform.apply_polygon(&moving_up) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("restart {restart_deg}: image collapsed: {e}"));
                continue;
            }
        };
        let score = match iou(&registered, &reference.outline, config.iou_resolution) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("restart {restart_deg}: scoring failed: {e}"));
                continue;
            }
        };
        let better = match &best {
            None => true,
            Some(b) => score > b.iou, // ties keep the earlier (smaller) angle
        };
        if better {
            best = Some(Candidate {
                transform: outcome.transform,
                iou: score,
                restart_deg,
                iterations: outcome.iterations,
            });
        }
    }
    let Some(winner) = best else {
        return Err(RegistrationError::NoCandidate(if failures.is_empty() {
            "no rotation restarts were attempted".into()
        } else {
            failures.join("; ")
        }));
    };

    let registered_contour = PlanarPolygon3D {
        frame: reference.frame,
        outline: winner.transform.apply_polygon(&slide.contour)?,
    };
    let mut registered_rois = Vec::with_capacity(slide.rois.len());
    for (class, roi) in &slide.rois {
        registered_rois.push((
            class.clone(),
            PlanarPolygon3D {
                frame: reference.frame,
                outline: winner.transform.apply_polygon(roi)?,
            },
        ));
    }
    Ok(RegistrationResult {
        slide_name: slide.slide_name.clone(),
        polygon_name: reference.name.clone(),
        case_id: case_id.to_string(),
        transform: winner.transform,
        iou: winner.iou,
        restart_angle_deg: winner.restart_deg,
        iterations_used: winner.iterations,
        registered_contour,
        registered_rois,
        thickness_mm: reference.thickness_mm,
    })
}
