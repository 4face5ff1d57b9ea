//! Volumetric reconstruction from registered slide annotations.

mod extrude;
mod hull;
mod splatter;

pub use extrude::{ear_clip, linear_extrusion};
pub use hull::{convex_hull, convex_hull_points};
pub use splatter::{gaussian_splatter, SplatterConfig};

use serde_json::{json, Map, Value};

use crate::geom::GeomError;
use crate::mesh::{MeshError, TriMesh};
use crate::num::Real;
use crate::registration::{PlanarPolygon3D, RegistrationResult, Similarity2D};
use crate::slicing::ReferenceModel;

/// Errors raised during reconstruction.
#[derive(Debug, thiserror::Error)]
pub enum ReconstructionError {
    /// Not enough distinct points to span the requested solid.
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),
    /// A roi outline self-intersects and cannot be triangulated.
    #[error("self-intersecting outline: {0}")]
    SelfIntersection(String),
    /// A slide id does not name any reference polygon.
    #[error("no reference polygon named {name:?}")]
    UnknownPolygon { name: String },
    /// Degenerate geometry.
    #[error(transparent)]
    Degenerate(#[from] GeomError),
    /// Underlying mesh failure.
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Reconstruction algorithm that produced a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionMethod {
    ConvexHull,
    GaussianSplatter,
    LinearExtrusion,
}

impl ReconstructionMethod {
    /// Short label used in file names and summaries.
    pub fn label(&self) -> &'static str {
        match self {
            Self::ConvexHull => "hull",
            Self::GaussianSplatter => "splatter",
            Self::LinearExtrusion => "extrusion",
        }
    }
}

/// One reconstructed volume.
#[derive(Debug, Clone)]
pub struct ReconstructionMesh<T> {
    /// Annotation class this volume represents ("ALL" for the hull, which
    /// pools every class).
    pub class_label: String,
    pub mesh: TriMesh<T>,
    pub method: ReconstructionMethod,
    /// Source annotation identifiers (`<slide>:<roi ordinal>:<class>`).
    pub provenance: Vec<String>,
}

/// Provenance identifier for one roi of one result.
pub(crate) fn provenance_id<T: Real>(
    r: &RegistrationResult<T>,
    roi_index: usize,
    class: &str,
) -> String {
    format!("{}:{}:{}", r.slide_name, roi_index, class)
}

/// Synthesise registration results that mark whole reference polygons.
///
/// For each id the polygon's own outline becomes both the registered contour
/// and a single roi labelled `class_label`, with the identity transform and
/// a perfect score. Lets reconstruction run on cases where only slide-level
/// positivity is known (no drawn annotations).
pub fn mark_slides<T: Real>(
    model: &ReferenceModel<T>,
    slide_ids: &[String],
    class_label: &str,
) -> Result<Vec<RegistrationResult<T>>, ReconstructionError> {
    slide_ids
        .iter()
        .map(|id| {
            let p = model
                .find(id)
                .ok_or_else(|| ReconstructionError::UnknownPolygon { name: id.clone() })?;
            let planar = PlanarPolygon3D {
                frame: p.frame,
                outline: p.outline.clone(),
            };
            Ok(RegistrationResult {
                slide_name: p.name.clone(),
                polygon_name: p.name.clone(),
                case_id: model.case_id.clone(),
                transform: Similarity2D::identity(),
                iou: T::one(),
                restart_angle_deg: T::zero(),
                iterations_used: 0,
                registered_contour: planar.clone(),
                registered_rois: vec![(class_label.to_string(), planar)],
                thickness_mm: p.thickness_mm,
            })
        })
        .collect()
}

/// Summary JSON for reconstructed volumes: per mesh the class, method,
/// volume, size counts and provenance. Deterministic output.
pub fn serialize_reconstruction_summary<T: Real>(
    meshes: &[ReconstructionMesh<T>],
) -> Result<String, ReconstructionError> {
    let mut entries: Vec<Value> = Vec::with_capacity(meshes.len());
    for m in meshes {
        let volume = m.mesh.signed_volume()?;
        let mut obj = Map::new();
        obj.insert("class_label".into(), Value::String(m.class_label.clone()));
        obj.insert("method".into(), Value::String(m.method.label().into()));
        obj.insert(
            "provenance".into(),
            Value::Array(m.provenance.iter().map(|p| json!(p)).collect()),
        );
        obj.insert("triangle_count".into(), json!(m.mesh.triangle_count()));
        obj.insert("vertex_count".into(), json!(m.mesh.vertex_count()));
        obj.insert("volume_mm3".into(), json!(volume.to_f64_lossy()));
        entries.push(Value::Object(obj));
    }
    let mut text =
        serde_json::to_string_pretty(&Value::Array(entries)).expect("summary serializes");
    text.push('\n');
    Ok(text)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

/// OBJ documents for reconstructed volumes as `(filename, contents)` pairs
/// named `<case_id>_<method>_<class_label>.obj`.
pub fn export_reconstruction_obj<T: Real>(
    meshes: &[ReconstructionMesh<T>],
    case_id: &str,
) -> Vec<(String, String)> {
    meshes
        .iter()
        .map(|m| {
            (
                format!(
                    "{}_{}_{}.obj",
                    case_id,
                    m.method.label(),
                    sanitize(&m.class_label)
                ),
                crate::mesh::write_obj(&m.mesh),
            )
        })
        .collect()
}
