//! Triangle meshes: representation, metrics, file interchange, procedural
//! generic model.

pub(crate) mod io;
mod shapes;
mod trimesh;

#[cfg(test)]
pub(crate) use trimesh::testutil;

pub use io::{load_mesh, write_obj, MeshFormat};
pub use shapes::{generic_prostate_model, uv_ellipsoid, DEFAULT_MODEL_TESSELLATION};
pub use trimesh::TriMesh;

/// Errors raised by mesh construction, IO, and metrics.
#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    /// Unparseable mesh file content.
    #[error("mesh format error at line {line}: {message}")]
    Format { line: usize, message: String },
    /// The mesh has no triangles (or no vertices where vertices are needed).
    #[error("mesh is empty")]
    EmptyMesh,
    /// Operation requires a closed (watertight, edge-manifold) mesh.
    #[error("mesh is not closed")]
    OpenMesh,
    /// A triangle references a vertex index outside the vertex list.
    #[error(
        "triangle {triangle} references vertex {index} out of range (vertex count {vertex_count})"
    )]
    InvalidIndex {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },
    /// Transform with non-invertible linear part applied to a mesh.
    #[error("transform is singular (determinant is zero)")]
    SingularTransform,
    /// Invalid argument to a mesh constructor.
    #[error("invalid argument: {0}")]
    Argument(String),
}
