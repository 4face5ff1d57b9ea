//! Indexed triangle mesh and its metrics.

use std::collections::HashMap;

use crate::geom::{Aabb3, AffineTransform3D, Vec3};
use crate::mesh::MeshError;
use crate::num::{real, Real};

/// Area below which a triangle counts as degenerate when cleaning loaded
/// meshes (mm²).
pub(crate) const DEGENERATE_TRIANGLE_AREA: f64 = 1e-9;

/// Indexed triangle surface mesh in millimetres.
///
/// Triangles are counter-clockwise when viewed from outside (outward
/// normals).
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[u32; 3]>,
}

impl<T: Real> TriMesh<T> {
    /// Build a mesh, validating that all indices are in range.
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= vertices.len() {
                    return Err(MeshError::InvalidIndex {
                        triangle: t,
                        index: i,
                        vertex_count: vertices.len(),
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangle_vertices(t);
        (b - a).cross(c - a).norm() * real(0.5)
    }

    /// Remove triangles with area below `min_area` (mm²).
    pub fn drop_degenerate_triangles(&mut self, min_area: T) {
        let vertices = &self.vertices;
        self.triangles.retain(|tri| {
            let [a, b, c] = [
                vertices[tri[0] as usize],
                vertices[tri[1] as usize],
                vertices[tri[2] as usize],
            ];
            (b - a).cross(c - a).norm() * real::<T>(0.5) >= min_area
        });
    }

    /// True when every undirected edge is shared by exactly two triangles
    /// with opposite orientation (watertight, edge-manifold, consistently
    /// oriented).
    pub fn is_closed(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for tri in &self.triangles {
            let [a, b, c] = *tri;
            if a == b || b == c || c == a {
                return false;
            }
            for (s, e) in [(a, b), (b, c), (c, a)] {
                *directed.entry((s, e)).or_insert(0) += 1;
            }
        }
        directed
            .iter()
            .all(|(&(s, e), &n)| n == 1 && directed.get(&(e, s)) == Some(&1))
    }

    /// Signed enclosed volume (mm³) by the divergence theorem; positive for
    /// outward-oriented closed meshes.
    pub fn signed_volume(&self) -> Result<T, MeshError> {
        if !self.is_closed() {
            return Err(MeshError::OpenMesh);
        }
        let mut six_v = T::zero();
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_vertices(t);
            six_v += a.dot(b.cross(c));
        }
        Ok(six_v / real(6.0))
    }

    /// Componentwise min/max over all vertices.
    pub fn bounding_box(&self) -> Result<Aabb3<T>, MeshError> {
        Aabb3::from_points(self.vertices.iter().copied()).ok_or(MeshError::EmptyMesh)
    }

    /// Apply an affine transform; winding is flipped when the linear part is
    /// orientation-reversing so outward orientation is preserved.
    pub fn transformed(&self, t: &AffineTransform3D<T>) -> Result<Self, MeshError> {
        let det = t.determinant();
        if det == T::zero() || !det.is_finite() {
            return Err(MeshError::SingularTransform);
        }
        let vertices = self.vertices.iter().map(|&p| t.apply_point(p)).collect();
        let triangles = if det < T::zero() {
            self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect()
        } else {
            self.triangles.clone()
        };
        Ok(Self {
            vertices,
            triangles,
        })
    }

    /// Concatenate meshes into one (indices offset; no welding).
    pub fn concat<'a, I: IntoIterator<Item = &'a Self>>(meshes: I) -> Self
    where
        T: 'a,
    {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for m in meshes {
            let offset = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            triangles.extend(
                m.triangles
                    .iter()
                    .map(|&[a, b, c]| [a + offset, b + offset, c + offset]),
            );
        }
        Self {
            vertices,
            triangles,
        }
    }

    /// Merge vertices closer than `tolerance` (snap-to-grid quantization) and
    /// drop triangles that collapse. Used when importing triangle-soup
    /// formats.
    pub fn weld(&mut self, tolerance: T) {
        let quantum = if tolerance > T::zero() {
            tolerance
        } else {
            real(1e-12)
        };
        let mut representative: HashMap<(i64, i64, i64), u32> = HashMap::new();
        let mut remap = vec![0u32; self.vertices.len()];
        let mut new_vertices: Vec<Vec3<T>> = Vec::new();
        for (i, &p) in self.vertices.iter().enumerate() {
            let key = (
                (p.x / quantum).round().to_f64_lossy() as i64,
                (p.y / quantum).round().to_f64_lossy() as i64,
                (p.z / quantum).round().to_f64_lossy() as i64,
            );
            let idx = *representative.entry(key).or_insert_with(|| {
                new_vertices.push(p);
                (new_vertices.len() - 1) as u32
            });
            remap[i] = idx;
        }
        self.vertices = new_vertices;
        for tri in &mut self.triangles {
            for i in tri.iter_mut() {
                *i = remap[*i as usize];
            }
        }
        self.triangles
            .retain(|&[a, b, c]| a != b && b != c && c != a);
    }
}
