//! Deterministic geometric kernels and the point/mesh container types.

mod distance;
mod icosphere;
mod knn;
mod sampling;
mod vec3;

pub use distance::{point_segment_distance, point_triangle_distance};
pub use icosphere::{icosphere, MAX_SUBDIVISIONS};
pub use knn::knn;
pub use sampling::{sample_mesh_surface, sample_sphere};
pub use vec3::Vec3;

use crate::error::{Error, Result};

/// An unordered set of 3D points stored in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point cloud is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points })
    }

    /// Builds a cloud from a row-major `n x 3` buffer.
    pub fn from_flat(data: &[f64]) -> Result<Self> {
        if !data.len().is_multiple_of(3) {
            return Err(Error::Shape(format!(
                "flat point buffer length {} is not a multiple of 3",
                data.len()
            )));
        }
        Self::new(data.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.to_array()).collect()
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }
}

/// Triangle mesh with 0-based vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("vertex {i} has a non-finite coordinate")));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::InvalidArgument(format!(
                    "face {fi} {f:?} references a vertex outside 0..{n}"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidArgument(format!(
                    "face {fi} {f:?} repeats a vertex index"
                )));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Vec3; 3]> + '_ {
        (0..self.faces.len()).map(|f| self.triangle(f))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(c - a).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Sorted list of undirected edges, each listed once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.faces.len() as i64
    }

    /// True when every undirected edge borders exactly two faces.
    pub fn is_edge_manifold(&self) -> bool {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        edges.sort_unstable();
        edges
            .chunk_by(|a, b| a == b)
            .all(|run| run.len() == 2)
    }

    /// Same connectivity, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Shape(format!(
                "replacement has {} vertices, mesh has {}",
                vertices.len(),
                self.vertices.len()
            )));
        }
        Self::new(vertices, self.faces.clone())
    }
}

/// k nearest neighbors of every point of a source cloud, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodMap {
    k: usize,
    indices: Vec<usize>,
}

impl NeighborhoodMap {
    /// Validates and wraps a flat `n x k` index table.
    pub fn new(k: usize, indices: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if !indices.len().is_multiple_of(k) {
            return Err(Error::Shape(format!(
                "{} neighbor indices do not split into rows of {k}",
                indices.len()
            )));
        }
        let n = indices.len() / k;
        for (i, row) in indices.chunks_exact(k).enumerate() {
            if let Some(&j) = row.iter().find(|&&j| j >= n || j == i) {
                return Err(Error::InvalidArgument(format!(
                    "invalid neighbor {j} for point {i} of {n}"
                )));
            }
        }
        Ok(Self { k, indices })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of source points.
    pub fn len(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    /// Row-major `n x k` table.
    pub fn flat(&self) -> &[usize] {
        &self.indices
    }
}
