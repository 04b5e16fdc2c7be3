use std::collections::HashMap;

use super::{TriangleMesh, Vec3};
use crate::error::{Error, Result};

/// Largest accepted subdivision level (163 842 vertices).
pub const MAX_SUBDIVISIONS: u32 = 7;

/// Unit-radius icosphere with outward-facing (counter-clockwise) triangles.
///
/// Level `s` has `10 * 4^s + 2` vertices and `20 * 4^s` faces.
pub fn icosphere(subdivisions: u32) -> Result<TriangleMesh> {
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(Error::SizeLimit(format!(
            "icosphere subdivisions {subdivisions} exceeds {MAX_SUBDIVISIONS}"
        )));
    }

    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(|v| Vec3::from(v).normalized())
    .collect();

    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = ((vertices[a] + vertices[b]) * 0.5).normalized();
                vertices.push(m);
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    TriangleMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_counts() {
        let m = icosphere(0).unwrap();
        assert_eq!(m.vertices().len(), 12);
        assert_eq!(m.faces().len(), 20);
        assert_eq!(m.edges().len(), 30);
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn one_subdivision_counts() {
        let m = icosphere(1).unwrap();
        assert_eq!(m.vertices().len(), 42);
        assert_eq!(m.faces().len(), 80);
        assert_eq!(m.edges().len(), 120);
    }

    #[test]
    fn vertices_on_unit_sphere() {
        let m = icosphere(2).unwrap();
        for v in m.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_manifold_at_every_level() {
        for s in 0..=4 {
            let m = icosphere(s).unwrap();
            assert_eq!(m.euler_characteristic(), 2, "level {s}");
            assert!(m.is_edge_manifold(), "level {s}");
            assert_eq!(m.vertices().len(), 10 * 4usize.pow(s) + 2);
        }
    }

    #[test]
    fn faces_point_outward() {
        let m = icosphere(3).unwrap();
        for tri in m.triangles() {
            let n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
            let centroid = (tri[0] + tri[1] + tri[2]) / 3.0;
            assert!(n.dot(centroid) > 0.0);
        }
    }

    #[test]
    fn default_level_size() {
        let m = icosphere(3).unwrap();
        assert_eq!((m.vertices().len(), m.faces().len()), (642, 1280));
    }

    #[test]
    fn size_guard() {
        assert!(matches!(icosphere(8), Err(Error::SizeLimit(_))));
    }
}
