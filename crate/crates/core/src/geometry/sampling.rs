use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{PointCloud, TriangleMesh, Vec3};
use crate::error::{Error, Result};
use crate::rng;

/// `n` points drawn i.i.d. uniformly on the unit sphere.
///
/// Each point is a standard normal 3-vector normalized to unit length.
pub fn sample_sphere(n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidArgument("sphere sample count must be positive".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let norm = v.norm();
        if norm > 1e-12 {
            points.push(v / norm);
        }
    }
    PointCloud::new(points)
}

/// `n` points uniformly distributed over the surface of `mesh`.
///
/// A face is picked with probability proportional to its area, then a point
/// is drawn uniformly inside it with reflected barycentric coordinates.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidArgument("surface sample count must be positive".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces().len());
    let mut total = 0.0;
    for f in 0..mesh.faces().len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    let extent = bounding_extent(mesh);
    if !(total > 1e-14 * extent * extent) {
        return Err(Error::DegenerateMesh(format!(
            "total surface area {total:e} is zero"
        )));
    }

    let mut rng = rng::seeded(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let face = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(face);
        let (mut r1, mut r2): (f64, f64) = (rng.random(), rng.random());
        if r1 + r2 > 1.0 {
            r1 = 1.0 - r1;
            r2 = 1.0 - r2;
        }
        points.push(a + (b - a) * r1 + (c - a) * r2);
    }
    PointCloud::new(points)
}

fn bounding_extent(mesh: &TriangleMesh) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in mesh.vertices() {
        for d in 0..3 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_have_unit_norm() {
        let c = sample_sphere(100, 7).unwrap();
        assert_eq!(c.len(), 100);
        for p in c.points() {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_mean_is_near_origin() {
        let c = sample_sphere(10_000, 7).unwrap();
        let mean = c.points().iter().fold(Vec3::ZERO, |a, &p| a + p) / 10_000.0;
        // Each coordinate of the mean has std 1/sqrt(3n) ~ 0.0058.
        assert!(mean.norm() < 0.05, "mean norm {}", mean.norm());
    }

    #[test]
    fn zero_points_rejected() {
        assert!(matches!(sample_sphere(0, 7), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sampling_is_reproducible() {
        assert_eq!(sample_sphere(64, 3).unwrap(), sample_sphere(64, 3).unwrap());
        assert_ne!(sample_sphere(64, 3).unwrap(), sample_sphere(64, 4).unwrap());
    }

    #[test]
    fn single_triangle_containment() {
        let mesh = TriangleMesh::new(
            vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let c = sample_mesh_surface(&mesh, 50, 1).unwrap();
        for p in c.points() {
            assert!(p.z.abs() <= 1e-12);
            assert!(p.x >= -1e-12 && p.y >= -1e-12 && p.x + p.y <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn area_weighted_face_choice() {
        // Face 0 has area 1.5, face 1 has area 0.5.
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(3.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(10.0, 0.0, 0.0),
                Vec3::new(11.0, 0.0, 0.0),
                Vec3::new(10.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let c = sample_mesh_surface(&mesh, 4000, 11).unwrap();
        let first = c.points().iter().filter(|p| p.x < 5.0).count() as f64;
        let sd = (4000.0f64 * 0.75 * 0.25).sqrt();
        assert!((first - 3000.0).abs() < 4.0 * sd, "first-face count {first}");
    }

    #[test]
    fn collinear_mesh_is_degenerate() {
        let mesh = TriangleMesh::new(
            vec![Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), Vec3::new(2.0, 2.0, 2.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(sample_mesh_surface(&mesh, 10, 0), Err(Error::DegenerateMesh(_))));
    }
}
