//! Brute-force reference implementations and a randomized comparison suite.
//!
//! Shared by the core integration tests and the acceptance runner.

#![allow(dead_code)]

use deformnet::geometry::{icosphere, knn, point_triangle_distance, PointCloud, TriangleMesh, Vec3};
use deformnet::loss::chamfer_distance;
use deformnet::metrics::{coverage, d2f};
use deformnet::rng::{self, Rng};
use rand::Rng as _;

/// Outcome of one oracle family: worst observed discrepancy against its
/// tolerance.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub name: &'static str,
    pub instances: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl OracleResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

pub fn random_cloud(r: &mut Rng, n: usize, spread: f64) -> PointCloud {
    PointCloud::new(
        (0..n)
            .map(|_| {
                Vec3::new(
                    r.random_range(-spread..spread),
                    r.random_range(-spread..spread),
                    r.random_range(-spread..spread),
                )
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_triangle(r: &mut Rng) -> [Vec3; 3] {
    let mut v = || Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    [v(), v(), v()]
}

/// Icosphere with every vertex pushed radially by a random factor.
pub fn random_mesh(r: &mut Rng) -> TriangleMesh {
    let base = icosphere(r.random_range(0..=2)).unwrap();
    let verts = base
        .vertices()
        .iter()
        .map(|&v| v * r.random_range(0.7..1.3))
        .collect();
    base.with_vertices(verts).unwrap()
}

/// kNN by sorting all `(distance², index)` pairs.
pub fn knn_oracle(points: &[Vec3], k: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| (points[i].distance_squared(points[j]), j))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

pub fn chamfer_oracle(a: &[Vec3], b: &[Vec3]) -> f64 {
    let directed = |x: &[Vec3], y: &[Vec3]| {
        x.iter()
            .map(|p| y.iter().map(|q| (*p - *q).norm_squared()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / x.len() as f64
    };
    directed(a, b) + directed(b, a)
}

fn segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Point-triangle distance by orthogonal projection: if the foot of the
/// perpendicular lies inside the triangle the answer is the plane distance,
/// otherwise the nearest of the three edges.
pub fn triangle_distance_oracle(p: Vec3, t: &[Vec3; 3]) -> f64 {
    let [a, b, c] = *t;
    let n = (b - a).cross(c - a);
    let edges = segment_distance(p, a, b).min(segment_distance(p, b, c)).min(segment_distance(p, c, a));
    if n.norm() < 1e-12 {
        return edges;
    }
    let unit = n / n.norm();
    let foot = p - unit * (p - a).dot(unit);
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|&(u, v)| (v - u).cross(foot - u).dot(n) >= 0.0);
    if inside {
        (p - a).dot(unit).abs()
    } else {
        edges
    }
}

/// Minimum distance from `p` to a barycentric grid of `res` subdivisions
/// on the triangle. Overestimates the exact distance by at most
/// `longest_edge / res`.
pub fn dense_distance(p: Vec3, t: &[Vec3; 3], res: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=res {
        for j in 0..=res - i {
            let (u, v) = (i as f64 / res as f64, j as f64 / res as f64);
            let q = t[0] + (t[1] - t[0]) * u + (t[2] - t[0]) * v;
            best = best.min((p - q).norm());
        }
    }
    best
}

pub fn longest_edge(t: &[Vec3; 3]) -> f64 {
    t[0].distance(t[1]).max(t[1].distance(t[2])).max(t[2].distance(t[0]))
}

pub fn d2f_oracle(points: &[Vec3], mesh: &TriangleMesh) -> f64 {
    let tris: Vec<[Vec3; 3]> = mesh.triangles().collect();
    points
        .iter()
        .map(|&p| tris.iter().map(|t| triangle_distance_oracle(p, t)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / points.len() as f64
}

/// Coverage by explicit argmin over all faces, lowest index on ties.
pub fn coverage_oracle(points: &[Vec3], mesh: &TriangleMesh) -> f64 {
    let tris: Vec<[Vec3; 3]> = mesh.triangles().collect();
    let mut hit = vec![false; tris.len()];
    for &p in points {
        let d: Vec<f64> = tris.iter().map(|t| point_triangle_distance(p, t)).collect();
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        let first = d.iter().position(|&v| v == min).unwrap();
        hit[first] = true;
    }
    hit.iter().filter(|&&h| h).count() as f64 / tris.len() as f64
}

/// Compares every geometric kernel with its oracle on `instances` random
/// problems per family.
pub fn run_oracle_suite(instances: usize, seed: u64) -> Vec<OracleResult> {
    let mut results = Vec::new();
    let mut family = |name: &'static str, tolerance: f64, f: &mut dyn FnMut(&mut Rng) -> f64| {
        let mut worst: f64 = 0.0;
        for i in 0..instances {
            let mut r = rng::seeded(rng::derive_seed(seed, &[name.len() as u64, i as u64]));
            worst = worst.max(f(&mut r));
        }
        results.push(OracleResult { name, instances, worst, tolerance });
    };

    // Index lists must agree exactly; a mismatch counts as error 1.
    family("knn", 0.0, &mut |r| {
        let n = r.random_range(2..=60);
        let k = r.random_range(1..n.min(12));
        let cloud = random_cloud(r, n, 1.0);
        let got = knn(&cloud, k).unwrap();
        let want = knn_oracle(cloud.points(), k);
        let same = (0..n).all(|i| got.neighbors(i) == want[i].as_slice());
        if same { 0.0 } else { 1.0 }
    });
    family("chamfer", 1e-12, &mut |r| {
        let a = { let n = r.random_range(1..=80); random_cloud(r, n, 1.0) };
        let b = { let n = r.random_range(1..=80); random_cloud(r, n, 1.5) };
        let want = chamfer_oracle(a.points(), b.points());
        (chamfer_distance(&a, &b) - want).abs() / want.max(1.0)
    });
    family("point_triangle_distance", 1e-9, &mut |r| {
        let t = random_triangle(r);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let p = Vec3::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            let exact = point_triangle_distance(p, &t);
            worst = worst.max((exact - triangle_distance_oracle(p, &t)).abs());
            // The dense grid can only overestimate, by at most one cell.
            let dense = dense_distance(p, &t, 60);
            let slack = longest_edge(&t) / 60.0;
            if exact > dense + 1e-12 || dense > exact + slack {
                worst = f64::INFINITY;
            }
        }
        worst
    });
    family("d2f", 1e-9, &mut |r| {
        let mesh = random_mesh(r);
        let pts = { let n = r.random_range(1..=40); random_cloud(r, n, 1.6) };
        (d2f(&pts, &mesh).unwrap() - d2f_oracle(pts.points(), &mesh)).abs()
    });
    family("coverage", 0.0, &mut |r| {
        let mesh = random_mesh(r);
        let pts = { let n = r.random_range(1..=60); random_cloud(r, n, 1.6) };
        (coverage(&pts, &mesh).unwrap() - coverage_oracle(pts.points(), &mesh)).abs()
    });
    results
}
