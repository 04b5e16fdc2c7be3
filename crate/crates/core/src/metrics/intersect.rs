//! Closed triangle-triangle intersection and mesh self-intersection counting.

use crate::geometry::{point_triangle_distance, TriangleMesh, Vec3};

/// Absolute tolerance used by the intersection predicates.
pub const INTERSECTION_TOLERANCE: f64 = 1e-10;

/// Minimum distance between segments `[p0, p1]` and `[q0, q1]`.
fn segment_segment_distance(p0: Vec3, p1: Vec3, q0: Vec3, q1: Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);

    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return p0.distance(q0);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    (p0 + d1 * s).distance(q0 + d2 * t)
}

/// Whether the closed segment `[p0, p1]` meets the closed triangle `tri`.
fn segment_meets_triangle(p0: Vec3, p1: Vec3, tri: &[Vec3; 3], tol: f64) -> bool {
    let n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    let len = n.norm();
    if len == 0.0 {
        // Zero-area triangle: compare against its edges.
        return (0..3).any(|i| segment_segment_distance(p0, p1, tri[i], tri[(i + 1) % 3]) <= tol);
    }
    let n = n / len;
    let d0 = (p0 - tri[0]).dot(n);
    let d1 = (p1 - tri[0]).dot(n);
    if (d0 > tol && d1 > tol) || (d0 < -tol && d1 < -tol) {
        return false;
    }
    if d0.abs() <= tol && d1.abs() <= tol {
        // Coplanar within tolerance.
        return point_triangle_distance(p0, tri) <= tol
            || point_triangle_distance(p1, tri) <= tol
            || (0..3).any(|i| segment_segment_distance(p0, p1, tri[i], tri[(i + 1) % 3]) <= tol);
    }
    let t = (d0 / (d0 - d1)).clamp(0.0, 1.0);
    point_triangle_distance(p0 + (p1 - p0) * t, tri) <= tol
}

/// Whether two closed triangles intersect.
///
/// Two closed triangles meet iff an edge of one meets the other triangle.
pub fn triangles_intersect(a: &[Vec3; 3], b: &[Vec3; 3], tol: f64) -> bool {
    (0..3).any(|i| segment_meets_triangle(a[i], a[(i + 1) % 3], b, tol))
        || (0..3).any(|i| segment_meets_triangle(b[i], b[(i + 1) % 3], a, tol))
}

fn bounds(t: &[Vec3; 3]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in t {
        for d in 0..3 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    (lo, hi)
}

/// Number of unordered pairs of faces that share no vertex index and whose
/// closed triangles intersect.
pub fn count_self_intersections(mesh: &TriangleMesh) -> usize {
    let tol = INTERSECTION_TOLERANCE;
    let faces = mesh.faces();
    let tris: Vec<[Vec3; 3]> = mesh.triangles().collect();
    let boxes: Vec<_> = tris.iter().map(bounds).collect();

    // Sweep along x over boxes sorted by their lower bound.
    let mut order: Vec<usize> = (0..tris.len()).collect();
    order.sort_by(|&i, &j| boxes[i].0[0].total_cmp(&boxes[j].0[0]).then(i.cmp(&j)));

    let mut count = 0;
    for (oi, &i) in order.iter().enumerate() {
        let (lo_i, hi_i) = boxes[i];
        for &j in &order[oi + 1..] {
            let (lo_j, hi_j) = boxes[j];
            if lo_j[0] > hi_i[0] + tol {
                break;
            }
            if (1..3).any(|d| lo_j[d] > hi_i[d] + tol || lo_i[d] > hi_j[d] + tol) {
                continue;
            }
            if faces[i].iter().any(|v| faces[j].contains(v)) {
                continue;
            }
            if triangles_intersect(&tris[i], &tris[j], tol) {
                count += 1;
            }
        }
    }
    count
}
