use super::Vec3;

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Exact Euclidean distance from `p` to the closed triangle `tri`.
///
/// Classifies `p` against the Voronoi regions of the triangle's vertices,
/// edges and face. Triangles with (numerically) zero area fall back to the
/// minimum distance over their three edges.
pub fn point_triangle_distance(p: Vec3, tri: &[Vec3; 3]) -> f64 {
    let [a, b, c] = *tri;
    let ab = b - a;
    let ac = c - a;
    let n2 = ab.cross(ac).norm_squared();
    let scale = ab.norm_squared().max(ac.norm_squared());
    if n2 <= 1e-24 * scale * scale || scale == 0.0 {
        return point_segment_distance(p, a, b)
            .min(point_segment_distance(p, b, c))
            .min(point_segment_distance(p, c, a));
    }

    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return p.distance(a);
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return p.distance(b);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return p.distance(a + ab * v);
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return p.distance(c);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return p.distance(a + ac * w);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return p.distance(b + (c - b) * w);
    }

    // Face region: perpendicular distance to the supporting plane.
    let n = ab.cross(ac);
    ap.dot(n).abs() / n2.sqrt()
}
