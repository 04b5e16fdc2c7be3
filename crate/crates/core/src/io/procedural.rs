use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

/// A parsed procedural shape description such as `torus:R=2,r=0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProceduralShape {
    pub name: String,
    pub params: Vec<(String, f64)>,
}

impl ProceduralShape {
    /// Parses `name[:key=value,...]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n, r),
            None => (spec, ""),
        };
        let mut params = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("procedural parameter {item:?} is not key=value"))
            })?;
            let v: f64 = v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("procedural parameter {item:?} is not numeric"))
            })?;
            params.push((k.trim().to_string(), v));
        }
        Ok(Self {
            name: name.trim().to_string(),
            params,
        })
    }

    pub fn build(&self) -> Result<TriangleMesh> {
        procedural_shape(&self.name, &self.params)
    }
}

struct Params<'a> {
    shape: &'a str,
    given: &'a [(String, f64)],
}

impl Params<'_> {
    fn get(&self, key: &str, default: f64) -> Result<f64> {
        let v = self
            .given
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map_or(default, |(_, v)| *v);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{} parameter {key} must be positive, got {v}",
                self.shape
            )));
        }
        Ok(v)
    }

    fn count(&self, key: &str, default: usize, min: usize) -> Result<usize> {
        let v = self.get(key, default as f64)?;
        if v.fract() != 0.0 || (v as usize) < min || v > 4096.0 {
            return Err(Error::InvalidArgument(format!(
                "{} parameter {key} must be an integer in {min}..=4096, got {v}",
                self.shape
            )));
        }
        Ok(v as usize)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.given.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, _)) => Err(Error::InvalidArgument(format!(
                "{} has no parameter {k:?} (expected one of {allowed:?})",
                self.shape
            ))),
            None => Ok(()),
        }
    }
}

/// Closed toy meshes centered at the origin.
///
/// | name      | parameters (defaults)                                          |
/// |-----------|----------------------------------------------------------------|
/// | cube      | `edge` (2), or per-axis `x`, `y`, `z` (= edge)                  |
/// | ellipsoid | semi-axes `a`, `b`, `c` (1), `segments` (32), `rings` (16)     |
/// | cylinder  | `radius` (1), `height` (2), `segments` (32)                    |
/// | torus     | `R` (0.7), `r` (0.3), `major` (32), `minor` (16)               |
///
/// All faces are oriented outward.
pub fn procedural_shape(name: &str, params: &[(String, f64)]) -> Result<TriangleMesh> {
    let p = Params { shape: name, given: params };
    match name {
        "cube" => {
            p.check_keys(&["edge", "x", "y", "z"])?;
            let edge = p.get("edge", 2.0)?;
            cuboid(p.get("x", edge)?, p.get("y", edge)?, p.get("z", edge)?)
        }
        "ellipsoid" => {
            p.check_keys(&["a", "b", "c", "segments", "rings"])?;
            ellipsoid(
                [p.get("a", 1.0)?, p.get("b", 1.0)?, p.get("c", 1.0)?],
                p.count("segments", 32, 3)?,
                p.count("rings", 16, 2)?,
            )
        }
        "cylinder" => {
            p.check_keys(&["radius", "height", "segments"])?;
            cylinder(p.get("radius", 1.0)?, p.get("height", 2.0)?, p.count("segments", 32, 3)?)
        }
        "torus" => {
            p.check_keys(&["R", "r", "major", "minor"])?;
            let (big, small) = (p.get("R", 0.7)?, p.get("r", 0.3)?);
            if small >= big {
                return Err(Error::InvalidArgument(format!(
                    "torus needs r < R, got R = {big}, r = {small}"
                )));
            }
            torus(big, small, p.count("major", 32, 3)?, p.count("minor", 16, 3)?)
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown procedural shape {other:?} (expected cube, ellipsoid, cylinder or torus)"
        ))),
    }
}

/// Flips every triangle whose normal points against `outward(centroid)`.
fn orient(vertices: &[Vec3], faces: &mut [[usize; 3]], outward: impl Fn(Vec3) -> Vec3) {
    for f in faces.iter_mut() {
        let [a, b, c] = f.map(|i| vertices[i]);
        let n = (b - a).cross(c - a);
        if n.dot(outward((a + b + c) / 3.0)) < 0.0 {
            f.swap(1, 2);
        }
    }
}

fn cuboid(x: f64, y: f64, z: f64) -> Result<TriangleMesh> {
    let h = Vec3::new(x / 2.0, y / 2.0, z / 2.0);
    let vertices: Vec<Vec3> = (0..8)
        .map(|i| {
            let s = |bit: usize| if i & bit != 0 { 1.0 } else { -1.0 };
            Vec3::new(s(1) * h.x, s(2) * h.y, s(4) * h.z)
        })
        .collect();
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let mut faces: Vec<[usize; 3]> = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    orient(&vertices, &mut faces, |c| c);
    TriangleMesh::new(vertices, faces)
}

fn ellipsoid(axes: [f64; 3], segments: usize, rings: usize) -> Result<TriangleMesh> {
    let [a, b, c] = axes;
    let mut vertices = vec![Vec3::new(0.0, 0.0, c)];
    for i in 1..rings {
        let theta = PI * i as f64 / rings as f64;
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            vertices.push(Vec3::new(
                a * theta.sin() * phi.cos(),
                b * theta.sin() * phi.sin(),
                c * theta.cos(),
            ));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -c));
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * segments + j % segments;

    let mut faces = Vec::new();
    for j in 0..segments {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
        faces.push([south, ring(rings - 1, j + 1), ring(rings - 1, j)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            let (p, q, r, s) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([p, r, s]);
            faces.push([p, s, q]);
        }
    }
    orient(&vertices, &mut faces, |c| c);
    TriangleMesh::new(vertices, faces)
}

fn cylinder(radius: f64, height: f64, segments: usize) -> Result<TriangleMesh> {
    let half = height / 2.0;
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for z in [-half, half] {
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            vertices.push(Vec3::new(radius * phi.cos(), radius * phi.sin(), z));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -half));
    vertices.push(Vec3::new(0.0, 0.0, half));
    let (bottom, top) = (2 * segments, 2 * segments + 1);

    let mut faces = Vec::new();
    for j in 0..segments {
        let k = (j + 1) % segments;
        faces.push([j, k, segments + k]);
        faces.push([j, segments + k, segments + j]);
        faces.push([bottom, k, j]);
        faces.push([top, segments + j, segments + k]);
    }
    orient(&vertices, &mut faces, |c| c);
    TriangleMesh::new(vertices, faces)
}

fn torus(major_radius: f64, minor_radius: f64, major: usize, minor: usize) -> Result<TriangleMesh> {
    let mut vertices = Vec::with_capacity(major * minor);
    for i in 0..major {
        let u = 2.0 * PI * i as f64 / major as f64;
        for j in 0..minor {
            let v = 2.0 * PI * j as f64 / minor as f64;
            let rr = major_radius + minor_radius * v.cos();
            vertices.push(Vec3::new(rr * u.cos(), rr * u.sin(), minor_radius * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % major) * minor + j % minor;
    let mut faces = Vec::with_capacity(2 * major * minor);
    for i in 0..major {
        for j in 0..minor {
            let (p, q, r, s) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            faces.push([p, q, s]);
            faces.push([p, s, r]);
        }
    }
    orient(&vertices, &mut faces, |c| {
        let radial = Vec3::new(c.x, c.y, 0.0);
        c - radial.normalized() * major_radius
    });
    TriangleMesh::new(vertices, faces)
}
