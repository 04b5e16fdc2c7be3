//! Reconstruction quality metrics.
//!
//! - D2F: mean over points of the distance to the nearest mesh face.
//! - Coverage: fraction of faces that are the nearest face of some point.
//! - Self-intersections: pairs of non-adjacent faces that intersect.

mod intersect;

pub use intersect::{count_self_intersections, triangles_intersect, INTERSECTION_TOLERANCE};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{icosphere, point_triangle_distance, sample_sphere, PointCloud, TriangleMesh, Vec3};
use crate::loss::chamfer_distance;
use crate::model::{self, ModelParams};
use crate::rng;

fn check_mesh(mesh: &TriangleMesh) -> Result<()> {
    if mesh.faces().is_empty() {
        return Err(Error::InvalidArgument("mesh has no faces".into()));
    }
    Ok(())
}

/// Nearest face and its distance; ties go to the lowest face index.
fn nearest_face(p: Vec3, tris: &[[Vec3; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (f, tri) in tris.iter().enumerate() {
        let d = point_triangle_distance(p, tri);
        if d < best.1 {
            best = (f, d);
        }
    }
    best
}

/// Mean distance from each point to its nearest face.
pub fn d2f(points: &PointCloud, mesh: &TriangleMesh) -> Result<f64> {
    check_mesh(mesh)?;
    let tris: Vec<_> = mesh.triangles().collect();
    let sum: f64 = points.points().iter().map(|&p| nearest_face(p, &tris).1).sum();
    Ok(sum / points.len() as f64)
}

/// Fraction of faces that are the nearest face of at least one point.
pub fn coverage(points: &PointCloud, mesh: &TriangleMesh) -> Result<f64> {
    check_mesh(mesh)?;
    let tris: Vec<_> = mesh.triangles().collect();
    let mut hit = vec![false; tris.len()];
    for &p in points.points() {
        hit[nearest_face(p, &tris).0] = true;
    }
    Ok(hit.iter().filter(|&&h| h).count() as f64 / tris.len() as f64)
}

/// One shape to evaluate: its ground-truth mesh and the cloud sampled from it.
#[derive(Debug, Clone)]
pub struct EvalShape {
    pub id: String,
    pub mesh: TriangleMesh,
    pub cloud: PointCloud,
}

/// Evaluation settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalConfig {
    /// Sphere sample size; `None` uses each target's size.
    pub sphere_points: Option<usize>,
    pub seed: u64,
    /// When set, also export an icosphere mesh at this level per shape and
    /// count its self-intersections.
    pub mesh_subdivisions: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub id: String,
    pub d2f: f64,
    pub coverage: f64,
    pub chamfer: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_intersections: Option<usize>,
}

/// Aggregate metrics over a dataset (means over shapes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub d2f: f64,
    pub coverage: f64,
    pub chamfer: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_intersections: Option<usize>,
    pub shapes: Vec<ShapeReport>,
}

impl EvalReport {
    /// Flat `key = value` rendering, one metric per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("shapes = {}\n", self.shapes.len()));
        out.push_str(&format!("d2f = {:e}\n", self.d2f));
        out.push_str(&format!("coverage = {:e}\n", self.coverage));
        out.push_str(&format!("chamfer = {:e}\n", self.chamfer));
        if let Some(n) = self.self_intersections {
            out.push_str(&format!("self_intersections = {n}\n"));
        }
        for s in &self.shapes {
            out.push_str(&format!("shape.{}.d2f = {:e}\n", s.id, s.d2f));
            out.push_str(&format!("shape.{}.coverage = {:e}\n", s.id, s.coverage));
            out.push_str(&format!("shape.{}.chamfer = {:e}\n", s.id, s.chamfer));
            if let Some(n) = s.self_intersections {
                out.push_str(&format!("shape.{}.self_intersections = {n}\n", s.id));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Stream tag for evaluation spheres.
const EVAL_SPHERE_TAG: u64 = 0xE7A1;

/// Reconstructs every shape with the forward network and scores it against
/// its ground truth.
pub fn evaluate(params: &ModelParams, shapes: &[EvalShape], config: &EvalConfig) -> Result<EvalReport> {
    if shapes.is_empty() {
        return Err(Error::InvalidArgument("evaluation dataset is empty".into()));
    }
    let template = config.mesh_subdivisions.map(icosphere).transpose()?;
    let mut reports = Vec::with_capacity(shapes.len());
    for (i, shape) in shapes.iter().enumerate() {
        let n = config.sphere_points.unwrap_or(shape.cloud.len());
        let sphere = sample_sphere(n, rng::derive_seed(config.seed, &[EVAL_SPHERE_TAG, i as u64]))?;
        let (recon, _) = model::reconstruct(&shape.cloud, &sphere, params)?;
        let self_intersections = match &template {
            Some(t) => {
                let code = model::encode(&shape.cloud, params)?;
                let verts = model::deform_points(t.vertices(), &code, params)?;
                Some(count_self_intersections(&t.with_vertices(verts)?))
            }
            None => None,
        };
        reports.push(ShapeReport {
            id: shape.id.clone(),
            d2f: d2f(&recon, &shape.mesh)?,
            coverage: coverage(&recon, &shape.mesh)?,
            chamfer: chamfer_distance(&recon, &shape.cloud),
            self_intersections,
        });
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&ShapeReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(EvalReport {
        d2f: mean(|r| r.d2f),
        coverage: mean(|r| r.coverage),
        chamfer: mean(|r| r.chamfer),
        self_intersections: template
            .as_ref()
            .map(|_| reports.iter().filter_map(|r| r.self_intersections).sum()),
        shapes: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{icosphere, sample_mesh_surface};
    use crate::model::ModelConfig;

    fn big_triangle() -> TriangleMesh {
        TriangleMesh::new(
            vec![Vec3::new(-10.0, -10.0, 0.0), Vec3::new(10.0, -10.0, 0.0), Vec3::new(0.0, 10.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn on_surface_points_have_zero_d2f() {
        let mesh = icosphere(1).unwrap();
        let pts = sample_mesh_surface(&mesh, 200, 3).unwrap();
        assert!(d2f(&pts, &mesh).unwrap() < 1e-9);
    }

    #[test]
    fn height_above_triangle() {
        let pts = PointCloud::new(vec![Vec3::new(0.0, 0.0, 1.0)]).unwrap();
        assert!((d2f(&pts, &big_triangle()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_mesh_rejected() {
        let mesh = TriangleMesh::new(vec![Vec3::ZERO], vec![]).unwrap();
        let pts = PointCloud::new(vec![Vec3::ZERO]).unwrap();
        assert!(matches!(d2f(&pts, &mesh), Err(Error::InvalidArgument(_))));
        assert!(matches!(coverage(&pts, &mesh), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_point_covers_one_face() {
        let mesh = icosphere(1).unwrap();
        let pts = PointCloud::new(vec![Vec3::new(0.1, 0.9, 0.3)]).unwrap();
        assert_eq!(coverage(&pts, &mesh).unwrap(), 1.0 / 80.0);
    }

    #[test]
    fn face_centroids_cover_everything() {
        let mesh = icosphere(2).unwrap();
        let pts = PointCloud::new(
            mesh.triangles().map(|[a, b, c]| (a + b + c) / 3.0).collect(),
        )
        .unwrap();
        assert_eq!(coverage(&pts, &mesh).unwrap(), 1.0);
    }

    #[test]
    fn vertex_cluster_uses_lowest_face() {
        // Points exactly at vertex 0 are equidistant (0) to every incident face.
        let mesh = icosphere(1).unwrap();
        let v0 = mesh.vertices()[0];
        let pts = PointCloud::new(vec![v0; 5]).unwrap();
        assert_eq!(coverage(&pts, &mesh).unwrap(), 1.0 / 80.0);
        let tris: Vec<_> = mesh.triangles().collect();
        let first_incident = mesh.faces().iter().position(|f| f.contains(&0)).unwrap();
        assert_eq!(nearest_face(v0, &tris).0, first_incident);
    }

    #[test]
    fn identity_model_on_sphere_targets() {
        let cfg = ModelConfig {
            latent_dim: 8,
            point_widths: vec![8, 8, 8],
            pool_hidden: 8,
            block_hidden: 8,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&cfg, 0).unwrap();
        let mesh = icosphere(4).unwrap();
        let shapes: Vec<EvalShape> = (0..3)
            .map(|i| EvalShape {
                id: format!("s{i}"),
                mesh: mesh.clone(),
                cloud: sample_sphere(64, i).unwrap(),
            })
            .collect();
        let report = evaluate(&params, &shapes, &EvalConfig::default()).unwrap();
        assert_eq!(report.shapes.len(), 3);
        // Chord sag of a level-4 icosphere is below 2e-3.
        assert!(report.d2f < 2e-3, "{}", report.d2f);
        assert!((0.0..=1.0).contains(&report.coverage));
        assert!(evaluate(&params, &[], &EvalConfig::default()).is_err());
    }

    #[test]
    fn text_report_is_flat() {
        let r = EvalReport {
            d2f: 0.5,
            coverage: 0.25,
            chamfer: 1.0,
            self_intersections: None,
            shapes: vec![ShapeReport { id: "a".into(), d2f: 0.5, coverage: 0.25, chamfer: 1.0, self_intersections: None }],
        };
        let text = r.to_text();
        assert!(text.contains("d2f = 5e-1\n"));
        assert!(text.contains("shape.a.coverage = 2.5e-1\n"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["shapes"][0]["id"], "a");
    }
}
