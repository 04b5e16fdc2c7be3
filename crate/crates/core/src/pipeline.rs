//! End-to-end helpers shared by the command line and the test suites:
//! the finite-difference gradient suite, reconstruction and mesh export.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{grad_check, Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::{icosphere, knn, sample_sphere, PointCloud, TriangleMesh, Vec3};
use crate::loss::{chamfer, deform_loss, total_loss, DeformLossForm, LossInputs, LossWeights};
use crate::model::{self, cloud_tensor, ModelConfig, ModelParams};
use crate::rng::{self, Rng};

/// Acceptance bound on the relative gradient error.
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Central-difference step.
pub const GRAD_EPS: f64 = 1e-6;

const RECON_SPHERE_TAG: u64 = 0x2EC0;

/// Worst relative error of one named check across all instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCase {
    pub name: String,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradSuiteReport {
    pub instances: usize,
    pub cases: Vec<GradCase>,
}

impl GradSuiteReport {
    pub fn max_rel_error(&self) -> f64 {
        self.cases.iter().map(|c| c.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < GRAD_TOLERANCE
    }
}

type Scalar = Box<dyn Fn(&mut Graph, Var) -> Result<Var>>;

fn normal(r: &mut Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, r))
        .collect()
}

/// Values bounded away from zero, for ops with a kink at the origin.
fn away_from_zero(r: &mut Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m = r.random_range(0.1..1.0);
            if r.random_bool(0.5) { m } else { -m }
        })
        .collect()
}

fn tensor(shape: &[usize], data: Vec<f64>) -> Tensor {
    Tensor::new(shape.to_vec(), data).expect("generated data matches shape")
}

/// Contracts `y` with fixed pseudo-random weights so every output entry
/// contributes to the scalar being differentiated.
fn probe(g: &mut Graph, y: Var, seed: u64) -> Result<Var> {
    let shape = g.shape(y).to_vec();
    let n = shape.iter().product();
    let w = g.constant(tensor(&shape, normal(&mut rng::seeded(seed), n, 1.0)))?;
    let m = g.mul(y, w)?;
    g.reduce_sum(m, None)
}

fn op_cases(r: &mut Rng, seed: u64) -> Vec<(String, Tensor, Scalar)> {
    let rows = r.random_range(2..=6);
    let cols = r.random_range(2..=5);
    let inner = r.random_range(1..=4);
    let sh = [rows, cols];
    let nm = rows * cols;
    let x = tensor(&sh, normal(r, nm, 1.0));
    let other = tensor(&sh, normal(r, nm, 1.0));
    let row = tensor(&[1, cols], normal(r, cols, 1.0));
    let kinked = tensor(&sh, away_from_zero(r, nm));
    let lhs = tensor(&[rows, inner], normal(r, rows * inner, 1.0));
    let rhs = tensor(&[inner, cols], normal(r, inner * cols, 1.0));
    let factor = r.random_range(-2.0..2.0);
    let gather: Vec<usize> = (0..rows + 2).map(|_| r.random_range(0..rows)).collect();

    let mut cases: Vec<(String, Tensor, Scalar)> = Vec::new();
    let mut push = |name: &str, input: &Tensor, f: Scalar| cases.push((name.to_string(), input.clone(), f));

    type Binary = fn(&mut Graph, Var, Var) -> Result<Var>;
    let binaries: [(&str, Binary); 3] = [("add", Graph::add), ("sub", Graph::sub), ("mul", Graph::mul)];
    for (name, op) in binaries {
        let (o, rw) = (other.clone(), row.clone());
        push(&format!("{name}.lhs"), &x, Box::new(move |g, v| {
            let c = g.constant(o.clone())?;
            let y = op(g, v, c)?;
            probe(g, y, seed)
        }));
        let o = other.clone();
        push(&format!("{name}.rhs"), &x, Box::new(move |g, v| {
            let c = g.constant(o.clone())?;
            let y = op(g, c, v)?;
            probe(g, y, seed)
        }));
        let o = x.clone();
        push(&format!("{name}.broadcast"), &rw, Box::new(move |g, v| {
            let c = g.constant(o.clone())?;
            let y = op(g, c, v)?;
            probe(g, y, seed)
        }));
        let o = x.clone();
        push(&format!("{name}.scalar"), &Tensor::scalar(factor), Box::new(move |g, v| {
            let c = g.constant(o.clone())?;
            let y = op(g, v, c)?;
            probe(g, y, seed)
        }));
    }
    push("scale", &x, Box::new(move |g, v| {
        let y = g.scale(v, factor)?;
        probe(g, y, seed)
    }));
    let b = rhs.clone();
    push("matmul.lhs", &lhs, Box::new(move |g, v| {
        let c = g.constant(b.clone())?;
        let y = g.matmul(v, c)?;
        probe(g, y, seed)
    }));
    let a = lhs.clone();
    push("matmul.rhs", &rhs, Box::new(move |g, v| {
        let c = g.constant(a.clone())?;
        let y = g.matmul(c, v)?;
        probe(g, y, seed)
    }));
    let a = lhs.clone();
    push("concat", &x, Box::new(move |g, v| {
        let c = g.constant(a.clone())?;
        let y = g.concat(&[c, v, c])?;
        probe(g, y, seed)
    }));
    type Unary = fn(&mut Graph, Var) -> Result<Var>;
    let unaries: [(&str, Unary, &Tensor); 4] = [
        ("relu", Graph::relu, &kinked),
        ("tanh", Graph::tanh, &x),
        ("square", Graph::square, &x),
        ("abs", Graph::abs, &kinked),
    ];
    for (name, op, input) in unaries {
        push(name, input, Box::new(move |g, v| {
            let y = op(g, v)?;
            probe(g, y, seed)
        }));
    }
    type Reduce = fn(&mut Graph, Var, Option<usize>) -> Result<Var>;
    let reductions: [(&str, Reduce); 3] = [
        ("reduce_sum", Graph::reduce_sum),
        ("reduce_mean", Graph::reduce_mean),
        ("reduce_max", Graph::reduce_max),
    ];
    for (name, op) in reductions {
        for (suffix, axis) in [("all", None), ("axis0", Some(0)), ("axis1", Some(1))] {
            push(&format!("{name}.{suffix}"), &x, Box::new(move |g, v| {
                let y = op(g, v, axis)?;
                probe(g, y, seed)
            }));
        }
    }
    push("gather_rows", &x, Box::new(move |g, v| {
        let y = g.gather_rows(v, &gather)?;
        probe(g, y, seed)
    }));
    cases
}

fn random_cloud(r: &mut Rng, n: usize) -> Tensor {
    tensor(&[n, 3], normal(r, 3 * n, 0.6))
}

fn loss_cases(r: &mut Rng) -> Result<Vec<(String, Tensor, Scalar)>> {
    let n = r.random_range(6..=32);
    let m = r.random_range(6..=32);
    let k = r.random_range(2..=5);
    let a = random_cloud(r, n);
    let b = random_cloud(r, m);
    let source = random_cloud(r, n);
    let deformed = tensor(&[n, 3], {
        let noise = normal(r, 3 * n, 0.2);
        source.data().iter().zip(noise).map(|(s, e)| s + e).collect()
    });
    let nbrs = knn(&PointCloud::from_flat(source.data())?, k)?;

    let mut cases: Vec<(String, Tensor, Scalar)> = Vec::new();
    let other = b.clone();
    cases.push(("chamfer.lhs".into(), a.clone(), Box::new(move |g, v| {
        let c = g.constant(other.clone())?;
        chamfer(g, v, c)
    })));
    let other = a.clone();
    cases.push(("chamfer.rhs".into(), b.clone(), Box::new(move |g, v| {
        let c = g.constant(other.clone())?;
        chamfer(g, c, v)
    })));
    for form in [DeformLossForm::Squared, DeformLossForm::Absolute] {
        let (src, nb) = (source.clone(), nbrs.clone());
        cases.push((format!("deform_loss.{}", form.as_str()), deformed.clone(), Box::new(move |g, v| {
            let s = g.constant(src.clone())?;
            deform_loss(g, s, v, &nb, form)
        })));
    }
    Ok(cases)
}

/// Small model with every deformation output layer randomized, so that no
/// gradient is trivially zero.
fn randomized_model(r: &mut Rng, conditioned: bool) -> Result<ModelParams> {
    let config = ModelConfig {
        latent_dim: 8,
        blocks: 2,
        point_widths: vec![8, 16],
        pool_hidden: 16,
        block_hidden: 8,
        backward_conditioned: conditioned,
    };
    let mut params = ModelParams::init(&config, r.random())?;
    let names: Vec<String> = params.names().to_vec();
    for (name, t) in names.iter().zip(params.tensors_mut()) {
        if name.ends_with(".2.weight") || name.ends_with(".2.bias") || name.ends_with("bias") {
            let fresh = normal(r, t.numel(), 0.2);
            t.data_mut().copy_from_slice(&fresh);
        }
    }
    Ok(params)
}

fn total_loss_cases(r: &mut Rng, instance: usize) -> Result<Vec<(String, Tensor, Scalar)>> {
    let params = randomized_model(r, instance.is_multiple_of(2))?;
    let form = if instance % 3 == 2 { DeformLossForm::Absolute } else { DeformLossForm::Squared };
    let n = r.random_range(8..=32);
    let m = r.random_range(8..=32);
    let k = 4;
    let target = random_cloud(r, n);
    let sphere = sample_sphere(m, r.random())?;
    let target_nbrs = knn(&PointCloud::from_flat(target.data())?, k)?;
    let sphere_nbrs = knn(&sphere, k)?;
    let sphere = cloud_tensor(&sphere);
    let weights = LossWeights { w_chamfer: 1.0, w_deform: 0.5, w_backward: 0.7 };

    let mut cases: Vec<(String, Tensor, Scalar)> = Vec::new();
    for (index, (name, value)) in params.iter().enumerate() {
        let (p, t, s) = (params.clone(), target.clone(), sphere.clone());
        let (tn, sn) = (target_nbrs.clone(), sphere_nbrs.clone());
        cases.push((format!("total_loss.{name}"), value.clone(), Box::new(move |g, v| {
            let bound = p.bind_with(g, index, v)?;
            let target = g.constant(t.clone())?;
            let sphere = g.constant(s.clone())?;
            let (_, fwd, bwd) = bound.reconstruct(g, target, sphere)?;
            let inputs = LossInputs {
                target,
                sphere,
                forward_out: fwd,
                backward_out: bwd,
                sphere_nbrs: &sn,
                target_nbrs: &tn,
            };
            Ok(total_loss(g, inputs, &weights, form)?.total)
        })));
    }
    Ok(cases)
}

/// Runs central finite-difference checks of every differentiable op, the
/// Chamfer and deformation losses, and the end-to-end objective with respect
/// to every model parameter, on `instances` random small problems.
pub fn gradient_suite(instances: usize, seed: u64) -> Result<GradSuiteReport> {
    if instances == 0 {
        return Err(Error::InvalidArgument("gradient suite needs at least one instance".into()));
    }
    let mut cases: Vec<GradCase> = Vec::new();
    for i in 0..instances {
        let mut r = rng::seeded(rng::derive_seed(seed, &[i as u64]));
        let probe_seed = r.random();
        let mut all = op_cases(&mut r, probe_seed);
        all.extend(loss_cases(&mut r)?);
        all.extend(total_loss_cases(&mut r, i)?);
        for (name, input, f) in all {
            let err = grad_check(&f, &input, GRAD_EPS)
                .map_err(|e| Error::InvalidArgument(format!("gradient check {name}: {e}")))?;
            match cases.iter_mut().find(|c| c.name == name) {
                Some(c) => c.max_rel_error = c.max_rel_error.max(err),
                None => cases.push(GradCase { name, max_rel_error: err }),
            }
        }
    }
    Ok(GradSuiteReport { instances, cases })
}

/// Forward reconstruction of `cloud` from a sphere of `sphere_points`
/// samples (default: the cloud's size) drawn from `seed`.
pub fn reconstruct_cloud(
    params: &ModelParams,
    cloud: &PointCloud,
    sphere_points: Option<usize>,
    seed: u64,
) -> Result<PointCloud> {
    let n = sphere_points.unwrap_or(cloud.len());
    let sphere = sample_sphere(n, rng::derive_seed(seed, &[RECON_SPHERE_TAG]))?;
    Ok(model::reconstruct(cloud, &sphere, params)?.0)
}

/// Mesh of the reconstruction of `cloud`: icosphere vertices pushed through
/// the forward network, connectivity unchanged.
pub fn export_mesh(params: &ModelParams, cloud: &PointCloud, subdivisions: u32) -> Result<TriangleMesh> {
    let sphere = icosphere(subdivisions)?;
    let code = model::encode(cloud, params)?;
    let verts: Vec<Vec3> = model::deform_points(sphere.vertices(), &code, params)?;
    sphere.with_vertices(verts)
}
