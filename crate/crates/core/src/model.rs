//! Set encoder and residual deformation networks.
//!
//! The encoder applies a shared per-point MLP (`3 -> 64 -> 128 -> 256`, ReLU),
//! max-pools over points and maps the pooled feature through a post-pool MLP
//! (`256 -> 256 -> d`, ReLU then linear) to the latent code.
//!
//! A deformation network is a stack of `T` residual blocks. Block `t` maps
//! `x <- x + B_t(concat(x, z))` with `B_t` an MLP `3 + d -> 128 -> 128 -> 3`
//! (tanh hidden, linear output). The forward network starts from sphere
//! samples, the backward network from target points; both share the code.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use crate::rng;

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Latent code dimension `d`.
    pub latent_dim: usize,
    /// Residual blocks per deformation network.
    pub blocks: usize,
    /// Output widths of the shared per-point encoder layers.
    pub point_widths: Vec<usize>,
    /// Hidden width of the post-pool network.
    pub pool_hidden: usize,
    /// Hidden width of each deformation block.
    pub block_hidden: usize,
    /// Whether backward blocks see the latent code.
    pub backward_conditioned: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            latent_dim: 256,
            blocks: 3,
            point_widths: vec![64, 128, 256],
            pool_hidden: 256,
            block_hidden: 128,
            backward_conditioned: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.latent_dim, self.blocks, self.pool_hidden, self.block_hidden];
        if positive.contains(&0) || self.point_widths.is_empty() || self.point_widths.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "architecture extents must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Every parameter name with its shape, in canonical order.
    pub fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut linear = |name: String, fan_in: usize, fan_out: usize| {
            out.push((format!("{name}.weight"), vec![fan_in, fan_out]));
            out.push((format!("{name}.bias"), vec![1, fan_out]));
        };
        let mut width = 3;
        for (i, &w) in self.point_widths.iter().enumerate() {
            linear(format!("encoder.point.{i}"), width, w);
            width = w;
        }
        linear("encoder.pool.0".into(), width, self.pool_hidden);
        linear("encoder.pool.1".into(), self.pool_hidden, self.latent_dim);
        for dir in [Direction::Forward, Direction::Backward] {
            let input = 3 + if self.conditioned(dir) { self.latent_dim } else { 0 };
            for t in 0..self.blocks {
                let prefix = format!("{}.block.{t}", dir.prefix());
                linear(format!("{prefix}.0"), input, self.block_hidden);
                linear(format!("{prefix}.1"), self.block_hidden, self.block_hidden);
                linear(format!("{prefix}.2"), self.block_hidden, 3);
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layout().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }

    fn conditioned(&self, dir: Direction) -> bool {
        dir == Direction::Forward || self.backward_conditioned
    }
}

/// Which deformation network to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Sphere to shape.
    Forward,
    /// Shape to sphere.
    Backward,
}

impl Direction {
    fn prefix(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// Latent summary of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode(pub Vec<f64>);

impl LatentCode {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Named parameter tensors in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: ModelConfig,
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ModelParams {
    /// Fan-in scaled Gaussian initialization.
    ///
    /// Layers followed by ReLU draw weights from `N(0, 2 / fan_in)`, all other
    /// weights from `N(0, 1 / fan_in)`. Biases start at zero, and the output
    /// layer of every deformation block is entirely zero so both deformation
    /// networks start as the identity map.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::seeded(seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, shape) in config.layout() {
            let numel: usize = shape.iter().product();
            let data = if name.ends_with(".bias") || is_block_output(&name) {
                vec![0.0; numel]
            } else {
                let gain = if name.starts_with("encoder.point") || name == "encoder.pool.0.weight" {
                    2.0
                } else {
                    1.0
                };
                let std = (gain / shape[0] as f64).sqrt();
                (0..numel)
                    .map(|_| std * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            };
            tensors.push(Tensor::new(shape, data)?);
            names.push(name);
        }
        Ok(Self {
            config: config.clone(),
            names,
            tensors,
        })
    }

    /// Rebuilds parameters from named tensors, validating them against the
    /// architecture.
    pub fn from_named(config: &ModelConfig, named: Vec<(String, Tensor)>) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        if layout.len() != named.len() {
            return Err(Error::Shape(format!(
                "architecture has {} parameters, got {}",
                layout.len(),
                named.len()
            )));
        }
        let mut names = Vec::with_capacity(named.len());
        let mut tensors = Vec::with_capacity(named.len());
        for ((want_name, want_shape), (name, t)) in layout.into_iter().zip(named) {
            if want_name != name || want_shape != t.shape() {
                return Err(Error::Shape(format!(
                    "expected {want_name} {want_shape:?}, got {name} {:?}",
                    t.shape()
                )));
            }
            names.push(name);
            tensors.push(t);
        }
        Ok(Self {
            config: config.clone(),
            names,
            tensors,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index_of(name).map(|i| &mut self.tensors[i])
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Puts every tensor on `g` as a differentiable leaf.
    pub fn bind(&self, g: &mut Graph) -> Result<BoundParams> {
        let vars = self
            .tensors
            .iter()
            .map(|t| g.param(t.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundParams {
            config: self.config.clone(),
            names: self.names.clone(),
            vars,
        })
    }

    /// Like [`ModelParams::bind`] but places tensors as constants, for
    /// inference without gradient bookkeeping.
    pub fn bind_constant(&self, g: &mut Graph) -> Result<BoundParams> {
        let vars = self
            .tensors
            .iter()
            .map(|t| g.constant(t.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundParams {
            config: self.config.clone(),
            names: self.names.clone(),
            vars,
        })
    }

    /// Binds tensor `index` as the given graph variable and every other
    /// tensor as a constant. Used to differentiate with respect to one
    /// parameter at a time.
    pub fn bind_with(&self, g: &mut Graph, index: usize, var: Var) -> Result<BoundParams> {
        if index >= self.tensors.len() || g.shape(var) != self.tensors[index].shape() {
            return Err(Error::Shape(format!(
                "cannot bind a {:?} variable as parameter {index}",
                g.shape(var)
            )));
        }
        let vars = self
            .tensors
            .iter()
            .enumerate()
            .map(|(i, t)| if i == index { Ok(var) } else { g.constant(t.clone()) })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundParams {
            config: self.config.clone(),
            names: self.names.clone(),
            vars,
        })
    }
}

fn is_block_output(name: &str) -> bool {
    (name.starts_with("forward.block") || name.starts_with("backward.block"))
        && (name.ends_with(".2.weight") || name.ends_with(".2.bias"))
}

/// Parameters placed on a graph.
#[derive(Debug, Clone)]
pub struct BoundParams {
    config: ModelConfig,
    names: Vec<String>,
    vars: Vec<Var>,
}

impl BoundParams {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn var(&self, name: &str) -> Result<Var> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vars[i])
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter {name}")))
    }

    fn linear(&self, g: &mut Graph, x: Var, layer: &str) -> Result<Var> {
        let w = self.var(&format!("{layer}.weight"))?;
        let b = self.var(&format!("{layer}.bias"))?;
        let h = g.matmul(x, w)?;
        g.add(h, b)
    }

    /// Latent code (`1 x d`) of an `n x 3` point tensor.
    pub fn encode(&self, g: &mut Graph, points: Var) -> Result<Var> {
        check_points(g, points)?;
        let mut h = points;
        for i in 0..self.config.point_widths.len() {
            h = self.linear(g, h, &format!("encoder.point.{i}"))?;
            h = g.relu(h)?;
        }
        let pooled = g.reduce_max(h, Some(0))?;
        let h = self.linear(g, pooled, "encoder.pool.0")?;
        let h = g.relu(h)?;
        self.linear(g, h, "encoder.pool.1")
    }

    /// Applies the residual blocks of `dir` to an `n x 3` point tensor.
    pub fn deform(&self, g: &mut Graph, points: Var, code: Var, dir: Direction) -> Result<Var> {
        check_points(g, points)?;
        let d = self.config.latent_dim;
        if g.shape(code) != [1, d] {
            return Err(Error::Shape(format!(
                "latent code has shape {:?}, expected [1, {d}]",
                g.shape(code)
            )));
        }
        let conditioned = self.config.conditioned(dir);
        let xyz_rows = [0, 1, 2];
        let code_rows: Vec<usize> = (3..3 + d).collect();

        let mut x = points;
        for t in 0..self.config.blocks {
            let prefix = format!("{}.block.{t}", dir.prefix());
            // concat(x, z) @ W splits into x @ W[..3] + z @ W[3..]; the code
            // term is computed once and broadcast over points.
            let w0 = self.var(&format!("{prefix}.0.weight"))?;
            let b0 = self.var(&format!("{prefix}.0.bias"))?;
            let mut h = if conditioned {
                let wx = g.gather_rows(w0, &xyz_rows)?;
                let wz = g.gather_rows(w0, &code_rows)?;
                let hx = g.matmul(x, wx)?;
                let hz = g.matmul(code, wz)?;
                let hz = g.add(hz, b0)?;
                g.add(hx, hz)?
            } else {
                let hx = g.matmul(x, w0)?;
                g.add(hx, b0)?
            };
            h = g.tanh(h)?;
            h = self.linear(g, h, &format!("{prefix}.1"))?;
            h = g.tanh(h)?;
            let offset = self.linear(g, h, &format!("{prefix}.2"))?;
            x = g.add(x, offset)?;
        }
        Ok(x)
    }

    /// Encodes `target` and runs both deformation paths.
    ///
    /// Returns `(code, forward_out, backward_out)`.
    pub fn reconstruct(&self, g: &mut Graph, target: Var, sphere: Var) -> Result<(Var, Var, Var)> {
        let code = self.encode(g, target)?;
        let forward = self.deform(g, sphere, code, Direction::Forward)?;
        let backward = self.deform(g, target, code, Direction::Backward)?;
        Ok((code, forward, backward))
    }
}

fn check_points(g: &Graph, v: Var) -> Result<()> {
    let s = g.shape(v);
    if s.len() != 2 || s[1] != 3 || s[0] == 0 {
        return Err(Error::Shape(format!("expected an n x 3 point tensor, got {s:?}")));
    }
    Ok(())
}

/// `n x 3` tensor holding the cloud's coordinates.
pub fn cloud_tensor(cloud: &PointCloud) -> Tensor {
    Tensor::new(vec![cloud.len(), 3], cloud.to_flat()).expect("n x 3 layout")
}

fn tensor_cloud(t: &Tensor) -> Result<PointCloud> {
    PointCloud::from_flat(t.data())
}

/// Latent code of `cloud`.
pub fn encode(cloud: &PointCloud, params: &ModelParams) -> Result<LatentCode> {
    let mut g = Graph::new();
    let bound = params.bind_constant(&mut g)?;
    let x = g.constant(cloud_tensor(cloud))?;
    let z = bound.encode(&mut g, x)?;
    Ok(LatentCode(g.value(z).data().to_vec()))
}

/// Deforms `cloud` through the blocks of `dir` conditioned on `code`.
pub fn deform(
    cloud: &PointCloud,
    code: &LatentCode,
    params: &ModelParams,
    dir: Direction,
) -> Result<PointCloud> {
    let mut g = Graph::new();
    let bound = params.bind_constant(&mut g)?;
    let x = g.constant(cloud_tensor(cloud))?;
    let z = g.constant(Tensor::matrix(1, code.dim(), code.0.clone())?)?;
    let out = bound.deform(&mut g, x, z, dir)?;
    tensor_cloud(g.value(out))
}

/// Deforms the vertices in `points` with the forward network; used for mesh
/// export where the points are icosphere vertices.
pub fn deform_points(points: &[Vec3], code: &LatentCode, params: &ModelParams) -> Result<Vec<Vec3>> {
    let cloud = PointCloud::new(points.to_vec())?;
    Ok(deform(&cloud, code, params, Direction::Forward)?.into_points())
}

/// Encodes `target`, then returns `(forward_out, backward_out)`.
pub fn reconstruct(
    target: &PointCloud,
    sphere: &PointCloud,
    params: &ModelParams,
) -> Result<(PointCloud, PointCloud)> {
    let mut g = Graph::new();
    let bound = params.bind_constant(&mut g)?;
    let t = g.constant(cloud_tensor(target))?;
    let s = g.constant(cloud_tensor(sphere))?;
    let (_, fwd, bwd) = bound.reconstruct(&mut g, t, s)?;
    Ok((tensor_cloud(g.value(fwd))?, tensor_cloud(g.value(bwd))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_sphere;

    fn small() -> ModelConfig {
        ModelConfig {
            latent_dim: 8,
            blocks: 2,
            point_widths: vec![8, 12, 16],
            pool_hidden: 16,
            block_hidden: 10,
            backward_conditioned: true,
        }
    }

    /// Makes every block output layer nonzero so deformations are not the
    /// identity.
    fn perturbed(config: &ModelConfig, seed: u64) -> ModelParams {
        let mut p = ModelParams::init(config, seed).unwrap();
        let names: Vec<String> = p.names().to_vec();
        for (i, name) in names.iter().enumerate() {
            if is_block_output(name) {
                for (j, v) in p.tensors_mut()[i].data_mut().iter_mut().enumerate() {
                    *v = 0.1 * ((j * 7 + i) as f64).sin();
                }
            }
        }
        p
    }

    #[test]
    fn default_parameter_count() {
        // encoder.point: (3*64+64) + (64*128+128) + (128*256+256) = 41_600
        // encoder.pool:  2 * (256*256+256)                         = 131_584
        // one block:     (259*128+128) + (128*128+128) + (128*3+3)  = 50_179
        // 2 directions x 3 blocks                                   = 301_074
        let expected = 41_600 + 131_584 + 301_074;
        assert_eq!(expected, 474_258);
        assert_eq!(ModelConfig::default().parameter_count(), expected);
        let p = ModelParams::init(&ModelConfig::default(), 0).unwrap();
        assert_eq!(p.parameter_count(), expected);
    }

    #[test]
    fn unconditioned_backward_count() {
        let cfg = ModelConfig {
            backward_conditioned: false,
            ..ModelConfig::default()
        };
        assert_eq!(cfg.parameter_count(), 474_258 - 3 * 256 * 128);
    }

    #[test]
    fn init_is_deterministic() {
        let a = ModelParams::init(&small(), 5).unwrap();
        let b = ModelParams::init(&small(), 5).unwrap();
        let c = ModelParams::init(&small(), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn deform_is_identity_at_init() {
        let p = ModelParams::init(&small(), 1).unwrap();
        let x = sample_sphere(20, 2).unwrap();
        let z = LatentCode((0..8).map(|i| i as f64 - 3.0).collect());
        assert_eq!(deform(&x, &z, &p, Direction::Forward).unwrap(), x);
        assert_eq!(deform(&x, &z, &p, Direction::Backward).unwrap(), x);
    }

    #[test]
    fn encode_is_permutation_invariant() {
        let p = perturbed(&small(), 3);
        let x = sample_sphere(30, 4).unwrap();
        let mut pts = x.points().to_vec();
        pts.reverse();
        pts.swap(3, 17);
        let y = PointCloud::new(pts).unwrap();
        assert_eq!(encode(&x, &p).unwrap(), encode(&y, &p).unwrap());
    }

    #[test]
    fn duplicated_points_encode_identically() {
        let p = perturbed(&small(), 3);
        let x = sample_sphere(12, 4).unwrap();
        let mut doubled = x.points().to_vec();
        doubled.extend_from_slice(x.points());
        let y = PointCloud::new(doubled).unwrap();
        assert_eq!(encode(&x, &p).unwrap(), encode(&y, &p).unwrap());
    }

    #[test]
    fn singleton_pool_passes_features_through() {
        let p = perturbed(&small(), 3);
        let x = PointCloud::new(vec![Vec3::new(0.3, -0.2, 0.9)]).unwrap();
        let z = encode(&x, &p).unwrap();

        // Independent evaluation with plain loops.
        let layer = |input: &[f64], name: &str, relu: bool| -> Vec<f64> {
            let w = p.get(&format!("{name}.weight")).unwrap();
            let b = p.get(&format!("{name}.bias")).unwrap();
            let (fi, fo) = (w.shape()[0], w.shape()[1]);
            (0..fo)
                .map(|j| {
                    let s: f64 = (0..fi).map(|i| input[i] * w.data()[i * fo + j]).sum::<f64>() + b.data()[j];
                    if relu { s.max(0.0) } else { s }
                })
                .collect()
        };
        let mut h = vec![0.3, -0.2, 0.9];
        for i in 0..3 {
            h = layer(&h, &format!("encoder.point.{i}"), true);
        }
        h = layer(&h, "encoder.pool.0", true);
        h = layer(&h, "encoder.pool.1", false);
        for (a, b) in z.0.iter().zip(&h) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn deform_is_permutation_equivariant() {
        let p = perturbed(&small(), 8);
        let x = sample_sphere(25, 9).unwrap();
        let z = encode(&x, &p).unwrap();
        let perm: Vec<usize> = (0..25).map(|i| (i * 7) % 25).collect();
        let px = PointCloud::new(perm.iter().map(|&i| x.points()[i]).collect()).unwrap();
        let out = deform(&x, &z, &p, Direction::Forward).unwrap();
        let pout = deform(&px, &z, &p, Direction::Forward).unwrap();
        assert_eq!(pout.len(), 25);
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(pout.points()[k], out.points()[i]);
        }
    }

    #[test]
    fn split_weight_matches_explicit_concat() {
        let cfg = small();
        let p = perturbed(&cfg, 10);
        let x = sample_sphere(6, 11).unwrap();
        let mut g = Graph::new();
        let bound = p.bind(&mut g).unwrap();
        let xv = g.constant(cloud_tensor(&x)).unwrap();
        let z = bound.encode(&mut g, xv).unwrap();

        // First block hidden pre-activation through an explicit concat.
        let rows: Vec<usize> = vec![0; 6];
        let zr = g.gather_rows(z, &rows).unwrap();
        let cat = g.concat(&[xv, zr]).unwrap();
        let w = bound.var("forward.block.0.0.weight").unwrap();
        let b = bound.var("forward.block.0.0.bias").unwrap();
        let h = g.matmul(cat, w).unwrap();
        let h = g.add(h, b).unwrap();
        let h = g.tanh(h).unwrap();
        let h = bound.linear(&mut g, h, "forward.block.0.1").unwrap();
        let h = g.tanh(h).unwrap();
        let off = bound.linear(&mut g, h, "forward.block.0.2").unwrap();
        let explicit = g.add(xv, off).unwrap();

        let one_block = BoundParams {
            config: ModelConfig { blocks: 1, ..cfg },
            ..bound.clone()
        };
        let fused = one_block.deform(&mut g, xv, z, Direction::Forward).unwrap();
        for (a, b) in g.value(explicit).data().iter().zip(g.value(fused).data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruct_identity_at_init() {
        let p = ModelParams::init(&small(), 1).unwrap();
        let target = sample_sphere(40, 3).unwrap();
        let sphere = sample_sphere(17, 4).unwrap();
        let (f, b) = reconstruct(&target, &sphere, &p).unwrap();
        assert_eq!(f, sphere);
        assert_eq!(b, target);
    }

    #[test]
    fn wrong_code_width_is_a_shape_error() {
        let p = ModelParams::init(&small(), 1).unwrap();
        let x = sample_sphere(4, 3).unwrap();
        let z = LatentCode(vec![0.0; 5]);
        assert!(matches!(deform(&x, &z, &p, Direction::Forward), Err(Error::Shape(_))));
    }

    #[test]
    fn from_named_rejects_bad_shapes() {
        let p = ModelParams::init(&small(), 1).unwrap();
        let mut named: Vec<(String, Tensor)> =
            p.iter().map(|(n, t)| (n.to_string(), t.clone())).collect();
        assert_eq!(ModelParams::from_named(&small(), named.clone()).unwrap(), p);
        named[0].1 = Tensor::zeros(&[4, 8]);
        assert!(ModelParams::from_named(&small(), named).is_err());
    }
}
