//! Chamfer distance, the neighborhood-preserving deformation loss and the
//! weighted training objective.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::{NeighborhoodMap, PointCloud};

/// Weights of the training objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_chamfer: f64,
    pub w_deform: f64,
    pub w_backward: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_chamfer: 1.0,
            w_deform: 0.1,
            w_backward: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_chamfer", self.w_chamfer),
            ("w_deform", self.w_deform),
            ("w_backward", self.w_backward),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

/// How the per-pair change in squared distance is penalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DeformLossForm {
    /// `(|p_i - p_j|^2 - |q_i - q_j|^2)^2`
    #[default]
    Squared,
    /// `||p_i - p_j|^2 - |q_i - q_j|^2|`
    Absolute,
}

impl DeformLossForm {
    pub fn as_str(self) -> &'static str {
        match self {
            DeformLossForm::Squared => "squared",
            DeformLossForm::Absolute => "absolute",
        }
    }
}

impl std::str::FromStr for DeformLossForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(DeformLossForm::Squared),
            "absolute" => Ok(DeformLossForm::Absolute),
            other => Err(Error::InvalidArgument(format!(
                "unknown deform loss form {other:?} (expected squared or absolute)"
            ))),
        }
    }
}

fn points_of<'a>(g: &'a Graph, v: Var, what: &str) -> Result<&'a [f64]> {
    let s = g.shape(v);
    if s.len() != 2 || s[1] != 3 {
        return Err(Error::Shape(format!("{what}: expected n x 3, got {s:?}")));
    }
    if s[0] == 0 {
        return Err(Error::InvalidArgument(format!("{what}: empty point set")));
    }
    Ok(g.value(v).data())
}

/// Index of the nearest point of `to` for every point of `from`, ties broken
/// by lower index.
pub fn nearest_indices(from: &[f64], to: &[f64]) -> Vec<usize> {
    from.chunks_exact(3)
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, q) in to.chunks_exact(3).enumerate() {
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// `mean_i min_j |x_i - y_j|^2`, differentiable through the selected `y_j`.
fn directed_chamfer(g: &mut Graph, x: Var, y: Var) -> Result<Var> {
    let nn = nearest_indices(points_of(g, x, "chamfer")?, points_of(g, y, "chamfer")?);
    let matched = g.gather_rows(y, &nn)?;
    let diff = g.sub(x, matched)?;
    let sq = g.square(diff)?;
    let per_point = g.reduce_sum(sq, Some(1))?;
    g.reduce_mean(per_point, None)
}

/// Symmetric Chamfer distance
/// `mean_i min_j |x_i - y_j|^2 + mean_j min_i |y_j - x_i|^2`.
pub fn chamfer(g: &mut Graph, x: Var, y: Var) -> Result<Var> {
    let xy = directed_chamfer(g, x, y)?;
    let yx = directed_chamfer(g, y, x)?;
    g.add(xy, yx)
}

/// Chamfer distance between two clouds, without a graph.
pub fn chamfer_distance(x: &PointCloud, y: &PointCloud) -> f64 {
    let directed = |a: &PointCloud, b: &PointCloud| -> f64 {
        let (fa, fb) = (a.to_flat(), b.to_flat());
        let nn = nearest_indices(&fa, &fb);
        let sum: f64 = a
            .points()
            .iter()
            .zip(&nn)
            .map(|(p, &j)| p.distance_squared(b.points()[j]))
            .sum();
        sum / a.len() as f64
    };
    directed(x, y) + directed(y, x)
}

/// Neighborhood-preserving deformation loss
/// `1/(n k) sum_i sum_{j in N(i)} (|p_i - p_j|^2 - |q_i - q_j|^2)^2`
/// where `p` are source points, `q` the deformed points and `N` the
/// neighborhoods built on the source. The source is treated as fixed.
pub fn deform_loss(
    g: &mut Graph,
    source: Var,
    deformed: Var,
    nbrs: &NeighborhoodMap,
    form: DeformLossForm,
) -> Result<Var> {
    let src = points_of(g, source, "deform_loss source")?;
    let n = src.len() / 3;
    let m = points_of(g, deformed, "deform_loss deformed")?.len() / 3;
    if m != n || nbrs.len() != n {
        return Err(Error::Shape(format!(
            "deform_loss: source has {n} points, deformed {m}, neighborhoods {}",
            nbrs.len()
        )));
    }
    let k = nbrs.k();
    let centers: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, k)).collect();
    let others = nbrs.flat();

    let src_d2: Vec<f64> = centers
        .iter()
        .zip(others)
        .map(|(&i, &j)| {
            (0..3)
                .map(|c| (src[3 * i + c] - src[3 * j + c]).powi(2))
                .sum()
        })
        .collect();
    let src_d2 = g.constant(Tensor::matrix(n * k, 1, src_d2)?)?;

    let qi = g.gather_rows(deformed, &centers)?;
    let qj = g.gather_rows(deformed, others)?;
    let diff = g.sub(qi, qj)?;
    let sq = g.square(diff)?;
    let def_d2 = g.reduce_sum(sq, Some(1))?;
    let change = g.sub(src_d2, def_d2)?;
    let penalty = match form {
        DeformLossForm::Squared => g.square(change)?,
        DeformLossForm::Absolute => g.abs(change)?,
    };
    g.reduce_mean(penalty, None)
}

/// Graph nodes for every term of the objective.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub total: Var,
    pub chamfer_fwd: Var,
    pub deform_fwd: Var,
    pub chamfer_bwd: Var,
    pub deform_bwd: Var,
}

/// Inputs to [`total_loss`].
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    pub target: Var,
    pub sphere: Var,
    pub forward_out: Var,
    pub backward_out: Var,
    pub sphere_nbrs: &'a NeighborhoodMap,
    pub target_nbrs: &'a NeighborhoodMap,
}

/// `w_c * CD(fwd, target) + w_d * DL(sphere, fwd)
///  + w_b * (CD(bwd, sphere) + w_d * DL(target, bwd))`.
pub fn total_loss(
    g: &mut Graph,
    inputs: LossInputs<'_>,
    w: &LossWeights,
    form: DeformLossForm,
) -> Result<LossTerms> {
    w.validate()?;
    let chamfer_fwd = chamfer(g, inputs.forward_out, inputs.target)?;
    let deform_fwd = deform_loss(g, inputs.sphere, inputs.forward_out, inputs.sphere_nbrs, form)?;
    let chamfer_bwd = chamfer(g, inputs.backward_out, inputs.sphere)?;
    let deform_bwd = deform_loss(g, inputs.target, inputs.backward_out, inputs.target_nbrs, form)?;

    let a = g.scale(chamfer_fwd, w.w_chamfer)?;
    let b = g.scale(deform_fwd, w.w_deform)?;
    let c = g.scale(deform_bwd, w.w_deform)?;
    let back = g.add(chamfer_bwd, c)?;
    let back = g.scale(back, w.w_backward)?;
    let fwd = g.add(a, b)?;
    let total = g.add(fwd, back)?;
    Ok(LossTerms {
        total,
        chamfer_fwd,
        deform_fwd,
        chamfer_bwd,
        deform_bwd,
    })
}
