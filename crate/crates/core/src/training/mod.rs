//! Optimizer, configuration and the training loop.
//!
//! Every random draw in a run is derived from `(config.seed, step, shape)`,
//! so a run resumed from a checkpoint replays exactly the steps an
//! uninterrupted run would have taken.

mod adam;
mod config;

pub use adam::{adam_step, adam_update, OptimizerState};
pub use config::{TrainConfig, CONFIG_KEYS};

use rand::seq::index;

use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::geometry::{knn, sample_sphere, NeighborhoodMap, PointCloud};
use crate::loss::{total_loss, LossInputs};
use crate::model::{cloud_tensor, ModelParams};
use crate::rng;

const BATCH_TAG: u64 = 0xBA7C;
const SPHERE_TAG: u64 = 0x5F4E;
const INIT_TAG: u64 = 0x1417;

/// Loss components of one step, averaged over the batch. Components are
/// unweighted; `total` is the weighted objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: u64,
    pub total: f64,
    pub chamfer_fwd: f64,
    pub deform_fwd: f64,
    pub chamfer_bwd: f64,
    pub deform_bwd: f64,
}

/// Parameters plus optimizer state; `optimizer.step` counts completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: ModelParams,
    pub optimizer: OptimizerState,
}

impl TrainState {
    /// Fresh parameters for `config`, seeded from `config.seed`.
    pub fn init(config: &TrainConfig) -> Result<Self> {
        let params = ModelParams::init(&config.model, rng::derive_seed(config.seed, &[INIT_TAG]))?;
        let optimizer = OptimizerState::new(&params);
        Ok(Self { params, optimizer })
    }

    pub fn step(&self) -> u64 {
        self.optimizer.step
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub history: Vec<LossRecord>,
}

/// Seed of the sphere paired with shape `shape` at `step`.
pub fn sphere_seed(config: &TrainConfig, step: u64, shape: usize) -> u64 {
    if config.fixed_sphere {
        rng::derive_seed(config.seed, &[SPHERE_TAG, shape as u64])
    } else {
        rng::derive_seed(config.seed, &[SPHERE_TAG, step, shape as u64])
    }
}

/// Dataset indices used at `step`, sorted ascending.
pub fn batch_indices(config: &TrainConfig, step: u64, dataset_len: usize) -> Vec<usize> {
    if config.batch_size >= dataset_len {
        return (0..dataset_len).collect();
    }
    let mut r = rng::seeded(rng::derive_seed(config.seed, &[BATCH_TAG, step]));
    let mut picked = index::sample(&mut r, dataset_len, config.batch_size).into_vec();
    picked.sort_unstable();
    picked
}

/// Trains from scratch for `config.steps` steps.
pub fn train(targets: &[PointCloud], config: &TrainConfig) -> Result<TrainOutcome> {
    let state = TrainState::init(config)?;
    train_from(targets, config, state, |_| Ok(()))
}

/// Continues training `state` until `config.steps` steps have completed.
///
/// `on_checkpoint` runs after every `config.checkpoint_interval` steps.
pub fn train_from<F>(
    targets: &[PointCloud],
    config: &TrainConfig,
    mut state: TrainState,
    mut on_checkpoint: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&TrainState) -> Result<()>,
{
    config.validate()?;
    if targets.is_empty() {
        return Err(Error::InvalidArgument("training dataset is empty".into()));
    }
    if state.params.config() != &config.model {
        return Err(Error::InvalidArgument(
            "checkpoint architecture differs from the configured one".into(),
        ));
    }
    state.optimizer.check(&state.params)?;

    let target_nbrs: Vec<NeighborhoodMap> = targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            knn(t, config.k).map_err(|e| Error::InvalidArgument(format!("target {i}: {e}")))
        })
        .collect::<Result<_>>()?;
    let target_tensors: Vec<Tensor> = targets.iter().map(cloud_tensor).collect();
    let mut fixed_spheres: Vec<Option<(Tensor, NeighborhoodMap)>> = vec![None; targets.len()];

    let mut history = Vec::new();
    while state.optimizer.step < config.steps {
        let step = state.optimizer.step;
        let batch = batch_indices(config, step, targets.len());
        let mut grads: Vec<Tensor> = state
            .params
            .tensors()
            .iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect();
        let mut sums = [0.0; 5];

        for &i in &batch {
            let n = config.sphere_points.unwrap_or(targets[i].len());
            let fresh = || -> Result<(Tensor, NeighborhoodMap)> {
                let sphere = sample_sphere(n, sphere_seed(config, step, i))?;
                let nbrs = knn(&sphere, config.k)?;
                Ok((cloud_tensor(&sphere), nbrs))
            };
            let owned;
            let (sphere, sphere_nbrs) = if config.fixed_sphere {
                if fixed_spheres[i].is_none() {
                    fixed_spheres[i] = Some(fresh()?);
                }
                let (t, nb) = fixed_spheres[i].as_ref().expect("cached above");
                (t, nb)
            } else {
                owned = fresh()?;
                (&owned.0, &owned.1)
            };

            let at_step = |e: Error| match e {
                Error::NonFinite(msg) => Error::NonFinite(format!("step {}: {msg}", step + 1)),
                other => other,
            };
            let mut g = Graph::new();
            let bound = state.params.bind(&mut g)?;
            let target = g.constant(target_tensors[i].clone())?;
            let sphere_v = g.constant(sphere.clone())?;
            let (_, fwd, bwd) = bound.reconstruct(&mut g, target, sphere_v).map_err(at_step)?;
            let terms = total_loss(
                &mut g,
                LossInputs {
                    target,
                    sphere: sphere_v,
                    forward_out: fwd,
                    backward_out: bwd,
                    sphere_nbrs,
                    target_nbrs: &target_nbrs[i],
                },
                &config.weights,
                config.deform_loss_form,
            )
            .map_err(at_step)?;

            let value = |v| g.value(v).item();
            let parts = [
                value(terms.total)?,
                value(terms.chamfer_fwd)?,
                value(terms.deform_fwd)?,
                value(terms.chamfer_bwd)?,
                value(terms.deform_bwd)?,
            ];
            if parts.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("step {}: loss is {parts:?}", step + 1)));
            }
            for (s, p) in sums.iter_mut().zip(parts) {
                *s += p;
            }

            let mut shape_grads = g.backward(terms.total)?;
            for (acc, &v) in grads.iter_mut().zip(bound.vars()) {
                let gv = shape_grads.take(v);
                for (a, b) in acc.data_mut().iter_mut().zip(gv.data()) {
                    *a += b;
                }
            }
        }

        let scale = 1.0 / batch.len() as f64;
        for gr in &mut grads {
            gr.data_mut().iter_mut().for_each(|v| *v *= scale);
        }
        adam_step(&mut state.params, &grads, &mut state.optimizer, config)?;
        if let Some(t) = state.params.tensors().iter().find(|t| t.data().iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite(format!(
                "step {}: parameter update produced non-finite values ({:?})",
                step + 1,
                t.shape()
            )));
        }

        let [total, chamfer_fwd, deform_fwd, chamfer_bwd, deform_bwd] = sums.map(|s| s * scale);
        history.push(LossRecord {
            step: state.optimizer.step,
            total,
            chamfer_fwd,
            deform_fwd,
            chamfer_bwd,
            deform_bwd,
        });

        if config.checkpoint_interval > 0 && state.optimizer.step.is_multiple_of(config.checkpoint_interval) {
            on_checkpoint(&state)?;
        }
    }
    Ok(TrainOutcome { state, history })
}
