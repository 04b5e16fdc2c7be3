use super::TrainConfig;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Adam moment estimates, aligned with the parameter order of a
/// [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
}

impl OptimizerState {
    pub fn new(params: &ModelParams) -> Self {
        Self::for_tensors(params.tensors())
    }

    pub fn for_tensors(params: &[Tensor]) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|t| Tensor::zeros(t.shape())).collect();
        Self {
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    /// Checks that moment shapes match `params`.
    pub fn check(&self, params: &ModelParams) -> Result<()> {
        self.check_tensors(params.tensors())
    }

    fn check_tensors(&self, params: &[Tensor]) -> Result<()> {
        let ok = self.first_moment.len() == params.len()
            && self.second_moment.len() == params.len()
            && params
                .iter()
                .zip(&self.first_moment)
                .zip(&self.second_moment)
                .all(|((p, m), v)| p.shape() == m.shape() && p.shape() == v.shape());
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("optimizer moments do not match the parameters".into()))
        }
    }
}

/// One bias-corrected Adam update of the model parameters in place.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &[Tensor],
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<()> {
    if let Some(i) = (0..grads.len().min(params.len()))
        .find(|&i| grads[i].shape() != params.tensors()[i].shape())
    {
        return Err(Error::Shape(format!(
            "gradient for {} has shape {:?}, parameter has {:?}",
            params.names()[i],
            grads[i].shape(),
            params.tensors()[i].shape()
        )));
    }
    adam_update(params.tensors_mut(), grads, state, config)
}

/// Adam over a plain list of tensors.
pub fn adam_update(
    params: &mut [Tensor],
    grads: &[Tensor],
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<()> {
    state.check_tensors(params)?;
    if grads.len() != params.len()
        || grads.iter().zip(params.iter()).any(|(g, p)| g.shape() != p.shape())
    {
        return Err(Error::Shape(format!(
            "{} gradients do not match {} parameters",
            grads.len(),
            params.len()
        )));
    }

    state.step += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let t = state.step as f64;
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    let lr = config.learning_rate;
    let eps = config.epsilon;

    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        for (((p, &g), m), v) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
