use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::loss::{DeformLossForm, LossWeights};
use crate::model::ModelConfig;

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: u64,
    /// Clouds per step; gradients are averaged over the batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Neighborhood size for the deformation loss.
    pub k: usize,
    /// Sphere sample size; `None` matches each target's size.
    pub sphere_points: Option<usize>,
    pub weights: LossWeights,
    pub deform_loss_form: DeformLossForm,
    pub seed: u64,
    /// Steps between periodic checkpoints; 0 disables them.
    pub checkpoint_interval: u64,
    /// Reuse one sphere sample per shape instead of drawing a fresh one
    /// every step.
    pub fixed_sphere: bool,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 3000,
            batch_size: 1,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            k: 8,
            sphere_points: None,
            weights: LossWeights::default(),
            deform_loss_form: DeformLossForm::Squared,
            seed: 0,
            checkpoint_interval: 0,
            fixed_sphere: false,
            model: ModelConfig::default(),
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], in canonical output order.
pub const CONFIG_KEYS: &[&str] = &[
    "steps",
    "batch_size",
    "learning_rate",
    "beta1",
    "beta2",
    "epsilon",
    "k",
    "sphere_points",
    "w_chamfer",
    "w_deform",
    "w_backward",
    "deform_loss_form",
    "seed",
    "checkpoint_interval",
    "fixed_sphere",
    "latent_dim",
    "blocks",
    "point_widths",
    "pool_hidden",
    "block_hidden",
    "backward_conditioned",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("bad boolean {value:?} for {key}"))),
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidArgument("adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be > 0".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if self.sphere_points == Some(0) {
            return Err(Error::InvalidArgument("sphere_points must be positive".into()));
        }
        self.weights.validate()?;
        self.model.validate()
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "steps" => self.steps = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "beta2" => self.beta2 = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "sphere_points" => {
                self.sphere_points = match value {
                    "auto" | "" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "w_chamfer" => self.weights.w_chamfer = parse(key, value)?,
            "w_deform" => self.weights.w_deform = parse(key, value)?,
            "w_backward" => self.weights.w_backward = parse(key, value)?,
            "deform_loss_form" | "deform-loss-form" => self.deform_loss_form = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "checkpoint_interval" => self.checkpoint_interval = parse(key, value)?,
            "fixed_sphere" => self.fixed_sphere = parse_bool(key, value)?,
            "latent_dim" => self.model.latent_dim = parse(key, value)?,
            "blocks" => self.model.blocks = parse(key, value)?,
            "point_widths" => {
                self.model.point_widths = value
                    .split(',')
                    .map(|w| parse(key, w.trim()))
                    .collect::<Result<_>>()?
            }
            "pool_hidden" => self.model.pool_hidden = parse(key, value)?,
            "block_hidden" => self.model.block_hidden = parse(key, value)?,
            "backward_conditioned" => self.model.backward_conditioned = parse_bool(key, value)?,
            other => return Err(Error::InvalidArgument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are ignored.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key = value", i + 1))
            })?;
            config
                .set(key, value)
                .map_err(|e| Error::InvalidArgument(format!("config line {}: {e}", i + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Canonical `key = value` rendering; parses back to an equal config.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    /// `(key, value)` pairs in [`CONFIG_KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let m = &self.model;
        let values = [
            self.steps.to_string(),
            self.batch_size.to_string(),
            format!("{:e}", self.learning_rate),
            format!("{:e}", self.beta1),
            format!("{:e}", self.beta2),
            format!("{:e}", self.epsilon),
            self.k.to_string(),
            self.sphere_points.map_or("auto".to_string(), |n| n.to_string()),
            format!("{:e}", self.weights.w_chamfer),
            format!("{:e}", self.weights.w_deform),
            format!("{:e}", self.weights.w_backward),
            self.deform_loss_form.as_str().to_string(),
            self.seed.to_string(),
            self.checkpoint_interval.to_string(),
            self.fixed_sphere.to_string(),
            m.latent_dim.to_string(),
            m.blocks.to_string(),
            m.point_widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","),
            m.pool_hidden.to_string(),
            m.block_hidden.to_string(),
            m.backward_conditioned.to_string(),
        ];
        CONFIG_KEYS.iter().copied().zip(values).collect()
    }
}
