//! Censoring-aware generalized likelihood loss, regularized cost, analytic
//! gradients and the minibatch Adam training loop.

mod cost;
mod fit;
mod loss;

use serde::{Deserialize, Serialize};

pub use cost::{gradient, total_cost};
pub use fit::{fit, write_history_csv, EpochRecord, FitResult};
pub use loss::loss_sample;

/// Loss hyperparameters: belief/plausibility weight `lambda`, observation
/// half-width `epsilon` (log-time units), and the precision and scale
/// penalties `xi` and `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub xi: f64,
    pub rho: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda: 0.1,
            epsilon: 1e-6,
            xi: 0.1,
            rho: 0.1,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = (0.0..=1.0).contains(&self.lambda)
            && self.epsilon > 0.0
            && self.epsilon.is_finite()
            && self.xi >= 0.0
            && self.xi.is_finite()
            && self.rho >= 0.0
            && self.rho.is_finite();
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidParameter(format!("invalid loss config {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 1000,
            patience: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.patience > 0
            && self.patience <= self.max_epochs;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidParameter(format!("invalid training config {self:?}")))
        }
    }
}

/// Observed log-time `y` and event flag (`true` = event observed,
/// `false` = right-censored at `y`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservedTarget {
    pub y: f64,
    pub event: bool,
}

/// Standardized features with their observed target.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub target: ObservedTarget,
}

impl Sample {
    /// Converts a record on the standardized feature scale, taking `y = log t`.
    pub fn from_record(r: &crate::data::SurvivalRecord) -> Self {
        Sample {
            x: r.x.clone(),
            target: ObservedTarget {
                y: r.log_t(),
                event: r.event,
            },
        }
    }
}
