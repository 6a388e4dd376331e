use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cost::{gradient_indexed, total_cost};
use super::{LossConfig, Sample, TrainConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{init_params, ModelParams};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_cost: f64,
    pub val_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// Parameters of the best validation epoch.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Validation cost of the initial parameters.
    pub initial_val_cost: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            theta[i] -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Trains a `k`-prototype model on standardized samples.
///
/// Parameters are initialized from `train` with a seed derived from
/// `train_cfg.seed`; minibatches are reshuffled every epoch. Training stops
/// after `patience` epochs without a validation improvement and returns the
/// parameters of the best validation epoch.
pub fn fit(
    train: &[Sample],
    val: &[Sample],
    k: usize,
    loss_cfg: &LossConfig,
    train_cfg: &TrainConfig,
    exec: Exec,
) -> Result<FitResult> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::EmptyDataset);
    }
    loss_cfg.validate()?;
    train_cfg.validate()?;
    let xs: Vec<Vec<f64>> = train.iter().map(|s| s.x.clone()).collect();
    let ys: Vec<f64> = train.iter().map(|s| s.target.y).collect();
    let mut params = init_params(&xs, &ys, k, derive_seed(train_cfg.seed, "init"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(train_cfg.seed, "batching"));

    let initial_val_cost = total_cost(&params, val, loss_cfg, exec)?;
    let mut best = (initial_val_cost, params.clone(), 0usize);
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut adam = Adam::new(params.n_params(), train_cfg.learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut flat = params.to_flat();

    for epoch in 1..=train_cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut cost_sum = 0.0;
        for batch in order.chunks(train_cfg.batch_size) {
            let (cost, grad) = gradient_indexed(&params, train, batch, loss_cfg, exec)?;
            cost_sum += cost * batch.len() as f64;
            adam.step(&mut flat, &grad.to_flat());
            params.set_from_flat(&flat);
        }
        if !flat.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite parameters after epoch {epoch}"
            )));
        }
        let val_cost = total_cost(&params, val, loss_cfg, exec)?;
        history.push(EpochRecord {
            epoch,
            train_cost: cost_sum / train.len() as f64,
            val_cost,
        });
        if val_cost < best.0 {
            best = (val_cost, params.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= train_cfg.patience {
                break;
            }
        }
    }
    let (_, params, best_epoch) = best;
    Ok(FitResult {
        params,
        history,
        best_epoch,
        initial_val_cost,
    })
}

/// Writes `epoch,train_cost,val_cost` rows.
pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "epoch,train_cost,val_cost")?;
    for r in history {
        writeln!(out, "{},{},{}", r.epoch, r.train_cost, r.val_cost)?;
    }
    out.flush()?;
    Ok(())
}
