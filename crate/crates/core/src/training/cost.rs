use super::loss::{loss_sample, loss_with_grad};
use super::{LossConfig, Sample};
use crate::error::{Error, Result};
use crate::exec::{map_chunks, Exec};
use crate::model::{trace, ModelParams};

/// Samples per reduction chunk. Fixed so sums do not depend on threading.
const CHUNK: usize = 32;

fn regularizer(params: &ModelParams, cfg: &LossConfig) -> f64 {
    let k = params.k() as f64;
    let h: f64 = (0..params.k()).map(|i| params.precision(i)).sum();
    let g2: f64 = params.gamma.iter().map(|g| g * g).sum();
    cfg.xi / k * h + cfg.rho / k * g2
}

/// Mean sample loss plus `(ξ/K) Σ h_k + (ρ/K) Σ γ_k²`.
pub fn total_cost(params: &ModelParams, data: &[Sample], cfg: &LossConfig, exec: Exec) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let partial = map_chunks(exec, data, CHUNK, |chunk| -> Result<f64> {
        let mut acc = 0.0;
        for s in chunk {
            acc += loss_sample(&trace(&s.x, params)?.out, &s.target, cfg);
        }
        Ok(acc)
    });
    let mut sum = 0.0;
    for p in partial {
        sum += p?;
    }
    Ok(sum / data.len() as f64 + regularizer(params, cfg))
}

/// Cost of `batch` and its gradient with respect to the stored parameters
/// (`prototypes`, `gamma`, `eta`, `sigma`, `beta`, `beta0`).
pub fn gradient(
    params: &ModelParams,
    batch: &[Sample],
    cfg: &LossConfig,
    exec: Exec,
) -> Result<(f64, ModelParams)> {
    let idx: Vec<usize> = (0..batch.len()).collect();
    gradient_indexed(params, batch, &idx, cfg, exec)
}

pub(crate) fn gradient_indexed(
    params: &ModelParams,
    data: &[Sample],
    idx: &[usize],
    cfg: &LossConfig,
    exec: Exec,
) -> Result<(f64, ModelParams)> {
    if idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let partial = map_chunks(exec, idx, CHUNK, |chunk| -> Result<(f64, ModelParams)> {
        let mut grad = params.zeros_like();
        let mut loss = 0.0;
        for &i in chunk {
            loss += accumulate_sample(params, &data[i], cfg, &mut grad)?;
        }
        Ok((loss, grad))
    });
    let mut loss = 0.0;
    let mut grad = params.zeros_like();
    for p in partial {
        let (l, g) = p?;
        loss += l;
        grad.add_scaled(&g, 1.0);
    }
    let n = idx.len() as f64;
    let mut out = params.zeros_like();
    out.add_scaled(&grad, 1.0 / n);

    let k = params.k() as f64;
    for i in 0..params.k() {
        out.eta[i] += cfg.xi / k * 2.0 * params.eta[i];
        out.gamma[i] += cfg.rho / k * 2.0 * params.gamma[i];
    }
    Ok((loss / n + regularizer(params, cfg), out))
}

/// Adds one sample's loss gradient into `grad` and returns its loss.
fn accumulate_sample(params: &ModelParams, s: &Sample, cfg: &LossConfig, grad: &mut ModelParams) -> Result<f64> {
    let t = trace(&s.x, params)?;
    let (loss, [g_mu, g_s2, g_h]) = loss_with_grad(&t.out, &s.target, cfg);
    if t.total <= 0.0 {
        // vacuous output: the loss is locally constant
        return Ok(loss);
    }
    let total = t.total;
    let (mu, s2) = (t.out.mu(), t.out.sigma2());
    for k in 0..params.k() {
        let w = t.w[k];
        let var_k = params.variance(k);
        let g_w = g_mu * (t.mu_k[k] - mu) / total
            + g_s2 * (2.0 * w * var_k / (total * total) - 2.0 * s2 / total)
            + g_h;
        let g_muk = g_mu * w / total;
        let g_vark = g_s2 * (w / total) * (w / total);

        grad.beta0[k] += g_muk;
        grad.beta[k].iter_mut().zip(&s.x).for_each(|(g, x)| *g += g_muk * x);
        grad.sigma[k] += g_vark * 2.0 * params.sigma[k];
        grad.eta[k] += g_w * t.s[k] * 2.0 * params.eta[k];

        let g_s = g_w * params.precision(k);
        let gamma = params.gamma[k];
        grad.gamma[k] += g_s * (-2.0 * gamma * t.sq_dist[k] * t.s[k]);
        let c = g_s * 2.0 * gamma * gamma * t.s[k];
        grad.prototypes[k]
            .iter_mut()
            .zip(s.x.iter().zip(&params.prototypes[k]))
            .for_each(|(g, (x, p))| *g += c * (x - p));
    }
    Ok(loss)
}
