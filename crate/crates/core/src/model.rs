//! Prototype-based evidential regression network.
//!
//! Each prototype `k` contributes a GRFN `Ñ(β_kᵀx + β_k0, σ_k², s_k(x) h_k)`
//! discounted by the similarity `s_k(x) = exp(-γ_k² ‖x - p_k‖²)`, and the
//! contributions are fused with the product-intersection rule.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Standardizer;
use crate::error::{Error, Result};
use crate::grfn::Grfn;

/// Trainable state of the network.
///
/// Precisions and variances are stored through their square roots
/// (`h_k = eta_k²`, `σ_k² = sigma_k²`) so unconstrained gradient steps keep
/// them nonnegative; `gamma_k` enters the similarity squared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub prototypes: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub beta0: Vec<f64>,
}

/// Output of [`forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub out: Grfn,
    pub similarities: Vec<f64>,
}

impl ModelParams {
    /// Builds parameters from precisions `h_k` and variances `σ_k²`.
    pub fn new(
        prototypes: Vec<Vec<f64>>,
        gamma: Vec<f64>,
        precisions: Vec<f64>,
        variances: Vec<f64>,
        beta: Vec<Vec<f64>>,
        beta0: Vec<f64>,
    ) -> Result<Self> {
        if precisions.iter().chain(&variances).any(|v| *v < 0.0) {
            return Err(Error::InvalidParameter(
                "precisions and variances must be nonnegative".into(),
            ));
        }
        let params = ModelParams {
            prototypes,
            gamma,
            eta: precisions.iter().map(|h| h.sqrt()).collect(),
            sigma: variances.iter().map(|v| v.sqrt()).collect(),
            beta,
            beta0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn k(&self) -> usize {
        self.gamma.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes.first().map_or(0, Vec::len)
    }

    pub fn precision(&self, k: usize) -> f64 {
        self.eta[k] * self.eta[k]
    }

    pub fn variance(&self, k: usize) -> f64 {
        self.sigma[k] * self.sigma[k]
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.gamma.len();
        if k == 0 {
            return Err(Error::InvalidParameter("model needs at least one prototype".into()));
        }
        let p = self.dim();
        let lens_ok = self.prototypes.len() == k
            && self.eta.len() == k
            && self.sigma.len() == k
            && self.beta.len() == k
            && self.beta0.len() == k
            && self.prototypes.iter().all(|v| v.len() == p)
            && self.beta.iter().all(|v| v.len() == p);
        if !lens_ok {
            return Err(Error::InvalidParameter("inconsistent parameter shapes".into()));
        }
        if !self.to_flat().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Same shape, all entries zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let k = self.k();
        let p = self.dim();
        ModelParams {
            prototypes: vec![vec![0.0; p]; k],
            gamma: vec![0.0; k],
            eta: vec![0.0; k],
            sigma: vec![0.0; k],
            beta: vec![vec![0.0; p]; k],
            beta0: vec![0.0; k],
        }
    }

    pub fn n_params(&self) -> usize {
        self.k() * (2 * self.dim() + 4)
    }

    /// Flattens prototype by prototype: `p_k, β_k, γ_k, η_k, σ_k, β_k0`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for k in 0..self.k() {
            out.extend_from_slice(&self.prototypes[k]);
            out.extend_from_slice(&self.beta[k]);
            out.extend([self.gamma[k], self.eta[k], self.sigma[k], self.beta0[k]]);
        }
        out
    }

    /// Inverse of [`ModelParams::to_flat`] on a model of the same shape.
    pub fn set_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "flat parameter length");
        let p = self.dim();
        let mut it = flat.iter().copied();
        for k in 0..self.k() {
            for v in self.prototypes[k].iter_mut().chain(self.beta[k].iter_mut()) {
                *v = it.next().unwrap();
            }
            self.gamma[k] = it.next().unwrap();
            self.eta[k] = it.next().unwrap();
            self.sigma[k] = it.next().unwrap();
            self.beta0[k] = it.next().unwrap();
        }
        debug_assert_eq!(p, self.dim());
    }

    /// `self += scale * other`.
    pub(crate) fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        let add = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(a, b)| *a += scale * b);
        for k in 0..self.k() {
            add(&mut self.prototypes[k], &other.prototypes[k]);
            add(&mut self.beta[k], &other.beta[k]);
        }
        add(&mut self.gamma, &other.gamma);
        add(&mut self.eta, &other.eta);
        add(&mut self.sigma, &other.sigma);
        add(&mut self.beta0, &other.beta0);
    }
}

/// Per-input intermediate values shared by inference and backpropagation.
pub(crate) struct Trace {
    pub sq_dist: Vec<f64>,
    pub s: Vec<f64>,
    /// `s_k h_k`
    pub w: Vec<f64>,
    pub mu_k: Vec<f64>,
    pub total: f64,
    pub out: Grfn,
}

fn check_dim(x: &[f64], params: &ModelParams) -> Result<()> {
    if x.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Similarities `s_k(x) = exp(-γ_k² ‖x - p_k‖²)`.
pub fn similarities(x: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    check_dim(x, params)?;
    Ok(params
        .prototypes
        .iter()
        .zip(&params.gamma)
        .map(|(p, g)| (-g * g * sq_dist(x, p)).exp())
        .collect())
}

pub(crate) fn trace(x: &[f64], params: &ModelParams) -> Result<Trace> {
    check_dim(x, params)?;
    let k = params.k();
    let mut t = Trace {
        sq_dist: Vec::with_capacity(k),
        s: Vec::with_capacity(k),
        w: Vec::with_capacity(k),
        mu_k: Vec::with_capacity(k),
        total: 0.0,
        out: Grfn::vacuous(),
    };
    for i in 0..k {
        let d2 = sq_dist(x, &params.prototypes[i]);
        let g = params.gamma[i];
        let s = (-g * g * d2).exp();
        let w = s * params.precision(i);
        let mu = params.beta[i].iter().zip(x).map(|(b, x)| b * x).sum::<f64>() + params.beta0[i];
        t.sq_dist.push(d2);
        t.s.push(s);
        t.w.push(w);
        t.mu_k.push(mu);
        t.total += w;
    }
    if t.total > 0.0 {
        let mut mu = 0.0;
        let mut var = 0.0;
        for i in 0..k {
            let r = t.w[i] / t.total;
            mu += r * t.mu_k[i];
            var += r * r * params.variance(i);
        }
        t.out = Grfn::new(mu, var, t.total)?;
    }
    Ok(t)
}

/// Fused output GRFN for input `x`; vacuous when no prototype carries
/// evidence at `x`.
pub fn forward(x: &[f64], params: &ModelParams) -> Result<Prediction> {
    let t = trace(x, params)?;
    Ok(Prediction {
        out: t.out,
        similarities: t.s,
    })
}

/// Initial parameters: k-means++ prototypes, `γ_k` from the median
/// prototype spacing, unit precisions, the sample variance of the targets as
/// `σ_k²`, and a constant linear predictor at the target mean.
///
/// `train_x` is expected on the standardized scale.
pub fn init_params(train_x: &[Vec<f64>], train_y: &[f64], k: usize, seed: u64) -> Result<ModelParams> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    if train_x.len() < k {
        return Err(Error::TooFewSamples {
            needed: k,
            got: train_x.len(),
        });
    }
    if train_x.len() != train_y.len() {
        return Err(Error::DimensionMismatch {
            expected: train_x.len(),
            got: train_y.len(),
        });
    }
    let p = train_x[0].len();
    if let Some(bad) = train_x.iter().find(|x| x.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: bad.len(),
        });
    }
    let centers = kmeans(train_x, k, 50, seed);

    let mut spacing = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            spacing.push(sq_dist(&centers[i], &centers[j]).sqrt());
        }
    }
    let median = median(&mut spacing);
    let gamma0 = if median > 0.0 && median.is_finite() {
        1.0 / median
    } else {
        1.0
    };

    let n = train_y.len() as f64;
    let mean = train_y.iter().sum::<f64>() / n;
    let var = if train_y.len() > 1 {
        train_y.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };

    let params = ModelParams {
        prototypes: centers,
        gamma: vec![gamma0; k],
        eta: vec![1.0; k],
        sigma: vec![var.sqrt(); k],
        beta: vec![vec![0.0; p]; k],
        beta0: vec![mean; k],
    };
    params.validate()?;
    Ok(params)
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Lloyd's algorithm with k-means++ seeding.
fn kmeans(x: &[Vec<f64>], k: usize, max_iter: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.len();
    let mut centers = vec![x[rng.gen_range(0..n)].clone()];
    let mut closest: Vec<f64> = x.iter().map(|xi| sq_dist(xi, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in closest.iter().enumerate() {
                if target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centers.push(x[next].clone());
        let c = centers.last().unwrap();
        for (d, xi) in closest.iter_mut().zip(x) {
            *d = d.min(sq_dist(xi, c));
        }
    }

    let p = x[0].len();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, xi) in x.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(xi, &centers[a]).total_cmp(&sq_dist(xi, &centers[b])))
                .unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; p]; k];
        let mut counts = vec![0usize; k];
        for (xi, &c) in x.iter().zip(&assign) {
            counts[c] += 1;
            sums[c].iter_mut().zip(xi).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            // empty clusters keep their previous center
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    centers
}

pub const CHECKPOINT_FORMAT: &str = "evsurv-checkpoint";

/// Saved model: parameters plus the feature standardization they expect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub k: usize,
    pub p: usize,
    pub config_hash: String,
    pub standardizer: Standardizer,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(params: ModelParams, standardizer: Standardizer, config_hash: String) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: 1,
            k: params.k(),
            p: params.dim(),
            config_hash,
            standardizer,
            params,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::SchemaMismatch(format!(
                "not a checkpoint: format {:?}",
                ckpt.format
            )));
        }
        ckpt.params.validate()?;
        if ckpt.k != ckpt.params.k() || ckpt.p != ckpt.params.dim() {
            return Err(Error::SchemaMismatch("checkpoint K/p disagree with parameters".into()));
        }
        Ok(ckpt)
    }
}
