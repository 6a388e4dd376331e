//! Survival records: the synthetic benchmark simulator, CSV ingestion,
//! feature standardization and repeated k-fold plans.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_indexed_seed;

/// One observation: features, duration `t > 0`, and whether the event was
/// observed (`event = true`) or right-censored.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalRecord {
    pub x: Vec<f64>,
    pub t: f64,
    pub event: bool,
}

impl SurvivalRecord {
    pub fn log_t(&self) -> f64 {
        self.t.ln()
    }
}

/// Noise-free part of the simulated log event time.
pub fn regression_function(x: f64) -> f64 {
    1.5 * x + 2.0 * (3.0 * x).cos().powi(3)
}

/// Simulated log event time for input `x` and standard normal draw `v`.
pub fn simulated_log_time(x: f64, v: f64) -> f64 {
    regression_function(x) + (x + 5.0) / (3.0 * 5f64.sqrt()) * v
}

/// Synthetic benchmark with one feature `X ~ U[-2, 2]`.
///
/// Each record is censored independently with probability `censor_prob`;
/// a censored record gets `event = false` and its log-duration shifted by
/// `C ~ U[censor_lo, 0]`.
pub fn simulate(n: usize, censor_prob: f64, censor_lo: f64, seed: u64) -> Result<Vec<SurvivalRecord>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&censor_prob) {
        return Err(Error::InvalidParameter(format!(
            "censoring probability out of [0, 1]: {censor_prob}"
        )));
    }
    if !(censor_lo < 0.0 && censor_lo.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "censoring interval lower bound must be negative: {censor_lo}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| {
            let x: f64 = rng.gen_range(-2.0..=2.0);
            let v: f64 = rng.sample(StandardNormal);
            let censored = rng.gen::<f64>() < censor_prob;
            let c: f64 = rng.gen_range(censor_lo..0.0);
            let y_true = simulated_log_time(x, v);
            let y = if censored { y_true + c } else { y_true };
            SurvivalRecord {
                x: vec![x],
                t: y.exp(),
                event: !censored,
            }
        })
        .collect();
    Ok(records)
}

/// Column mapping for CSV ingestion. An empty `features` list selects every
/// column other than duration and event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub features: Vec<String>,
    pub duration: String,
    pub event: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            features: Vec::new(),
            duration: "duration".into(),
            event: "event".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedDataset {
    pub feature_names: Vec<String>,
    pub records: Vec<SurvivalRecord>,
}

impl LoadedDataset {
    pub fn censoring_rate(&self) -> f64 {
        censoring_rate(&self.records)
    }
}

pub fn censoring_rate(records: &[SurvivalRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| !r.event).count() as f64 / records.len() as f64
}

/// Reads a header-first, comma-separated numeric table. Rows are numbered
/// from 1 (the first data row) in error messages.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<LoadedDataset> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("missing column {name:?}")))
    };
    let dur_col = find(&schema.duration)?;
    let event_col = find(&schema.event)?;
    let feature_names: Vec<String> = if schema.features.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != dur_col && *i != event_col)
            .map(|(_, h)| h.clone())
            .collect()
    } else {
        schema.features.clone()
    };
    let feature_cols = feature_names.iter().map(|f| find(f)).collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let cell = |col: usize| -> Result<f64> {
            let raw = row.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "row {row_no}, column {:?}: not a finite number: {raw:?}",
                        headers[col]
                    ))
                })
        };
        let t = cell(dur_col)?;
        if t <= 0.0 {
            return Err(Error::NonPositiveDuration { row: row_no });
        }
        let event = match cell(event_col)? {
            e if e == 1.0 => true,
            e if e == 0.0 => false,
            e => {
                return Err(Error::SchemaMismatch(format!(
                    "row {row_no}: event flag must be 0 or 1, got {e}"
                )))
            }
        };
        let x = feature_cols.iter().map(|&c| cell(c)).collect::<Result<Vec<_>>>()?;
        records.push(SurvivalRecord { x, t, event });
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(LoadedDataset {
        feature_names,
        records,
    })
}

/// Writes records with the given feature column names plus `duration` and
/// `event` columns.
pub fn write_csv(path: &Path, feature_names: &[String], records: &[SurvivalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = feature_names.iter().map(String::as_str).collect();
    header.extend(["duration", "event"]);
    w.write_record(&header)?;
    for r in records {
        if r.x.len() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                got: r.x.len(),
            });
        }
        let mut row: Vec<String> = r.x.iter().map(f64::to_string).collect();
        row.push(r.t.to_string());
        row.push(if r.event { "1" } else { "0" }.into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-feature z-scoring with statistics from a training fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// Population statistics; constant features get divisor 1.
    pub fn fit(records: &[SurvivalRecord]) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyDataset)?;
        let p = first.x.len();
        let n = records.len() as f64;
        let mut mean = vec![0.0; p];
        for r in records {
            if r.x.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: r.x.len(),
                });
            }
            mean.iter_mut().zip(&r.x).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for r in records {
            var.iter_mut()
                .zip(r.x.iter().zip(&mean))
                .for_each(|(s, (v, m))| *s += (v - m) * (v - m));
        }
        let sd = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, sd })
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn apply(&self, records: &[SurvivalRecord]) -> Result<Vec<SurvivalRecord>> {
        records
            .iter()
            .map(|r| {
                Ok(SurvivalRecord {
                    x: self.transform(&r.x)?,
                    t: r.t,
                    event: r.event,
                })
            })
            .collect()
    }
}

/// Seeded split of `0..n` into `(train, holdout)` with
/// `round(n * fraction)` holdout indices (at least one, at most `n - 1`).
/// Both parts are returned sorted.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("holdout fraction {fraction} outside (0, 1)")));
    }
    let m = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut hold = perm[..m].to_vec();
    let mut train = perm[m..].to_vec();
    hold.sort_unstable();
    train.sort_unstable();
    Ok((train, hold))
}

/// Repeated k-fold cross-validation plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for FoldPlan {
    fn default() -> Self {
        FoldPlan {
            k: 5,
            repeats: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `0..n` per repeat with a fresh seeded permutation; the first
/// `n mod k` folds receive one extra index.
pub fn make_folds(n: usize, plan: &FoldPlan) -> Result<Vec<FoldSplit>> {
    if plan.k < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    if n < plan.k {
        return Err(Error::TooFewSamples {
            needed: plan.k,
            got: n,
        });
    }
    let mut out = Vec::with_capacity(plan.k * plan.repeats);
    for repeat in 0..plan.repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed_seed(plan.seed, "folds", repeat as u64));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let (base, extra) = (n / plan.k, n % plan.k);
        let mut start = 0;
        for fold in 0..plan.k {
            let len = base + usize::from(fold < extra);
            let mut test = perm[start..start + len].to_vec();
            let mut train: Vec<usize> = perm[..start].iter().chain(&perm[start + len..]).copied().collect();
            test.sort_unstable();
            train.sort_unstable();
            out.push(FoldSplit {
                repeat,
                fold,
                train,
                test,
            });
            start += len;
        }
    }
    Ok(out)
}
