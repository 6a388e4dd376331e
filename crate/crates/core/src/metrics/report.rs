//! Cross-validation report: per-fold scores plus mean and standard error
//! across all folds and repeats.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCoverage {
    pub alpha: f64,
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub repeat: usize,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub best_epoch: usize,
    pub c_index: f64,
    pub ibs: f64,
    pub ibll: f64,
    pub coverage: Vec<LevelCoverage>,
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return MeanSe {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        MeanSe { mean, se }
    }

    /// `0.672±9.4e-3` style.
    pub fn display(&self) -> String {
        format!("{:.3}±{:.1e}", self.mean, self.se)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub c_index: MeanSe,
    pub ibs: MeanSe,
    pub ibll: MeanSe,
    pub coverage: Vec<(f64, MeanSe)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub n: usize,
    pub censoring_rate: f64,
    pub folds: Vec<FoldMetrics>,
    pub summary: Summary,
}

impl MetricsReport {
    pub fn new(dataset: String, n: usize, censoring_rate: f64, folds: Vec<FoldMetrics>) -> Self {
        let col = |f: fn(&FoldMetrics) -> f64| MeanSe::of(&folds.iter().map(f).collect::<Vec<_>>());
        let levels: Vec<f64> = folds
            .first()
            .map(|f| f.coverage.iter().map(|c| c.alpha).collect())
            .unwrap_or_default();
        let coverage = levels
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let v: Vec<f64> = folds.iter().map(|f| f.coverage[i].coverage).collect();
                (a, MeanSe::of(&v))
            })
            .collect();
        let summary = Summary {
            c_index: col(|f| f.c_index),
            ibs: col(|f| f.ibs),
            ibll: col(|f| f.ibll),
            coverage,
        };
        MetricsReport {
            dataset,
            n,
            censoring_rate,
            folds,
            summary,
        }
    }

    /// Plain-text table: one row per fold and a final mean ± standard error row.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {}: n = {}, censoring rate = {:.3}",
            self.dataset, self.n, self.censoring_rate
        );
        let mut header = format!("{:>6} {:>4} {:>8} {:>8} {:>8}", "repeat", "fold", "C_idx", "IBS", "IBLL");
        for (a, _) in &self.summary.coverage {
            let _ = write!(header, " {:>9}", format!("cov@{a}"));
        }
        let _ = writeln!(out, "{header}");
        for f in &self.folds {
            let _ = write!(
                out,
                "{:>6} {:>4} {:>8.4} {:>8.4} {:>8.4}",
                f.repeat, f.fold, f.c_index, f.ibs, f.ibll
            );
            for c in &f.coverage {
                let _ = write!(out, " {:>9.4}", c.coverage);
            }
            out.push('\n');
        }
        let s = &self.summary;
        let _ = write!(
            out,
            "{:>11} {} {} {}",
            "mean±se",
            s.c_index.display(),
            s.ibs.display(),
            s.ibll.display()
        );
        for (_, c) in &s.coverage {
            let _ = write!(out, " {}", c.display());
        }
        out.push('\n');
        out
    }
}
