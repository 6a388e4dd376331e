use std::path::{Path, PathBuf};

use evsurv::data::{CsvSchema, FoldPlan};
use evsurv::metrics::SurvivalCurveMode;
use evsurv::seed::derive_seed;
use evsurv::training::{LossConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Simulate,
    Csv,
}

impl std::str::FromStr for DataSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(DataSource::Simulate),
            "csv" => Ok(DataSource::Csv),
            other => Err(format!("unknown data source {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    pub n_train: usize,
    pub n_val: usize,
    pub censor_prob: f64,
    pub censor_lo: f64,
    /// Training CSV (or the whole dataset for `cv`).
    pub path: Option<PathBuf>,
    /// Validation CSV for `train`; without it a holdout is split off `path`.
    pub val_path: Option<PathBuf>,
    pub features: Vec<String>,
    pub duration: String,
    pub event: String,
    /// Share of the training rows held out for early stopping.
    pub val_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Simulate,
            n_train: 4000,
            n_val: 1000,
            censor_prob: 0.1,
            censor_lo: -1.0,
            path: None,
            val_path: None,
            features: Vec::new(),
            duration: "duration".into(),
            event: "event".into(),
            val_fraction: 0.2,
        }
    }
}

impl DataConfig {
    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            features: self.features.clone(),
            duration: self.duration.clone(),
            event: self.event.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub folds: usize,
    pub repeats: usize,
}

impl Default for CvSection {
    fn default() -> Self {
        let d = FoldPlan::default();
        CvSection {
            folds: d.k,
            repeats: d.repeats,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotSection {
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for PlotSection {
    fn default() -> Self {
        PlotSection {
            points: 500,
            x_min: -2.0,
            x_max: 2.0,
        }
    }
}

/// Everything a run depends on. Serialized as TOML; the copy written beside
/// each output can be passed back with `--config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub k: usize,
    pub grid_size: usize,
    pub bpi_levels: Vec<f64>,
    pub curve_mode: SurvivalCurveMode,
    pub data: DataConfig,
    pub loss: LossConfig,
    pub train: TrainSection,
    pub cv: CvSection,
    pub plot: PlotSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            k: 40,
            grid_size: 100,
            bpi_levels: vec![0.5, 0.9, 0.99],
            curve_mode: SurvivalCurveMode::Midpoint,
            data: DataConfig::default(),
            loss: LossConfig::default(),
            train: TrainSection::default(),
            cv: CvSection::default(),
            plot: PlotSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form with the output directory blanked,
    /// hex encoded. Runs that differ only in where they write share a hash.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        Sha256::digest(canonical.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.grid_size < 2 {
            return bad("grid_size must be at least 2".into());
        }
        if let Some(a) = self.bpi_levels.iter().find(|a| !(0.0..1.0).contains(*a)) {
            return bad(format!("BPI level {a} outside [0, 1)"));
        }
        let d = &self.data;
        if !(0.0..=1.0).contains(&d.censor_prob) {
            return bad(format!("censor_prob {} outside [0, 1]", d.censor_prob));
        }
        if !(d.censor_lo < 0.0 && d.censor_lo.is_finite()) {
            return bad(format!("censor_lo must be negative, got {}", d.censor_lo));
        }
        if d.n_train == 0 || d.n_val == 0 {
            return bad("n_train and n_val must be positive".into());
        }
        if !(d.val_fraction > 0.0 && d.val_fraction < 1.0) {
            return bad(format!("val_fraction {} outside (0, 1)", d.val_fraction));
        }
        if self.cv.folds < 2 || self.cv.repeats == 0 {
            return bad("cv needs at least 2 folds and 1 repeat".into());
        }
        if self.plot.points < 2 || !(self.plot.x_min < self.plot.x_max) {
            return bad("plot grid needs 2+ points over a nonempty range".into());
        }
        self.loss.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.train_config(0).validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }

    /// Training settings with the given seed. Patience is capped at
    /// `max_epochs` so short runs stay valid.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            max_epochs: self.train.max_epochs,
            patience: self.train.patience.min(self.train.max_epochs),
            seed,
        }
    }

    pub fn fold_plan(&self) -> FoldPlan {
        FoldPlan {
            k: self.cv.folds,
            repeats: self.cv.repeats,
            seed: derive_seed(self.seed, "folds"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_and_hash() {
        let mut c = RunConfig::default();
        c.data.censor_prob = 0.7;
        c.data.censor_lo = -2.0;
        c.data.path = Some("a.csv".into());
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_ne!(RunConfig::default().hash(), c.hash());
        let moved = RunConfig {
            output_dir: "elsewhere".into(),
            ..c.clone()
        };
        assert_eq!(moved.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = toml::from_str("k = 5\n[train]\nmax_epochs = 3\n").unwrap();
        assert_eq!(c.k, 5);
        assert_eq!(c.train.max_epochs, 3);
        assert_eq!(c.train.patience, 20);
        assert_eq!(c.train_config(1).patience, 3);
        assert!(c.validate().is_ok());
        assert!(toml::from_str::<RunConfig>("kk = 5\n").is_err());
    }
}
