use std::path::{Path, PathBuf};

use evsurv::data::{self, holdout_split, load_csv, simulate, write_csv, Standardizer, SurvivalRecord};
use evsurv::exec::map_indices;
use evsurv::metrics::{
    bpi_coverage, c_index_td, evaluation_grid, ibll, ibs, FoldMetrics, LevelCoverage, MetricsReport,
    SurvivalMatrix,
};
use evsurv::seed::{derive_indexed_seed, derive_seed};
use evsurv::training::{fit, write_history_csv, FitResult, Sample};
use evsurv::{forward, Checkpoint, Error, Exec, Grfn, ModelParams};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, RunConfig};
use crate::error::CliError;
use crate::predictions::{read_predictions, write_predictions, PredictionRow};

pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub records: Vec<SurvivalRecord>,
}

fn simulated(cfg: &RunConfig, n: usize, purpose: &str) -> Result<Dataset, CliError> {
    let d = &cfg.data;
    Ok(Dataset {
        name: "simulated".into(),
        feature_names: vec!["x".into()],
        records: simulate(n, d.censor_prob, d.censor_lo, derive_seed(cfg.seed, purpose))?,
    })
}

fn csv_dataset(cfg: &RunConfig, path: &Path) -> Result<Dataset, CliError> {
    let loaded = load_csv(path, &cfg.data.schema())?;
    if loaded.records.is_empty() {
        return Err(Error::EmptyDataset.into());
    }
    Ok(Dataset {
        name: path
            .file_stem()
            .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned()),
        feature_names: loaded.feature_names,
        records: loaded.records,
    })
}

fn csv_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.data
        .path
        .as_deref()
        .ok_or_else(|| CliError::Usage("data.source = \"csv\" needs data.path".into()))
}

fn subset(records: &[SurvivalRecord], idx: &[usize]) -> Vec<SurvivalRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

/// Training and validation records as configured.
pub fn train_val(cfg: &RunConfig) -> Result<(Dataset, Vec<SurvivalRecord>), CliError> {
    match cfg.data.source {
        DataSource::Simulate => {
            let train = simulated(cfg, cfg.data.n_train, "simulate-train")?;
            let val = simulated(cfg, cfg.data.n_val, "simulate-val")?;
            Ok((train, val.records))
        }
        DataSource::Csv => {
            let mut train = csv_dataset(cfg, csv_path(cfg)?)?;
            if let Some(vp) = &cfg.data.val_path {
                let val = csv_dataset(cfg, vp)?;
                if val.feature_names != train.feature_names {
                    return Err(Error::SchemaMismatch("validation CSV has different features".into()).into());
                }
                return Ok((train, val.records));
            }
            let (tr, va) = holdout_split(
                train.records.len(),
                cfg.data.val_fraction,
                derive_seed(cfg.seed, "holdout"),
            )?;
            let val = subset(&train.records, &va);
            train.records = subset(&train.records, &tr);
            Ok((train, val))
        }
    }
}

/// Standardizes on `train`, fits, and returns the scaler with the fit.
pub fn train_model(
    cfg: &RunConfig,
    train: &[SurvivalRecord],
    val: &[SurvivalRecord],
    seed: u64,
    exec: Exec,
) -> Result<(Standardizer, FitResult), CliError> {
    let scaler = Standardizer::fit(train)?;
    let to_samples = |r: &[SurvivalRecord]| -> Result<Vec<Sample>, CliError> {
        Ok(scaler.apply(r)?.iter().map(Sample::from_record).collect())
    };
    let result = fit(
        &to_samples(train)?,
        &to_samples(val)?,
        cfg.k,
        &cfg.loss,
        &cfg.train_config(seed),
        exec,
    )
    .map_err(numeric)?;
    Ok((scaler, result))
}

/// Training failures that are not data problems are numeric failures.
fn numeric(e: Error) -> CliError {
    if e.is_data_error() {
        CliError::Core(e)
    } else {
        CliError::Numeric(e.to_string())
    }
}

pub fn predict(
    params: &ModelParams,
    scaler: &Standardizer,
    records: &[SurvivalRecord],
    exec: Exec,
) -> Result<Vec<Grfn>, CliError> {
    map_indices(exec, records.len(), |i| {
        let x = scaler.transform(&records[i].x)?;
        Ok(forward(&x, params)?.out)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub n: usize,
    pub c_index: f64,
    pub ibs: f64,
    pub ibll: f64,
    pub coverage: Vec<LevelCoverage>,
}

/// C-index on the observed durations, IBS and IBLL on `grid_size` points,
/// and BPI coverage of the observed log durations.
pub fn score(cfg: &RunConfig, preds: &[Grfn], records: &[SurvivalRecord], exec: Exec) -> Result<Scores, CliError> {
    if preds.len() != records.len() {
        return Err(Error::DimensionMismatch {
            expected: records.len(),
            got: preds.len(),
        }
        .into());
    }
    let durations: Vec<f64> = records.iter().map(|r| r.t).collect();
    let events: Vec<bool> = records.iter().map(|r| r.event).collect();
    let mut times = durations.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let at_durations = SurvivalMatrix::from_predictions(preds, times, cfg.curve_mode, exec)?;
    let c_index = c_index_td(&at_durations, &durations, &events, exec)?;
    let grid = evaluation_grid(&durations, cfg.grid_size)?;
    let curves = SurvivalMatrix::from_predictions(preds, grid, cfg.curve_mode, exec)?;
    let log_t: Vec<f64> = records.iter().map(SurvivalRecord::log_t).collect();
    let coverage = cfg
        .bpi_levels
        .iter()
        .map(|&alpha| {
            Ok(LevelCoverage {
                alpha,
                coverage: bpi_coverage(preds, &log_t, alpha).map_err(numeric)?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Scores {
        n: records.len(),
        c_index,
        ibs: ibs(&curves, &durations, &events, exec)?,
        ibll: ibll(&curves, &durations, &events, exec)?,
        coverage,
    })
}

fn prepare_output(cfg: &RunConfig) -> Result<&Path, CliError> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok(&cfg.output_dir)
}

/// Resolved configuration beside the outputs; feeding it back with
/// `--config` repeats the run.
pub fn write_manifest(cfg: &RunConfig, command: &str) -> Result<PathBuf, CliError> {
    let path = cfg.output_dir.join("manifest.toml");
    let text = format!(
        "# evsurv {command}\n# config_hash = {}\n{}",
        cfg.hash(),
        cfg.to_toml()
    );
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let out = prepare_output(cfg)?;
    let train = simulated(cfg, cfg.data.n_train, "simulate-train")?;
    let val = simulated(cfg, cfg.data.n_val, "simulate-val")?;
    write_csv(&out.join("train.csv"), &train.feature_names, &train.records)?;
    write_csv(&out.join("val.csv"), &val.feature_names, &val.records)?;
    write_manifest(cfg, "simulate")?;
    println!(
        "wrote {} training and {} validation records to {}",
        train.records.len(),
        val.records.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, exec: Exec) -> Result<(), CliError> {
    let (train, val) = train_val(cfg)?;
    let out = prepare_output(cfg)?;
    let (scaler, result) = train_model(cfg, &train.records, &val, derive_seed(cfg.seed, "train"), exec)?;
    let ckpt = Checkpoint::new(result.params, scaler, cfg.hash());
    ckpt.save(&out.join("checkpoint.json"))?;
    write_history_csv(&out.join("history.csv"), &result.history)?;
    let preds = predict(&ckpt.params, &ckpt.standardizer, &val, exec)?;
    let rows = preds
        .iter()
        .map(|g| PredictionRow::new(*g, &cfg.bpi_levels))
        .collect::<Result<Vec<_>, _>>()
        .map_err(numeric)?;
    write_predictions(&out.join("predictions.csv"), &cfg.bpi_levels, &rows)?;
    write_manifest(cfg, "train")?;
    let last = result.history.last().expect("at least one epoch");
    println!(
        "trained K={} on {} records for {} epochs; best epoch {} (validation cost {:.6}, initial {:.6})",
        cfg.k,
        train.records.len(),
        last.epoch,
        result.best_epoch,
        result.history.iter().find(|h| h.epoch == result.best_epoch).map_or(result.initial_val_cost, |h| h.val_cost),
        result.initial_val_cost
    );
    Ok(())
}

/// Runs every fold of the plan. Folds may run concurrently but each one
/// trains and scores sequentially, and rows come back in fold order.
pub fn run_cv(cfg: &RunConfig, dataset: &Dataset, exec: Exec) -> Result<MetricsReport, CliError> {
    let records = &dataset.records;
    let splits = data::make_folds(records.len(), &cfg.fold_plan())?;
    let folds = map_indices(exec, splits.len(), |i| -> Result<FoldMetrics, CliError> {
        let split = &splits[i];
        let pool = subset(records, &split.train);
        let (tr, va) = holdout_split(
            pool.len(),
            cfg.data.val_fraction,
            derive_indexed_seed(cfg.seed, "holdout", i as u64),
        )?;
        let (train, val) = (subset(&pool, &tr), subset(&pool, &va));
        let seed = derive_indexed_seed(cfg.seed, "train", i as u64);
        let (scaler, result) = train_model(cfg, &train, &val, seed, Exec::Sequential)?;
        let test = subset(records, &split.test);
        let preds = predict(&result.params, &scaler, &test, Exec::Sequential)?;
        let s = score(cfg, &preds, &test, Exec::Sequential)?;
        Ok(FoldMetrics {
            repeat: split.repeat,
            fold: split.fold,
            n_train: train.len(),
            n_test: test.len(),
            best_epoch: result.best_epoch,
            c_index: s.c_index,
            ibs: s.ibs,
            ibll: s.ibll,
            coverage: s.coverage,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::new(
        dataset.name.clone(),
        records.len(),
        data::censoring_rate(records),
        folds,
    ))
}

pub fn cmd_cv(cfg: &RunConfig, exec: Exec) -> Result<MetricsReport, CliError> {
    let dataset = match cfg.data.source {
        DataSource::Simulate => simulated(cfg, cfg.data.n_train, "simulate-train")?,
        DataSource::Csv => csv_dataset(cfg, csv_path(cfg)?)?,
    };
    let out = prepare_output(cfg)?.to_path_buf();
    let report = run_cv(cfg, &dataset, exec)?;
    let mut json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    json.push('\n');
    std::fs::write(out.join("report.json"), json)?;
    let table = report.to_table();
    std::fs::write(out.join("report.txt"), &table)?;
    write_manifest(cfg, "cv")?;
    print!("{table}");
    Ok(report)
}

/// Writes `plotdata.csv`: the fused prediction and BPIs on an even grid of
/// the single raw feature. Rows whose BPI cannot be built are marked
/// `unreachable` and make the command fail after the file is written.
pub fn cmd_plotdata(cfg: &RunConfig, checkpoint: &Path, data_path: Option<&Path>) -> Result<(), CliError> {
    let ckpt = Checkpoint::load(checkpoint)?;
    if ckpt.p != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: ckpt.p }.into());
    }
    let out = prepare_output(cfg)?;
    if let Some(path) = data_path {
        let ds = csv_dataset(cfg, path)?;
        if ds.feature_names.len() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: ds.feature_names.len(),
            }
            .into());
        }
        let mut w = csv::Writer::from_path(out.join("points.csv")).map_err(Error::from)?;
        w.write_record(["x", "log_t", "event"]).map_err(Error::from)?;
        for r in &ds.records {
            w.write_record([r.x[0].to_string(), r.log_t().to_string(), u8::from(r.event).to_string()])
                .map_err(Error::from)?;
        }
        w.flush()?;
    }

    let p = &cfg.plot;
    let step = (p.x_max - p.x_min) / (p.points - 1) as f64;
    let mut w = csv::Writer::from_path(out.join("plotdata.csv")).map_err(Error::from)?;
    let mut header = vec!["x".to_string(), "mu".into(), "sigma2".into(), "h".into()];
    for a in &cfg.bpi_levels {
        header.push(format!("bpi_{a}_lo"));
        header.push(format!("bpi_{a}_hi"));
    }
    header.push("status".into());
    w.write_record(&header).map_err(Error::from)?;
    let mut unreachable = 0usize;
    for i in 0..p.points {
        let x = if i == p.points - 1 { p.x_max } else { p.x_min + step * i as f64 };
        let g = forward(&ckpt.standardizer.transform(&[x])?, &ckpt.params)?.out;
        let mut row = vec![x.to_string(), g.mu().to_string(), g.sigma2().to_string(), g.h().to_string()];
        let mut ok = true;
        for &a in &cfg.bpi_levels {
            match g.bpi(a) {
                Ok(iv) => {
                    row.push(iv.lo().to_string());
                    row.push(iv.hi().to_string());
                }
                Err(Error::UnreachableLevel { .. }) => {
                    ok = false;
                    row.push("nan".into());
                    row.push("nan".into());
                }
                Err(e) => return Err(numeric(e)),
            }
        }
        if !ok {
            unreachable += 1;
        }
        row.push(if ok { "ok" } else { "unreachable" }.into());
        w.write_record(&row).map_err(Error::from)?;
    }
    w.flush()?;
    write_manifest(cfg, "plotdata")?;
    if unreachable > 0 {
        return Err(CliError::Numeric(format!(
            "{unreachable} of {} grid rows have an unreachable BPI level",
            p.points
        )));
    }
    println!("wrote {} grid rows to {}", p.points, out.join("plotdata.csv").display());
    Ok(())
}

/// Scores a predictions file against the matching dataset rows and writes
/// `eval.json`.
pub fn cmd_eval(cfg: &RunConfig, predictions: &Path, data_path: &Path, exec: Exec) -> Result<Scores, CliError> {
    let preds = read_predictions(predictions)?;
    let ds = csv_dataset(cfg, data_path)?;
    let scores = score(cfg, &preds, &ds.records, exec)?;
    let out = prepare_output(cfg)?;
    let mut json = serde_json::to_string_pretty(&scores).map_err(Error::from)?;
    json.push('\n');
    std::fs::write(out.join("eval.json"), &json)?;
    print!("{json}");
    Ok(scores)
}
