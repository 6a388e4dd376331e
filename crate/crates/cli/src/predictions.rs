//! Predictions table: one row per record with the fused GRFN and its BPI
//! bounds on the log-time and time scales. Floats are written in shortest
//! round-trip form so reading the file back recovers them exactly.

use std::path::Path;

use evsurv::{Error, Grfn, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub out: Grfn,
    /// `(lo, hi)` on the log-time scale, one per level.
    pub bpi: Vec<(f64, f64)>,
}

impl PredictionRow {
    pub fn new(out: Grfn, levels: &[f64]) -> Result<Self> {
        let bpi = levels
            .iter()
            .map(|&a| out.bpi(a).map(|iv| (iv.lo(), iv.hi())))
            .collect::<Result<_>>()?;
        Ok(PredictionRow { out, bpi })
    }
}

pub fn header(levels: &[f64]) -> Vec<String> {
    let mut h = vec!["row".to_string(), "mu".into(), "sigma2".into(), "h".into()];
    for a in levels {
        for col in ["lo", "hi", "t_lo", "t_hi"] {
            h.push(format!("bpi_{a}_{col}"));
        }
    }
    h
}

pub fn write_predictions(path: &Path, levels: &[f64], rows: &[PredictionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(levels))?;
    for (i, r) in rows.iter().enumerate() {
        let mut rec = vec![
            i.to_string(),
            r.out.mu().to_string(),
            r.out.sigma2().to_string(),
            r.out.h().to_string(),
        ];
        for &(lo, hi) in &r.bpi {
            rec.extend([lo, hi, lo.exp(), hi.exp()].map(|v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `mu`, `sigma2` and `h` columns of a predictions file.
pub fn read_predictions(path: &Path) -> Result<Vec<Grfn>> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("predictions file lacks column {name:?}")))
    };
    let (mu, s2, h) = (col("mu")?, col("sigma2")?, col("h")?);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::SchemaMismatch(format!("row {}: bad number in column {c}", i + 1)))
        };
        out.push(Grfn::new(num(mu)?, num(s2)?, num(h)?).map_err(|e| Error::SchemaMismatch(format!("row {}: {e}", i + 1)))?);
    }
    Ok(out)
}
