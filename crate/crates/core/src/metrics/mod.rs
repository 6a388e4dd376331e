//! Censoring-aware evaluation: survival curves from lognormal random fuzzy
//! numbers, Kaplan-Meier, time-dependent concordance, IPCW integrated Brier
//! score and integrated binomial log-likelihood, BPI coverage.

mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indices, Exec};
use crate::grfn::{Grfn, LognormalRfn, RealInterval};

pub use report::{FoldMetrics, LevelCoverage, MeanSe, MetricsReport, Summary};

/// Right-continuous step function, equal to 1 before the first time.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSurvival {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepSurvival {
    /// `S(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x <= t) {
            0 => 1.0,
            i => self.values[i - 1],
        }
    }

    /// Left limit `S(t⁻)`.
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x < t) {
            0 => 1.0,
            i => self.values[i - 1],
        }
    }
}

/// Product-limit estimator over the distinct observed times. Pass flipped
/// event flags to estimate the censoring distribution.
pub fn km_estimator(durations: &[f64], events: &[bool]) -> Result<StepSurvival> {
    if durations.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_lengths(durations.len(), events.len())?;
    if let Some(row) = durations.iter().position(|t| !(*t > 0.0)) {
        return Err(Error::NonPositiveDuration { row: row + 1 });
    }
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]));
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut at_risk = durations.len();
    let mut surv = 1.0;
    let mut i = 0;
    while i < order.len() {
        let t = durations[order[i]];
        let mut deaths = 0;
        let mut leaving = 0;
        while i < order.len() && durations[order[i]] == t {
            deaths += usize::from(events[order[i]]);
            leaving += 1;
            i += 1;
        }
        if deaths > 0 {
            surv *= (at_risk - deaths) as f64 / at_risk as f64;
        }
        times.push(t);
        values.push(surv);
        at_risk -= leaving;
    }
    Ok(StepSurvival { times, values })
}

/// How a survival probability is read off a lognormal random fuzzy number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurvivalCurveMode {
    /// `Bel([t, ∞))`
    Belief,
    /// `Pl([t, ∞))`
    Plausibility,
    /// Mean of belief and plausibility.
    #[default]
    Midpoint,
}

impl std::str::FromStr for SurvivalCurveMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "belief" => Ok(Self::Belief),
            "plausibility" => Ok(Self::Plausibility),
            "midpoint" => Ok(Self::Midpoint),
            other => Err(Error::InvalidParameter(format!("unknown curve mode {other:?}"))),
        }
    }
}

/// Survival curve `t ↦ S(t)` at the given times.
pub fn survival_curve(pred: &LognormalRfn, times: &[f64], mode: SurvivalCurveMode) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            if t < 0.0 || t.is_nan() {
                return Err(Error::NegativeTime { lo: t });
            }
            let bp = pred.time_bel_pl(&RealInterval::at_least(t)?)?;
            Ok(match mode {
                SurvivalCurveMode::Belief => bp.bel,
                SurvivalCurveMode::Plausibility => bp.pl,
                SurvivalCurveMode::Midpoint => 0.5 * (bp.bel + bp.pl),
            })
        })
        .collect()
}

/// Per-subject survival probabilities over a shared increasing time grid.
/// Between grid points each curve is read as a right-continuous step.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalMatrix {
    pub grid: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl SurvivalMatrix {
    pub fn new(grid: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != grid.len()) {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: r.len(),
            });
        }
        Ok(SurvivalMatrix { grid, rows })
    }

    /// Curves of lognormal predictions evaluated on `grid`.
    pub fn from_predictions(preds: &[Grfn], grid: Vec<f64>, mode: SurvivalCurveMode, exec: Exec) -> Result<Self> {
        let rows = map_indices(exec, preds.len(), |i| {
            survival_curve(&LognormalRfn::new(preds[i]), &grid, mode)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Self::new(grid, rows)
    }

    /// Index of the last grid point `<= t`, if any.
    fn step_index(&self, t: f64) -> Option<usize> {
        self.grid.partition_point(|&g| g <= t).checked_sub(1)
    }

    fn value(&self, row: usize, idx: Option<usize>) -> f64 {
        idx.map_or(1.0, |g| self.rows[row][g])
    }
}

fn check_lengths(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Time-dependent concordance over pairs with `T_i < T_j` and an event at
/// `T_i`: concordant when `S_i(T_i) < S_j(T_i)`, ties count one half.
pub fn c_index_td(curves: &SurvivalMatrix, durations: &[f64], events: &[bool], exec: Exec) -> Result<f64> {
    let n = durations.len();
    check_lengths(curves.rows.len(), n)?;
    check_lengths(n, events.len())?;
    // counts in half-pair units keep the reduction exact
    let per_row = map_indices(exec, n, |i| {
        if !events[i] {
            return (0u64, 0u64);
        }
        let idx = curves.step_index(durations[i]);
        let own = curves.value(i, idx);
        let (mut halves, mut pairs) = (0u64, 0u64);
        for j in 0..n {
            if durations[i] < durations[j] {
                pairs += 1;
                let other = curves.value(j, idx);
                if own < other {
                    halves += 2;
                } else if own == other {
                    halves += 1;
                }
            }
        }
        (halves, pairs)
    });
    let (halves, pairs) = per_row
        .into_iter()
        .fold((0u64, 0u64), |(h, p), (a, b)| (h + a, p + b));
    if pairs == 0 {
        return Err(Error::NoComparablePairs);
    }
    Ok(halves as f64 / (2 * pairs) as f64)
}

/// `n` equally spaced points between the smallest and largest duration.
pub fn evaluation_grid(durations: &[f64], n: usize) -> Result<Vec<f64>> {
    let lo = durations.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = durations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if durations.is_empty() || n < 2 || !(hi > lo) {
        return Err(Error::DegenerateGrid);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

/// IPCW score at every grid point, integrated by the trapezoid rule and
/// divided by the grid span. `event_term(S)` scores subjects whose event
/// happened by `t`, `survivor_term(S)` those still at risk after `t`.
fn integrated_ipcw_score(
    curves: &SurvivalMatrix,
    durations: &[f64],
    events: &[bool],
    exec: Exec,
    event_term: impl Fn(f64) -> f64 + Sync + Send,
    survivor_term: impl Fn(f64) -> f64 + Sync + Send,
) -> Result<f64> {
    let n = durations.len();
    check_lengths(curves.rows.len(), n)?;
    check_lengths(n, events.len())?;
    let grid = &curves.grid;
    if grid.len() < 2 || !(grid[grid.len() - 1] > grid[0]) {
        return Err(Error::DegenerateGrid);
    }
    let flipped: Vec<bool> = events.iter().map(|e| !e).collect();
    let censor_km = km_estimator(durations, &flipped)?;
    let g_left: Vec<f64> = durations.iter().map(|&t| censor_km.eval_left(t)).collect();
    let scores = map_indices(exec, grid.len(), |g| {
        let t = grid[g];
        let g_t = censor_km.eval(t);
        let mut acc = 0.0;
        for i in 0..n {
            let s = curves.rows[i][g];
            if durations[i] <= t {
                if events[i] && g_left[i] > 0.0 {
                    acc += event_term(s) / g_left[i];
                }
            } else if g_t > 0.0 {
                acc += survivor_term(s) / g_t;
            }
        }
        acc / n as f64
    });
    let mut area = 0.0;
    for g in 1..grid.len() {
        area += 0.5 * (scores[g - 1] + scores[g]) * (grid[g] - grid[g - 1]);
    }
    Ok(area / (grid[grid.len() - 1] - grid[0]))
}

/// Integrated Brier score with inverse probability of censoring weights.
pub fn ibs(curves: &SurvivalMatrix, durations: &[f64], events: &[bool], exec: Exec) -> Result<f64> {
    integrated_ipcw_score(curves, durations, events, exec, |s| s * s, |s| (1.0 - s) * (1.0 - s))
}

/// Lower clamp for survival values inside the binomial log-likelihood.
pub const IBLL_CLAMP: f64 = 1e-7;

/// Integrated negated binomial log-likelihood (lower is better).
pub fn ibll(curves: &SurvivalMatrix, durations: &[f64], events: &[bool], exec: Exec) -> Result<f64> {
    let clamp = |s: f64| s.clamp(IBLL_CLAMP, 1.0 - IBLL_CLAMP);
    integrated_ipcw_score(
        curves,
        durations,
        events,
        exec,
        |s| -(1.0 - clamp(s)).ln(),
        |s| -clamp(s).ln(),
    )
}

/// Fraction of targets inside the level-`alpha` belief prediction interval
/// of the matching prediction.
pub fn bpi_coverage(preds: &[Grfn], targets: &[f64], alpha: f64) -> Result<f64> {
    check_lengths(preds.len(), targets.len())?;
    if preds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut inside = 0usize;
    for (p, &y) in preds.iter().zip(targets) {
        if p.bpi(alpha)?.contains(y) {
            inside += 1;
        }
    }
    Ok(inside as f64 / preds.len() as f64)
}
