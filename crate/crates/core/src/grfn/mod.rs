//! Gaussian random fuzzy numbers (GRFNs) and their lognormal images.
//!
//! A GRFN `Ñ(mu, sigma2, h)` is a Gaussian fuzzy number with membership
//! `x ↦ exp(-h (x - M)² / 2)` whose mode `M` is itself `N(mu, sigma2)`.
//! Degrees of belief and plausibility of an interval are expectations over
//! the mode of the per-mode necessity and possibility. They are evaluated in
//! closed form by splitting mode space at the interval endpoints (and at the
//! midpoint, for belief) so that each piece is a truncated Gaussian
//! expectation of a Gaussian kernel.

mod dual;
pub mod normal;
mod oracle;
mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use dual::{cdf_diff, Dual};

pub use oracle::{mc_oracle, McEstimate};

/// Floor applied to probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-300;

/// `ln(max(p, PROB_FLOOR))`.
pub fn clamped_ln(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0).ln()
}

/// Gaussian random fuzzy number `Ñ(mu, sigma2, h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grfn {
    mu: f64,
    sigma2: f64,
    h: f64,
}

impl Grfn {
    pub fn new(mu: f64, sigma2: f64, h: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma2.is_finite() && h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "GRFN parameters must be finite: ({mu}, {sigma2}, {h})"
            )));
        }
        if sigma2 < 0.0 || h < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "GRFN variance and precision must be nonnegative: ({sigma2}, {h})"
            )));
        }
        Ok(Grfn { mu, sigma2, h })
    }

    /// Canonical vacuous GRFN `Ñ(0, 0, 0)`.
    pub const fn vacuous() -> Self {
        Grfn {
            mu: 0.0,
            sigma2: 0.0,
            h: 0.0,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn is_vacuous(&self) -> bool {
        self.h == 0.0
    }

    /// Contour function: the expected membership of `x`.
    pub fn contour(&self, x: f64) -> f64 {
        if self.h == 0.0 {
            return 1.0;
        }
        contour_dual(self.duals(), x).v
    }

    /// Degrees of belief and plausibility of `interval`.
    pub fn bel_pl(&self, interval: &RealInterval) -> BeliefPlausibility {
        let (bel, pl) = bel_pl_dual(self.duals(), interval.lo, interval.hi);
        BeliefPlausibility { bel: bel.v, pl: pl.v }
    }

    /// Belief and plausibility together with their partial derivatives with
    /// respect to `(mu, sigma2, h)`.
    ///
    /// At `sigma2 == 0` the derivative with respect to `sigma2` is reported
    /// as zero.
    pub fn bel_pl_grad(&self, interval: &RealInterval) -> BelPlGradient {
        let (bel, pl) = bel_pl_dual(self.duals(), interval.lo, interval.hi);
        BelPlGradient {
            bel: bel.v,
            pl: pl.v,
            d_bel: bel.d,
            d_pl: pl.d,
        }
    }

    /// Unnormalized product-intersection combination.
    ///
    /// Precisions add; the result's mean is the precision-weighted mean and
    /// its variance is `(h1² σ1² + h2² σ2²) / (h1 + h2)²`.
    pub fn combine(&self, other: &Grfn) -> Grfn {
        if self.h == 0.0 && other.h == 0.0 {
            return Grfn::vacuous();
        }
        if other.h == 0.0 {
            return *self;
        }
        if self.h == 0.0 {
            return *other;
        }
        let h = self.h + other.h;
        let mu = (self.h * self.mu + other.h * other.mu) / h;
        let sigma2 =
            (self.h * self.h * self.sigma2 + other.h * other.h * other.sigma2) / (h * h);
        Grfn { mu, sigma2, h }
    }

    /// Belief prediction interval: the interval `[mu - r, mu + r]` whose
    /// degree of belief equals `alpha`.
    ///
    /// Belief is continuous and nondecreasing in `r`; the upper bracket is
    /// doubled until it exceeds `alpha` and then bisected.
    pub fn bpi(&self, alpha: f64) -> Result<RealInterval> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "BPI level must lie in [0, 1): {alpha}"
            )));
        }
        if alpha == 0.0 {
            return Ok(RealInterval::point(self.mu)?);
        }
        if self.h == 0.0 {
            return Err(Error::UnreachableLevel { alpha });
        }
        const TOL: f64 = 1e-10;
        let bel_at = |r: f64| {
            self.bel_pl(&RealInterval {
                lo: self.mu - r,
                hi: self.mu + r,
            })
            .bel
        };
        let mut lo = 0.0;
        let mut hi = (self.sigma2 + 1.0 / self.h).sqrt();
        let mut bel_hi = bel_at(hi);
        let mut doublings = 0;
        while bel_hi < alpha {
            if doublings == 200 || !hi.is_finite() {
                return Err(Error::UnreachableLevel { alpha });
            }
            lo = hi;
            hi *= 2.0;
            bel_hi = bel_at(hi);
            doublings += 1;
        }
        let (mut best_r, mut best_err) = (hi, bel_hi - alpha);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let bel = bel_at(mid);
            let err = bel - alpha;
            if err.abs() < best_err.abs() {
                best_r = mid;
                best_err = err;
            }
            if err.abs() <= TOL {
                break;
            }
            if err < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(RealInterval {
            lo: self.mu - best_r,
            hi: self.mu + best_r,
        })
    }

    fn duals(&self) -> [Dual; 3] {
        [
            Dual::var(self.mu, 0),
            Dual::var(self.sigma2, 1),
            Dual::var(self.h, 2),
        ]
    }
}

/// Closed interval of the extended real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealInterval {
    lo: f64,
    hi: f64,
}

impl RealInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
        {
            return Err(Error::InvalidParameter(format!(
                "invalid interval [{lo}, {hi}]"
            )));
        }
        Ok(RealInterval { lo, hi })
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(x, x)
    }

    /// `[lo, +∞)`.
    pub fn at_least(lo: f64) -> Result<Self> {
        Self::new(lo, f64::INFINITY)
    }

    /// `(-∞, hi]`.
    pub fn at_most(hi: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, hi)
    }

    pub fn whole() -> Self {
        RealInterval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &RealInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefPlausibility {
    pub bel: f64,
    pub pl: f64,
}

/// Belief/plausibility values with gradients in `(mu, sigma2, h)` order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BelPlGradient {
    pub bel: f64,
    pub pl: f64,
    pub d_bel: [f64; 3],
    pub d_pl: [f64; 3],
}

/// Lognormal random fuzzy number: the image of a GRFN on `Y = log T` under
/// the exponential map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LognormalRfn {
    pub inner: Grfn,
}

impl LognormalRfn {
    pub fn new(inner: Grfn) -> Self {
        LognormalRfn { inner }
    }

    /// Belief and plausibility of a time interval `[t1, t2] ⊆ [0, ∞)`,
    /// evaluated on `[log t1, log t2]`.
    pub fn time_bel_pl(&self, times: &RealInterval) -> Result<BeliefPlausibility> {
        Ok(self.inner.bel_pl(&log_interval(times)?))
    }
}

/// Maps a time interval to log-time, with `log 0 = -∞`.
pub fn log_interval(times: &RealInterval) -> Result<RealInterval> {
    if times.lo < 0.0 {
        return Err(Error::NegativeTime { lo: times.lo });
    }
    Ok(RealInterval {
        lo: times.lo.ln(),
        hi: times.hi.ln(),
    })
}

fn contour_dual([mu, s2, h]: [Dual; 3], x: f64) -> Dual {
    if x.is_infinite() {
        return Dual::cst(0.0);
    }
    let denom = h * s2 + 1.0;
    let dx = Dual::cst(x) - mu;
    let q = h * dx.square() / denom.scale(2.0);
    (-q).exp() / denom.sqrt()
}

/// `E[exp(-h (M - x0)² / 2) 1{l < M < u}]` for `M ~ N(mu, s2)`, `s2 > 0`.
///
/// The Gaussian kernel times the normal density is the contour value at
/// `x0` times a normal density with shrunken mean and variance.
fn kernel_mass([mu, s2, h]: [Dual; 3], x0: f64, l: f64, u: f64) -> Dual {
    if !(l < u) {
        return Dual::cst(0.0);
    }
    let denom = h * s2 + 1.0;
    let shifted_mu = (mu + h * s2.scale(x0)) / denom;
    let shifted_sd = (s2 / denom).sqrt();
    let z = |e: f64| {
        if e.is_infinite() {
            Dual::cst(e)
        } else {
            (Dual::cst(e) - shifted_mu) / shifted_sd
        }
    };
    contour_dual([mu, s2, h], x0) * cdf_diff(z(l), z(u))
}

/// `P(l < M < u)` for `M ~ N(mu, s2)`, `s2 > 0`.
fn mode_mass(mu: Dual, s2: Dual, l: f64, u: f64) -> Dual {
    if !(l < u) {
        return Dual::cst(0.0);
    }
    let sd = s2.sqrt();
    let z = |e: f64| {
        if e.is_infinite() {
            Dual::cst(e)
        } else {
            (Dual::cst(e) - mu) / sd
        }
    };
    cdf_diff(z(l), z(u))
}

/// Per-mode necessity (belief) and possibility (plausibility) of `[a, b]`
/// for a fuzzy number with mode `m` and precision `h`.
pub(crate) fn mode_nec_pos(m: f64, h: f64, a: f64, b: f64) -> (f64, f64) {
    let pos = if m < a {
        (-0.5 * h * (a - m) * (a - m)).exp()
    } else if m > b {
        (-0.5 * h * (m - b) * (m - b)).exp()
    } else {
        1.0
    };
    let nec = if a < m && m < b {
        let near = (m - a).min(b - m);
        if near.is_infinite() {
            1.0
        } else {
            -(-0.5 * h * near * near).exp_m1()
        }
    } else {
        0.0
    };
    (nec, pos)
}

fn bel_pl_dual(params: [Dual; 3], a: f64, b: f64) -> (Dual, Dual) {
    let [mu, s2, h] = params;
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return (Dual::cst(1.0), Dual::cst(1.0));
    }
    if h.v == 0.0 {
        return (Dual::cst(0.0), Dual::cst(1.0));
    }
    if a == b {
        return (Dual::cst(0.0), contour_dual(params, a));
    }
    let (bel, pl) = if s2.v == 0.0 {
        deterministic_mode(mu, h, a, b)
    } else {
        let pl = mode_mass(mu, s2, a, b)
            + kernel_mass(params, a, f64::NEG_INFINITY, a)
            + kernel_mass(params, b, b, f64::INFINITY);
        let half = 0.5 * (b - a);
        let bel = if a.is_finite() && b.is_finite() && h.v * half * half < 1.0 {
            narrow_belief(params, a, b)
        } else {
            let c = match (a.is_finite(), b.is_finite()) {
                (true, true) => a + half,
                (false, _) => f64::NEG_INFINITY,
                (_, false) => f64::INFINITY,
            };
            mode_mass(mu, s2, a, b) - kernel_mass(params, a, a, c) - kernel_mass(params, b, c, b)
        };
        (bel, pl)
    };
    let pl = pl.max_cst(0.0).min_cst(1.0);
    let bel = bel.max_cst(0.0);
    let bel = if bel.v > pl.v { pl } else { bel };
    (bel, pl)
}

fn deterministic_mode(mu: Dual, h: Dual, a: f64, b: f64) -> (Dual, Dual) {
    let m = mu.v;
    let pl = if m < a {
        (-(h * (Dual::cst(a) - mu).square()).scale(0.5)).exp()
    } else if m > b {
        (-(h * (mu - Dual::cst(b)).square()).scale(0.5)).exp()
    } else {
        Dual::cst(1.0)
    };
    let bel = if a < m && m < b {
        let near = if m - a <= b - m {
            mu - Dual::cst(a)
        } else {
            Dual::cst(b) - mu
        };
        if near.v.is_infinite() {
            Dual::cst(1.0)
        } else {
            -(-(h * near.square()).scale(0.5)).exp_m1()
        }
    } else {
        Dual::cst(0.0)
    };
    (bel, pl)
}

/// Belief of a finite interval by composite Gauss-Legendre quadrature of
/// the per-mode necessity against the mode density.
fn narrow_belief([mu, s2, h]: [Dual; 3], a: f64, b: f64) -> Dual {
    let sd = s2.v.sqrt();
    let c = 0.5 * (a + b);
    let reach = 40.0 * sd;
    let norm = (s2.scale(2.0 * std::f64::consts::PI)).sqrt();
    let density = |m: f64| (-(Dual::cst(m) - mu).square() / s2.scale(2.0)).exp() / norm;
    let half = |lo: f64, hi: f64, anchor: f64| {
        let lo = lo.max(mu.v - reach);
        let hi = hi.min(mu.v + reach);
        if !(lo < hi) {
            return Dual::cst(0.0);
        }
        let panels = ((hi - lo) / (0.5 * sd)).ceil().clamp(1.0, 256.0) as usize;
        let width = (hi - lo) / panels as f64;
        let (nodes, weights) = quadrature::gauss_legendre();
        let mut acc = Dual::cst(0.0);
        for p in 0..panels {
            let centre = lo + (p as f64 + 0.5) * width;
            for (x, w) in nodes.iter().zip(weights) {
                let m = centre + 0.5 * width * x;
                let d = m - anchor;
                let nec = -(h.scale(-0.5 * d * d)).exp_m1();
                acc = acc + (nec * density(m)).scale(0.5 * width * w);
            }
        }
        acc
    };
    half(a, c, a) + half(c, b, b)
}
