//! Monte Carlo estimate of belief and plausibility, independent of the
//! closed-form route: modes are sampled and the per-mode necessity and
//! possibility of the interval are averaged.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{mode_nec_pos, Grfn, RealInterval};
use crate::exec::{map_indices, Exec};

const CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub bel: f64,
    pub pl: f64,
    pub stderr_bel: f64,
    pub stderr_pl: f64,
}

/// Samples are drawn in fixed chunks, each from its own ChaCha stream, so
/// the estimate depends only on `(seed, n_samples)`.
pub fn mc_oracle(
    f: &Grfn,
    interval: &RealInterval,
    n_samples: usize,
    seed: u64,
    exec: Exec,
) -> McEstimate {
    assert!(n_samples >= 1, "mc_oracle needs at least one sample");
    let (a, b) = (interval.lo(), interval.hi());
    let whole = a == f64::NEG_INFINITY && b == f64::INFINITY;
    let sd = f.sigma2().sqrt();
    let n_chunks = n_samples.div_ceil(CHUNK);
    let per_mode = |m: f64| {
        if whole {
            (1.0, 1.0)
        } else if f.h() == 0.0 {
            (0.0, 1.0)
        } else {
            mode_nec_pos(m, f.h(), a, b)
        }
    };
    // samples are accumulated as deviations from the value at the mode
    // mean, which keeps a degenerate sample exact and the variance free of
    // cancellation
    let (nec0, pos0) = per_mode(f.mu());
    let partial = map_indices(exec, n_chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = CHUNK.min(n_samples - c * CHUNK);
        let mut acc = [Sum::default(); 4];
        for _ in 0..len {
            let z: f64 = StandardNormal.sample(&mut rng);
            let (nec, pos) = per_mode(f.mu() + sd * z);
            let (dn, dp) = (nec - nec0, pos - pos0);
            acc[0].add(dn);
            acc[1].add(dn * dn);
            acc[2].add(dp);
            acc[3].add(dp * dp);
        }
        acc
    });
    let mut sums = [Sum::default(); 4];
    for acc in partial {
        for i in 0..4 {
            sums[i].add(acc[i].value());
            sums[i].add(acc[i].carry);
        }
    }
    let tot = sums.map(|s| s.value());
    let n = n_samples as f64;
    let stderr = |sum: f64, sum_sq: f64| {
        if n_samples < 2 {
            return 0.0;
        }
        let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    };
    McEstimate {
        bel: (nec0 + tot[0] / n).clamp(0.0, 1.0),
        pl: (pos0 + tot[2] / n).clamp(0.0, 1.0),
        stderr_bel: stderr(tot[0], tot[1]),
        stderr_pl: stderr(tot[2], tot[3]),
    }
}

/// Neumaier compensated sum, so a million identical samples average back
/// to the sample value.
#[derive(Clone, Copy, Default)]
struct Sum {
    total: f64,
    carry: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.total + x;
        self.carry += if self.total.abs() >= x.abs() {
            (self.total - t) + x
        } else {
            (x - t) + self.total
        };
        self.total = t;
    }

    fn value(&self) -> f64 {
        self.total + self.carry
    }
}
