use super::{LossConfig, ObservedTarget};
use crate::grfn::{clamped_ln, Grfn, RealInterval, PROB_FLOOR};

/// The interval an observation is scored on: `[y - ε, y + ε]` for events,
/// `[y, ∞)` for censored records.
fn observed_interval(tgt: &ObservedTarget, cfg: &LossConfig) -> RealInterval {
    let iv = if tgt.event {
        RealInterval::new(tgt.y - cfg.epsilon, tgt.y + cfg.epsilon)
    } else {
        RealInterval::at_least(tgt.y)
    };
    iv.expect("finite target gives a valid interval")
}

/// `λ·(-ln Bel) + (1 - λ)·(-ln Pl)` on the observed interval, with
/// probabilities floored before the logarithm.
pub fn loss_sample(out: &Grfn, tgt: &ObservedTarget, cfg: &LossConfig) -> f64 {
    let bp = out.bel_pl(&observed_interval(tgt, cfg));
    -cfg.lambda * clamped_ln(bp.bel) - (1.0 - cfg.lambda) * clamped_ln(bp.pl)
}

/// Loss value and its gradient with respect to the output `(mu, sigma2, h)`.
pub(crate) fn loss_with_grad(out: &Grfn, tgt: &ObservedTarget, cfg: &LossConfig) -> (f64, [f64; 3]) {
    let g = out.bel_pl_grad(&observed_interval(tgt, cfg));
    let loss = -cfg.lambda * clamped_ln(g.bel) - (1.0 - cfg.lambda) * clamped_ln(g.pl);
    let mut grad = [0.0; 3];
    if g.bel > PROB_FLOOR {
        for (gi, d) in grad.iter_mut().zip(g.d_bel) {
            *gi -= cfg.lambda * d / g.bel;
        }
    }
    if g.pl > PROB_FLOOR {
        for (gi, d) in grad.iter_mut().zip(g.d_pl) {
            *gi -= (1.0 - cfg.lambda) * d / g.pl;
        }
    }
    (loss, grad)
}
