//! Two-learner weighted ensemble with hedge weights and the disagreement
//! entropy signal.

use serde::{Deserialize, Serialize};

use crate::ingest::Label;
use crate::learners::Prediction;

pub const DEFAULT_HEDGE_ETA: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    /// `alpha[0]` weights the observed-space learner, `alpha[1]` the latent one.
    alpha: [f64; 2],
    eta: f64,
    cumulative_loss: [f64; 2],
}

impl EnsembleState {
    pub fn new(eta: f64) -> Self {
        EnsembleState {
            alpha: [0.5, 0.5],
            eta,
            cumulative_loss: [0.0, 0.0],
        }
    }

    /// Fixed weights, e.g. `(1, 0)` for the observed-space learner only.
    pub fn pinned(alpha: [f64; 2]) -> Self {
        EnsembleState {
            alpha,
            eta: 0.0,
            cumulative_loss: [0.0, 0.0],
        }
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cumulative_loss(&self) -> [f64; 2] {
        self.cumulative_loss
    }

    /// Multiplicative-weights step `alpha_i *= exp(-eta * loss_i)`, then
    /// renormalize.
    pub fn update_weights(&mut self, loss_f: f64, loss_l: f64) {
        let losses = [loss_f.clamp(0.0, 1.0), loss_l.clamp(0.0, 1.0)];
        // Subtracting the smaller loss leaves the normalized result unchanged
        // and keeps one factor at exactly 1.
        let base = losses[0].min(losses[1]);
        let mut w = [0.0; 2];
        for i in 0..2 {
            w[i] = self.alpha[i] * (-self.eta * (losses[i] - base)).exp();
            self.cumulative_loss[i] += losses[i];
        }
        let total = w[0] + w[1];
        if total > 0.0 && total.is_finite() {
            self.alpha = [w[0] / total, w[1] / total];
        }
    }

    /// Fixed-share step: move a fraction `share` of the weight back to the
    /// uniform split so that neither learner's weight can vanish for good.
    pub fn share(&mut self, share: f64) {
        let s = share.clamp(0.0, 1.0);
        self.alpha = [
            (1.0 - s) * self.alpha[0] + 0.5 * s,
            (1.0 - s) * self.alpha[1] + 0.5 * s,
        ];
    }

    pub fn reset(&mut self) {
        self.alpha = [0.5, 0.5];
    }
}

/// Ensemble prediction from tanh-squashed component margins.
pub fn combine(p_f: Prediction, p_l: Prediction, ens: &EnsembleState) -> Prediction {
    let [a1, a2] = ens.alpha;
    Prediction::from_margin(a1 * p_f.margin.tanh() + a2 * p_l.margin.tanh())
}

/// Binary entropy (bits) of the weighted vote mass on `+1`.
pub fn ensemble_entropy(p_f: Prediction, p_l: Prediction, ens: &EnsembleState) -> f64 {
    let [a1, a2] = ens.alpha;
    let q = a1 * f64::from(p_f.label == Label::Pos) + a2 * f64::from(p_l.label == Label::Pos);
    binary_entropy(q)
}

pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -(q * q.log2() + (1.0 - q) * (1.0 - q).log2())
}
