//! Online linear classifiers.
//!
//! Every learner keeps a dense weight vector plus bias and applies a single
//! step per labeled (or pseudo-labeled) instance. Steps are scaled by a
//! confidence weight in `(0, 1]`; weight 1 is the textbook update.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logistic,
    PassiveAggressive,
    Perceptron,
    RidgeSgd,
    HingeSgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub learning_rate: f64,
    pub l2: f64,
    /// PA-I aggressiveness.
    pub pa_c: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: LearnerKind::Logistic,
            learning_rate: 0.1,
            l2: 1e-4,
            pa_c: 1.0,
        }
    }
}

impl LearnerConfig {
    pub fn with_kind(kind: LearnerKind) -> Self {
        LearnerConfig {
            kind,
            ..LearnerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.l2 < 0.0 || !(self.pa_c > 0.0) {
            return Err(Error::Config(format!("invalid learner hyperparameters: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub margin: f64,
    pub label: Label,
}

impl Prediction {
    pub fn from_margin(margin: f64) -> Self {
        Prediction {
            margin,
            label: Label::from_margin(margin),
        }
    }
}

/// Anything that predicts before it learns. The runner drives baselines and
/// test doubles through this trait.
pub trait OnlineClassifier {
    fn predict(&mut self, x: &[f64]) -> Result<Prediction>;
    fn update(&mut self, x: &[f64], y: Label, weight: f64) -> Result<()>;

    /// Temporary learning-rate scaling; ignored by learners without a rate.
    fn set_rate_multiplier(&mut self, _multiplier: f64) {}
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearLearner {
    config: LearnerConfig,
    /// Feature weights followed by the bias.
    weights: Vec<f64>,
    rate_multiplier: f64,
    update_count: u64,
}

impl LinearLearner {
    pub fn new(d: usize, config: LearnerConfig) -> Self {
        LinearLearner {
            config,
            weights: vec![0.0; d + 1],
            rate_multiplier: 1.0,
            update_count: 0,
        }
    }

    pub fn kind(&self) -> LearnerKind {
        self.config.kind
    }

    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights[..self.dim()]
    }

    pub fn bias(&self) -> f64 {
        self.weights[self.dim()]
    }

    pub fn set_weights(&mut self, weights: &[f64], bias: f64) -> Result<()> {
        self.check(weights)?;
        let d = self.dim();
        self.weights[..d].copy_from_slice(weights);
        self.weights[d] = bias;
        Ok(())
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// Learning rate including any temporary post-drift boost.
    pub fn learning_rate(&self) -> f64 {
        self.config.learning_rate * self.rate_multiplier
    }

    pub fn set_rate_multiplier(&mut self, multiplier: f64) {
        self.rate_multiplier = multiplier;
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let d = self.dim();
        let dot: f64 = self.weights[..d].iter().zip(x).map(|(w, v)| w * v).sum();
        Ok(dot + self.weights[d])
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        Ok(Prediction::from_margin(self.margin(x)?))
    }

    fn shrink(&mut self, factor: f64) {
        let d = self.dim();
        for w in &mut self.weights[..d] {
            *w *= factor;
        }
    }

    fn add(&mut self, x: &[f64], scale: f64, bias_scale: f64) {
        let d = self.dim();
        for (w, v) in self.weights[..d].iter_mut().zip(x) {
            *w += scale * v;
        }
        self.weights[d] += bias_scale;
    }

    pub fn update(&mut self, x: &[f64], y: Label, weight: f64) -> Result<()> {
        let m = self.margin(x)?;
        let y = y.sign();
        let eta = self.learning_rate();
        let l2 = self.config.l2;
        match self.config.kind {
            LearnerKind::Logistic => {
                let g = eta * weight * y * sigmoid(-y * m);
                self.shrink(1.0 - eta * l2 * weight);
                self.add(x, g, g);
            }
            LearnerKind::PassiveAggressive => {
                let hinge = (1.0 - y * m).max(0.0);
                let sq: f64 = x.iter().map(|v| v * v).sum();
                // Without a bias term an all-zero input cannot be corrected.
                if hinge > 0.0 && sq > 0.0 {
                    let tau = (self.config.pa_c * self.rate_multiplier).min(hinge / sq) * weight;
                    self.add(x, tau * y, 0.0);
                }
            }
            LearnerKind::Perceptron => {
                if y * m <= 0.0 {
                    let s = weight * self.rate_multiplier;
                    self.add(x, s * y, s * y);
                }
            }
            LearnerKind::RidgeSgd => {
                // Normalized step keeps squared-loss SGD stable for any
                // feature count.
                let sq: f64 = x.iter().map(|v| v * v).sum();
                let g = eta * weight * (y - m) / (1.0 + sq);
                self.shrink(1.0 - eta * l2 * weight);
                self.add(x, g, g);
            }
            LearnerKind::HingeSgd => {
                self.shrink(1.0 - eta * l2 * weight);
                if y * m < 1.0 {
                    let g = eta * weight * y;
                    self.add(x, g, g);
                }
            }
        }
        self.update_count += 1;
        Ok(())
    }
}

impl OnlineClassifier for LinearLearner {
    fn predict(&mut self, x: &[f64]) -> Result<Prediction> {
        LinearLearner::predict(self, x)
    }

    fn update(&mut self, x: &[f64], y: Label, weight: f64) -> Result<()> {
        LinearLearner::update(self, x, y, weight)
    }

    fn set_rate_multiplier(&mut self, multiplier: f64) {
        LinearLearner::set_rate_multiplier(self, multiplier)
    }
}

/// Append-only CSV of weight checkpoints: `t,learner,bias,w0,w1,...`.
pub struct WeightLog<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> WeightLog<W> {
    pub fn new(out: W, d: usize) -> Result<Self> {
        let mut out = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "learner".to_string(), "bias".to_string()];
        header.extend((0..d).map(|j| format!("w{j}")));
        out.write_record(&header)?;
        Ok(WeightLog { out })
    }

    pub fn checkpoint(&mut self, t: usize, name: &str, learner: &LinearLearner) -> Result<()> {
        let mut row = vec![t.to_string(), name.to_string(), learner.bias().to_string()];
        row.extend(learner.weights().iter().map(|w| w.to_string()));
        self.out.write_record(&row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io("<weight log>", e))?;
        self.out
            .into_inner()
            .map_err(|e| Error::io("<weight log>", e.into_error()))
    }
}
