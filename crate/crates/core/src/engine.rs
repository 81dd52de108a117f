//! The per-instance online loop: latent transform, imputation, dual
//! prediction, drift tracking and pseudo-labeled updates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaConfig, CopulaState, LatentObservation};
use crate::drift::{DriftConfig, DriftDetector, DriftEvent};
use crate::ensemble::{combine, ensemble_entropy, EnsembleState, DEFAULT_HEDGE_ETA};
use crate::error::{Error, Result};
use crate::ingest::{Label, TypedSchema};
use crate::learners::{LearnerConfig, LinearLearner, OnlineClassifier, Prediction};
use crate::pseudo::{LabelBuffer, PseudoConfig, PseudoProposal};
use crate::stream::Instance;

/// Pseudo-label updates are capped strictly below the weight of a revealed
/// label.
pub const MAX_PSEUDO_WEIGHT: f64 = 0.99;

/// Which component learners drive the prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Full,
    /// Observed-space learner only (`alpha = (1, 0)`).
    FOnly,
    /// Latent-space learner only (`alpha = (0, 1)`).
    LOnly,
}

impl Mode {
    pub fn pinned_alpha(self) -> Option<[f64; 2]> {
        match self {
            Mode::Full => None,
            Mode::FOnly => Some([1.0, 0.0]),
            Mode::LOnly => Some([0.0, 1.0]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftResponse {
    /// Correlation step-size floor while boosted.
    pub decay_boost: f64,
    /// Learning-rate multiplier while boosted.
    pub rate_boost: f64,
    /// Boost length in instances; `None` uses the detector's `w_cur`.
    pub boost_len: Option<usize>,
    pub reset_alpha: bool,
    pub clear_buffer: bool,
}

impl Default for DriftResponse {
    fn default() -> Self {
        DriftResponse {
            decay_boost: 0.05,
            rate_boost: 5.0,
            boost_len: None,
            reset_alpha: true,
            clear_buffer: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub mode: Mode,
    pub copula: CopulaConfig,
    /// Observed-space learner.
    pub learner_f: LearnerConfig,
    /// Latent-space learner; slower than `learner_f` by default so that the
    /// pair disagrees for a while after a concept change.
    pub learner_l: LearnerConfig,
    pub hedge_eta: f64,
    /// Fixed-share mixing toward uniform weights after each hedge step.
    pub alpha_share: f64,
    pub detection: bool,
    pub drift: DriftConfig,
    pub response: DriftResponse,
    pub pseudo: PseudoConfig,
    /// Number of recent instances (current included) scored by the
    /// mismatch signal.
    pub mismatch_window: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            mode: Mode::Full,
            copula: CopulaConfig::default(),
            learner_f: LearnerConfig::default(),
            learner_l: LearnerConfig {
                learning_rate: 0.01,
                ..LearnerConfig::default()
            },
            hedge_eta: DEFAULT_HEDGE_ETA,
            alpha_share: 0.1,
            detection: true,
            drift: DriftConfig::default(),
            response: DriftResponse::default(),
            pseudo: PseudoConfig::default(),
            mismatch_window: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.copula.validate()?;
        self.learner_f.validate()?;
        self.learner_l.validate()?;
        self.drift.validate()?;
        self.pseudo.validate()?;
        if !(self.hedge_eta.is_finite() && self.hedge_eta >= 0.0) {
            return Err(Error::Config("hedge_eta must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha_share) {
            return Err(Error::Config("alpha_share must lie in [0, 1]".into()));
        }
        if self.mismatch_window == 0 {
            return Err(Error::Config("mismatch_window must be >= 1".into()));
        }
        let r = &self.response;
        if !(r.decay_boost > 0.0 && r.decay_boost <= 1.0) {
            return Err(Error::Config("decay_boost must lie in (0, 1]".into()));
        }
        if !(r.rate_boost.is_finite() && r.rate_boost > 0.0) {
            return Err(Error::Config("rate_boost must be finite and > 0".into()));
        }
        Ok(())
    }

    fn boost_len(&self) -> usize {
        self.response.boost_len.unwrap_or(self.drift.w_cur)
    }
}

/// Everything observable about one processed instance.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub t: usize,
    pub prediction: Prediction,
    pub pred_f: Option<Prediction>,
    pub pred_l: Option<Prediction>,
    /// Ensemble weight on the observed-space learner after this step.
    pub alpha1: Option<f64>,
    pub entropy: f64,
    pub mismatch: f64,
    pub drift: Option<DriftEvent>,
    pub pseudo: Option<PseudoProposal>,
    /// Weight of the learner update performed, if any.
    pub update_weight: Option<f64>,
}

impl StepOutcome {
    pub fn mistake(&self, truth: Label) -> bool {
        self.prediction.label != truth
    }
}

/// A model driven one instance at a time: predict, then learn.
pub trait StreamModel {
    fn step(&mut self, instance: &Instance) -> Result<StepOutcome>;
}

/// Copula latent space, two learners, hedge ensemble, drift detector and
/// pseudo-label buffer.
pub struct OnlineModel {
    config: ModelConfig,
    copula: CopulaState,
    learner_f: Box<dyn OnlineClassifier>,
    learner_l: Box<dyn OnlineClassifier>,
    ensemble: EnsembleState,
    pinned: bool,
    detector: DriftDetector,
    buffer: LabelBuffer,
    recent: VecDeque<(LatentObservation, Vec<f64>)>,
    rate_boost_remaining: usize,
    events: Vec<DriftEvent>,
}

impl OnlineModel {
    pub fn new(schema: &TypedSchema, config: ModelConfig) -> Result<Self> {
        let d = schema.dim();
        let f = Box::new(LinearLearner::new(d, config.learner_f.clone()));
        let l = Box::new(LinearLearner::new(d, config.learner_l.clone()));
        Self::with_learners(schema, config, f, l)
    }

    /// Like [`OnlineModel::new`] with caller-supplied component learners.
    pub fn with_learners(
        schema: &TypedSchema,
        config: ModelConfig,
        learner_f: Box<dyn OnlineClassifier>,
        learner_l: Box<dyn OnlineClassifier>,
    ) -> Result<Self> {
        config.validate()?;
        let (ensemble, pinned) = match config.mode.pinned_alpha() {
            Some(alpha) => (EnsembleState::pinned(alpha), true),
            None => (EnsembleState::new(config.hedge_eta), false),
        };
        Ok(OnlineModel {
            copula: CopulaState::new(schema, config.copula.clone())?,
            learner_f,
            learner_l,
            ensemble,
            pinned,
            detector: DriftDetector::new(config.drift.clone())?,
            buffer: LabelBuffer::new(config.pseudo.capacity),
            recent: VecDeque::with_capacity(config.mismatch_window),
            rate_boost_remaining: 0,
            events: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn copula(&self) -> &CopulaState {
        &self.copula
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.ensemble.alpha()
    }

    pub fn events(&self) -> &[DriftEvent] {
        &self.events
    }

    pub fn buffer(&self) -> &LabelBuffer {
        &self.buffer
    }

    pub fn rate_boost_remaining(&self) -> usize {
        self.rate_boost_remaining
    }

    fn uses_f(&self) -> bool {
        self.config.mode != Mode::LOnly
    }

    fn uses_l(&self) -> bool {
        self.config.mode != Mode::FOnly
    }

    fn update_learners(&mut self, x_rec: &[f64], z: &[f64], y: Label, weight: f64) -> Result<()> {
        if self.uses_f() {
            self.learner_f.update(x_rec, y, weight)?;
        }
        if self.uses_l() {
            self.learner_l.update(z, y, weight)?;
        }
        Ok(())
    }

    fn set_rate_multiplier(&mut self, m: f64) {
        self.learner_f.set_rate_multiplier(m);
        self.learner_l.set_rate_multiplier(m);
    }

    /// Reaction to a detected drift: uniform ensemble weights, a temporary
    /// plasticity boost for the copula and the learners, and an empty
    /// pseudo-label buffer. Learned weights are kept.
    pub fn on_drift(&mut self) {
        if self.config.response.reset_alpha && !self.pinned {
            self.ensemble.reset();
        }
        let len = self.config.boost_len();
        self.copula.boost_plasticity(self.config.response.decay_boost, len);
        if len > 0 {
            self.rate_boost_remaining = len;
            self.set_rate_multiplier(self.config.response.rate_boost);
        }
        if self.config.response.clear_buffer {
            self.buffer.clear();
        }
    }

    fn tick_rate_boost(&mut self) {
        if self.rate_boost_remaining > 0 {
            self.rate_boost_remaining -= 1;
            if self.rate_boost_remaining == 0 {
                self.set_rate_multiplier(1.0);
            }
        }
    }
}

impl StreamModel for OnlineModel {
    fn step(&mut self, instance: &Instance) -> Result<StepOutcome> {
        let t = instance.t;
        let warmed = self.copula.warm_cold_features(&instance.observed)?;
        let obs = self.copula.to_latent(&instance.observed)?;
        let imp = self.copula.impute(&obs, &instance.observed);

        if self.recent.len() == self.config.mismatch_window {
            self.recent.pop_front();
        }
        self.recent.push_back((obs.clone(), imp.z_full.clone()));
        let window: Vec<_> = self.recent.iter().cloned().collect();
        let mismatch = self.copula.latent_mismatch(&window);

        let pred_f = if self.uses_f() { Some(self.learner_f.predict(&imp.x_rec)?) } else { None };
        let pred_l = if self.uses_l() { Some(self.learner_l.predict(&imp.z_full)?) } else { None };
        let neutral = Prediction::from_margin(0.0);
        let (pf, pl) = (pred_f.unwrap_or(neutral), pred_l.unwrap_or(neutral));
        let prediction = combine(pf, pl, &self.ensemble);
        let entropy = ensemble_entropy(pf, pl, &self.ensemble);

        let mut pseudo = None;
        let update_weight = match instance.label {
            Some(y) => {
                self.update_learners(&imp.x_rec, &imp.z_full, y, 1.0)?;
                self.buffer.insert(imp.z_full.clone(), y, t);
                if !self.pinned {
                    let loss = |p: Prediction| f64::from(u8::from(p.label != y));
                    self.ensemble.update_weights(loss(pf), loss(pl));
                    self.ensemble.share(self.config.alpha_share);
                }
                Some(1.0)
            }
            None if self.config.pseudo.enabled => {
                let p = &self.config.pseudo;
                pseudo = self.buffer.propose(&imp.z_full, p.k, p.min_conf);
                match pseudo {
                    Some(prop) => {
                        let w = prop.confidence.min(MAX_PSEUDO_WEIGHT);
                        self.update_learners(&imp.x_rec, &imp.z_full, prop.label, w)?;
                        Some(w)
                    }
                    None => None,
                }
            }
            None => None,
        };
        self.tick_rate_boost();

        let drift = if self.config.detection {
            self.detector.observe(t, entropy, mismatch)
        } else {
            None
        };
        if let Some(ev) = &drift {
            self.events.push(ev.clone());
            self.on_drift();
        }

        self.copula.update_correlation(&obs);
        let fresh: Vec<(usize, f64)> = instance
            .observed
            .iter()
            .copied()
            .filter(|(j, _)| !warmed.contains(j))
            .collect();
        self.copula.update_marginals(&fresh)?;

        Ok(StepOutcome {
            t,
            prediction,
            pred_f,
            pred_l,
            alpha1: Some(self.ensemble.alpha()[0]),
            entropy,
            mismatch,
            drift,
            pseudo,
            update_weight,
        })
    }
}

/// A single learner on zero-filled observed features; no latent space,
/// drift handling or pseudo-labels.
pub struct BaselineModel {
    dim: usize,
    learner: Box<dyn OnlineClassifier>,
}

impl BaselineModel {
    pub fn new(dim: usize, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::with_learner(dim, Box::new(LinearLearner::new(dim, config))))
    }

    pub fn with_learner(dim: usize, learner: Box<dyn OnlineClassifier>) -> Self {
        BaselineModel { dim, learner }
    }
}

impl StreamModel for BaselineModel {
    fn step(&mut self, instance: &Instance) -> Result<StepOutcome> {
        let mut x = vec![0.0; self.dim];
        for &(j, v) in &instance.observed {
            *x.get_mut(j).ok_or(Error::Dimension { expected: self.dim, got: j + 1 })? = v;
        }
        let prediction = self.learner.predict(&x)?;
        let update_weight = match instance.label {
            Some(y) => {
                self.learner.update(&x, y, 1.0)?;
                Some(1.0)
            }
            None => None,
        };
        Ok(StepOutcome {
            t: instance.t,
            prediction,
            pred_f: None,
            pred_l: None,
            alpha1: None,
            entropy: 0.0,
            mismatch: 0.0,
            drift: None,
            pseudo: None,
            update_weight,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FeatureKind, FeatureSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn schema(d: usize) -> TypedSchema {
        TypedSchema::all_continuous(d)
    }

    fn linear_stream(n: usize, d: usize, seed: u64, missing: f64) -> Vec<Instance> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|t| {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let y = Label::from_margin(x[0] + 0.5 * x[1]);
                let observed: Vec<(usize, f64)> = x.iter().copied().enumerate().filter(|_| rng.gen_bool(0.8)).collect();
                let observed = if observed.is_empty() { vec![(0, x[0])] } else { observed };
                let label = (!rng.gen_bool(missing)).then_some(y);
                Instance { t, observed, label, true_label: y }
            })
            .collect()
    }

    fn run(model: &mut dyn StreamModel, stream: &[Instance]) -> Vec<StepOutcome> {
        stream.iter().map(|i| model.step(i).unwrap()).collect()
    }

    #[test]
    fn learns_a_linear_concept() {
        let stream = linear_stream(1500, 4, 3, 0.0);
        let mut m = OnlineModel::new(&schema(4), ModelConfig::default()).unwrap();
        let out = run(&mut m, &stream);
        let late = out[1000..].iter().zip(&stream[1000..]).filter(|(o, i)| o.mistake(i.true_label)).count();
        assert!(late < 100, "{late}");
        for o in &out {
            let a = o.alpha1.unwrap();
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn pinned_modes_match_explicit_pin() {
        let stream = linear_stream(400, 3, 5, 0.5);
        for mode in [Mode::FOnly, Mode::LOnly] {
            let cfg = ModelConfig { mode, ..ModelConfig::default() };
            let mut a = OnlineModel::new(&schema(3), cfg.clone()).unwrap();
            let mut b = OnlineModel::new(&schema(3), cfg).unwrap();
            let oa = run(&mut a, &stream);
            let ob = run(&mut b, &stream);
            assert_eq!(oa, ob);
            let want = mode.pinned_alpha().unwrap()[0];
            assert!(oa.iter().all(|o| o.alpha1 == Some(want) && o.entropy == 0.0));
        }
    }

    #[test]
    fn pseudo_weights_below_one() {
        let stream = linear_stream(800, 3, 9, 0.7);
        let mut m = OnlineModel::new(&schema(3), ModelConfig::default()).unwrap();
        let out = run(&mut m, &stream);
        let mut pseudo_updates = 0;
        for (o, i) in out.iter().zip(&stream) {
            match (i.label, o.update_weight) {
                (Some(_), w) => assert_eq!(w, Some(1.0)),
                (None, Some(w)) => {
                    pseudo_updates += 1;
                    assert!(w < 1.0 && w >= m.config().pseudo.min_conf);
                }
                (None, None) => {}
            }
        }
        assert!(pseudo_updates > 100);
    }

    #[test]
    fn on_drift_resets_and_boost_expires() {
        let mut m = OnlineModel::new(&schema(2), ModelConfig::default()).unwrap();
        for inst in linear_stream(50, 2, 1, 0.0) {
            m.step(&inst).unwrap();
        }
        assert_ne!(m.alpha(), [0.5, 0.5]);
        m.on_drift();
        assert_eq!(m.alpha(), [0.5, 0.5]);
        assert!(m.buffer().is_empty());
        assert_eq!(m.rate_boost_remaining(), 100);
        assert_eq!(m.copula().boost_remaining(), 100);
        let cfg = ModelConfig { detection: false, ..ModelConfig::default() };
        let mut quiet = OnlineModel::new(&schema(2), cfg).unwrap();
        quiet.on_drift();
        for inst in linear_stream(100, 2, 2, 0.0) {
            quiet.step(&inst).unwrap();
        }
        assert_eq!(quiet.rate_boost_remaining(), 0);
        assert_eq!(quiet.copula().boost_remaining(), 0);
    }

    #[test]
    fn baseline_zero_fills() {
        let mut b = BaselineModel::new(3, LearnerConfig::default()).unwrap();
        let inst = Instance { t: 0, observed: vec![(2, 1.0)], label: Some(Label::Neg), true_label: Label::Neg };
        let o = b.step(&inst).unwrap();
        assert_eq!(o.prediction.margin, 0.0);
        let bad = Instance { observed: vec![(5, 1.0)], ..inst };
        assert!(b.step(&bad).is_err());
    }

    #[test]
    fn mixed_schema_runs() {
        let schema = TypedSchema {
            features: vec![
                FeatureSpec { id: 0, kind: FeatureKind::Continuous, level_values: vec![] },
                FeatureSpec { id: 1, kind: FeatureKind::Ordinal { levels: 4 }, level_values: vec![0.0, 1.0, 2.0, 3.0] },
                FeatureSpec { id: 2, kind: FeatureKind::Binary, level_values: vec![0.0, 1.0] },
            ],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = OnlineModel::new(&schema, ModelConfig::default()).unwrap();
        for t in 0..300 {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let lvl = ((a + 2.0).floor()).clamp(0.0, 3.0);
            let bin = f64::from(u8::from(a > 0.3));
            let y = Label::from_margin(a);
            let observed: Vec<(usize, f64)> = [(0, a), (1, lvl), (2, bin)].into_iter().filter(|_| rng.gen_bool(0.6)).collect();
            let observed = if observed.is_empty() { vec![(1, lvl)] } else { observed };
            let o = m.step(&Instance { t, observed, label: Some(y), true_label: y }).unwrap();
            assert!(o.mismatch.is_finite() && o.entropy.is_finite());
        }
        assert!(m.copula().sigma()[(0, 1)] > 0.5);
    }
}
