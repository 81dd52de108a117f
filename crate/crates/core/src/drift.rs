//! Dual-signal drift detector over an adaptive sliding window.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    /// Absolute rise in mean entropy that fires.
    pub theta_entropy: f64,
    /// Ratio of current to reference mean mismatch that fires.
    pub theta_mismatch: f64,
    pub epsilon: f64,
    pub w_ref: usize,
    /// Initial width of the current window.
    pub w_cur: usize,
    pub w_min: usize,
    pub w_max: usize,
    pub cooldown: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            theta_entropy: 0.3,
            theta_mismatch: 2.0,
            epsilon: 1e-6,
            w_ref: 100,
            w_cur: 100,
            w_min: 50,
            w_max: 400,
            cooldown: 100,
        }
    }
}

impl DriftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_entropy.is_finite() && self.theta_entropy >= 0.0) {
            return Err(Error::Config("theta_entropy must be finite and >= 0".into()));
        }
        if !(self.theta_mismatch.is_finite() && self.theta_mismatch > 0.0) {
            return Err(Error::Config("theta_mismatch must be finite and > 0".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        if self.w_ref == 0 || self.w_min == 0 {
            return Err(Error::Config("window sizes must be >= 1".into()));
        }
        if !(self.w_min <= self.w_cur && self.w_cur <= self.w_max) {
            return Err(Error::Config(format!(
                "need w_min <= w_cur <= w_max, got {} / {} / {}",
                self.w_min, self.w_cur, self.w_max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Entropy,
    Mismatch,
    Both,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::Entropy => "entropy",
            Trigger::Mismatch => "mismatch",
            Trigger::Both => "both",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    pub t: usize,
    pub trigger: Trigger,
    /// Window means at the time of firing.
    pub entropy_ref: f64,
    pub entropy_cur: f64,
    pub mismatch_ref: f64,
    pub mismatch_cur: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Signal {
    entropy: f64,
    mismatch: f64,
}

fn means(window: &VecDeque<Signal>) -> (f64, f64) {
    let n = window.len().max(1) as f64;
    let (e, m) = window
        .iter()
        .fold((0.0, 0.0), |(e, m), s| (e + s.entropy, m + s.mismatch));
    (e / n, m / n)
}

/// The current window holds the newest `width` signals; older ones spill into
/// the reference window, which keeps the most recent `w_ref` of them. The
/// width halves (down to `w_min`) on every detection and grows by `w_min`
/// (up to `w_max`) after each `w_max` quiet steps.
#[derive(Clone, Debug)]
pub struct DriftDetector {
    config: DriftConfig,
    reference: VecDeque<Signal>,
    current: VecDeque<Signal>,
    width: usize,
    cooldown: usize,
    quiet: usize,
    last_event: Option<usize>,
}

impl DriftDetector {
    pub fn new(config: DriftConfig) -> Result<Self> {
        config.validate()?;
        Ok(DriftDetector {
            reference: VecDeque::with_capacity(config.w_ref),
            current: VecDeque::with_capacity(config.w_max),
            width: config.w_cur,
            cooldown: 0,
            quiet: 0,
            last_event: None,
            config,
        })
    }

    pub fn config(&self) -> &DriftConfig {
        &self.config
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cooldown(&self) -> usize {
        self.cooldown
    }

    pub fn current_len(&self) -> usize {
        self.current.len()
    }

    pub fn reference_len(&self) -> usize {
        self.reference.len()
    }

    /// Feed one `(entropy, mismatch)` pair observed at time `t`.
    ///
    /// Non-finite or negative signals are rejected without touching state.
    pub fn observe(&mut self, t: usize, entropy: f64, mismatch: f64) -> Option<DriftEvent> {
        if !(entropy.is_finite() && mismatch.is_finite() && entropy >= 0.0 && mismatch >= 0.0) {
            return None;
        }
        if self.last_event.is_some_and(|last| t <= last) {
            return None;
        }
        self.current.push_back(Signal { entropy, mismatch });
        while self.current.len() > self.width {
            if let Some(old) = self.current.pop_front() {
                self.push_reference(old);
            }
        }
        self.cooldown = self.cooldown.saturating_sub(1);

        let ready = self.cooldown == 0
            && self.current.len() == self.width
            && self.reference.len() == self.config.w_ref;
        let event = if ready { self.test(t) } else { None };

        match &event {
            Some(_) => self.fire(t),
            None => {
                self.quiet += 1;
                if self.quiet >= self.config.w_max {
                    self.quiet = 0;
                    self.width = (self.width + self.config.w_min).min(self.config.w_max);
                }
            }
        }
        event
    }

    fn push_reference(&mut self, s: Signal) {
        if self.reference.len() == self.config.w_ref {
            self.reference.pop_front();
        }
        self.reference.push_back(s);
    }

    fn test(&self, t: usize) -> Option<DriftEvent> {
        let (e_ref, m_ref) = means(&self.reference);
        let (e_cur, m_cur) = means(&self.current);
        let by_entropy = e_cur - e_ref > self.config.theta_entropy;
        let by_mismatch = m_cur / m_ref.max(self.config.epsilon) > self.config.theta_mismatch;
        let trigger = match (by_entropy, by_mismatch) {
            (true, true) => Trigger::Both,
            (true, false) => Trigger::Entropy,
            (false, true) => Trigger::Mismatch,
            (false, false) => return None,
        };
        Some(DriftEvent {
            t,
            trigger,
            entropy_ref: e_ref,
            entropy_cur: e_cur,
            mismatch_ref: m_ref,
            mismatch_cur: m_cur,
        })
    }

    fn fire(&mut self, t: usize) {
        self.reference.clear();
        let drained: Vec<Signal> = self.current.drain(..).collect();
        for s in drained {
            self.push_reference(s);
        }
        self.width = (self.width / 2).max(self.config.w_min);
        self.cooldown = self.config.cooldown;
        self.quiet = 0;
        self.last_event = Some(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(signal: impl Fn(usize) -> (f64, f64), n: usize) -> Vec<DriftEvent> {
        let mut det = DriftDetector::new(DriftConfig::default()).unwrap();
        (0..n)
            .filter_map(|t| {
                let (e, m) = signal(t);
                det.observe(t, e, m)
            })
            .collect()
    }

    #[test]
    fn stationary_signal_never_fires() {
        assert!(run(|_| (0.1, 0.5), 2000).is_empty());
    }

    #[test]
    fn entropy_step_fires_in_bounds() {
        let events = run(|t| (if t < 1000 { 0.1 } else { 0.9 }, 0.5), 2000);
        let first = events.first().expect("no event");
        assert!(first.t > 1000 && first.t <= 1000 + 100 + 100, "{}", first.t);
        assert_eq!(first.trigger, Trigger::Entropy);
    }

    #[test]
    fn mismatch_ratio_fires() {
        let events = run(|t| (0.1, if t < 600 { 0.5 } else { 1.5 }), 1200);
        let first = events.first().expect("no event");
        assert!(first.t > 600);
        assert_eq!(first.trigger, Trigger::Mismatch);
    }

    #[test]
    fn zero_reference_mismatch_uses_epsilon() {
        let events = run(|t| (0.0, if t < 600 { 0.0 } else { 1e-3 }), 1200);
        assert!(!events.is_empty());
    }

    #[test]
    fn cooldown_and_width_after_fire() {
        let mut det = DriftDetector::new(DriftConfig::default()).unwrap();
        let mut fired_at = None;
        for t in 0..3000 {
            let e = if t < 300 { 0.0 } else { 1.0 };
            if let Some(ev) = det.observe(t, e, 0.5) {
                fired_at = Some(ev.t);
                break;
            }
        }
        let t0 = fired_at.expect("no event");
        assert_eq!(det.cooldown(), 100);
        assert_eq!(det.current_len(), 0);
        assert_eq!(det.width(), 50);
        // An even larger shift during cooldown is ignored.
        for t in t0 + 1..t0 + 100 {
            assert!(det.observe(t, 1.0, 50.0).is_none());
        }
    }

    #[test]
    fn quiet_streak_grows_width() {
        let mut det = DriftDetector::new(DriftConfig::default()).unwrap();
        for t in 0..400 {
            det.observe(t, 0.2, 0.2);
        }
        assert_eq!(det.width(), 150);
        for t in 400..800 {
            det.observe(t, 0.2, 0.2);
        }
        assert_eq!(det.width(), 200);
        for t in 800..4000 {
            det.observe(t, 0.2, 0.2);
        }
        assert_eq!(det.width(), 400);
    }

    #[test]
    fn invalid_signals_are_ignored() {
        let mut det = DriftDetector::new(DriftConfig::default()).unwrap();
        assert!(det.observe(0, f64::NAN, 0.0).is_none());
        assert!(det.observe(1, -1.0, 0.0).is_none());
        assert_eq!(det.current_len(), 0);
    }

    #[test]
    fn rejects_bad_config() {
        let c = DriftConfig { w_min: 200, ..DriftConfig::default() };
        assert!(DriftDetector::new(c).is_err());
    }

    proptest! {
        #[test]
        fn detector_invariants(signals in proptest::collection::vec((0.0f64..1.0, 0.0f64..3.0), 1..1500)) {
            let cfg = DriftConfig::default();
            let mut det = DriftDetector::new(cfg.clone()).unwrap();
            let mut last: Option<usize> = None;
            let mut since_fire = usize::MAX;
            for (t, (e, m)) in signals.into_iter().enumerate() {
                since_fire = since_fire.saturating_add(1);
                let before = det.current_len();
                let fired = det.observe(t, e, m);
                prop_assert!(det.current_len() <= det.width());
                prop_assert!(det.reference_len() <= cfg.w_ref);
                prop_assert!(det.width() >= cfg.w_min && det.width() <= cfg.w_max);
                if let Some(ev) = fired {
                    prop_assert!(before + 1 >= cfg.w_min);
                    prop_assert!(since_fire >= cfg.cooldown);
                    if let Some(l) = last {
                        prop_assert!(ev.t > l);
                    }
                    last = Some(ev.t);
                    since_fire = 0;
                }
            }
        }
    }
}
