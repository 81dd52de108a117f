//! Pseudo-labels from labeled neighbors in latent space.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;

const VOTE_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PseudoConfig {
    pub enabled: bool,
    pub k: usize,
    pub capacity: usize,
    pub min_conf: f64,
}

impl Default for PseudoConfig {
    fn default() -> Self {
        PseudoConfig {
            enabled: true,
            k: 5,
            capacity: 200,
            min_conf: 0.3,
        }
    }
}

impl PseudoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.capacity == 0 {
            return Err(Error::Config("pseudo-label k and capacity must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_conf) {
            return Err(Error::Config("min_conf must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BufferEntry {
    pub z: Vec<f64>,
    pub label: Label,
    pub t: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoProposal {
    pub label: Label,
    pub confidence: f64,
    pub k_used: usize,
}

/// FIFO ring of recent labeled latent vectors.
#[derive(Clone, Debug)]
pub struct LabelBuffer {
    capacity: usize,
    entries: VecDeque<BufferEntry>,
}

impl LabelBuffer {
    pub fn new(capacity: usize) -> Self {
        LabelBuffer {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &BufferEntry> {
        self.entries.iter()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn insert(&mut self, z: Vec<f64>, label: Label, t: usize) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(BufferEntry { z, label, t });
    }

    /// Inverse-distance vote of the `k` nearest entries; abstains when fewer
    /// than `k` entries exist or `|vote| < min_conf`.
    pub fn propose(&self, z: &[f64], k: usize, min_conf: f64) -> Option<PseudoProposal> {
        if k == 0 || self.entries.len() < k {
            return None;
        }
        let mut scored: Vec<(f64, usize, Label)> = self
            .entries
            .iter()
            .map(|e| {
                let d2: f64 = e.z.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), e.t, e.label)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (num, den) = scored[..k].iter().fold((0.0, 0.0), |(n, d), &(dist, _, y)| {
            let w = 1.0 / (dist + VOTE_EPS);
            (n + w * y.sign(), d + w)
        });
        let v = num / den;
        if v == 0.0 || v.abs() < min_conf {
            return None;
        }
        Some(PseudoProposal {
            label: Label::from_margin(v),
            confidence: v.abs().min(1.0),
            k_used: k,
        })
    }
}
