use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::gauss::{clipped_ppf, norm_cdf, norm_ppf};
use crate::error::{Error, Result};
use crate::ingest::FeatureKind;

/// Smallest width of an ordinal latent interval; only reached for levels
/// that have not been observed yet.
const MIN_INTERVAL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LatentCoord {
    Point(f64),
    Interval { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Marginal {
    Continuous {
        capacity: usize,
        /// Arrival order, oldest first.
        window: VecDeque<f64>,
        #[serde(skip)]
        sorted: Vec<f64>,
    },
    Levels {
        counts: Vec<u64>,
    },
}

fn level_of(feature_id: usize, value: f64, levels: usize) -> Result<usize> {
    if value.fract() == 0.0 && value >= 0.0 && (value as usize) < levels {
        Ok(value as usize)
    } else {
        Err(Error::Schema(format!(
            "feature {feature_id}: {value} is not a level index in 0..{levels}"
        )))
    }
}

/// Online estimate of one feature's marginal distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalSketch {
    pub feature_id: usize,
    pub kind: FeatureKind,
    count: u64,
    marginal: Marginal,
}

impl MarginalSketch {
    pub fn new(feature_id: usize, kind: FeatureKind, level_count: usize, capacity: usize) -> Self {
        let marginal = match kind {
            FeatureKind::Continuous => Marginal::Continuous {
                capacity: capacity.max(1),
                window: VecDeque::with_capacity(capacity.max(1)),
                sorted: Vec::with_capacity(capacity.max(1)),
            },
            FeatureKind::Ordinal { .. } | FeatureKind::Binary => Marginal::Levels {
                counts: vec![0; level_count.max(1)],
            },
        };
        MarginalSketch {
            feature_id,
            kind,
            count: 0,
            marginal,
        }
    }

    /// Total number of observations ever folded in.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Reservoir contents in arrival order (continuous features only).
    pub fn reservoir(&self) -> Option<&VecDeque<f64>> {
        match &self.marginal {
            Marginal::Continuous { window, .. } => Some(window),
            Marginal::Levels { .. } => None,
        }
    }

    pub fn level_counts(&self) -> Option<&[u64]> {
        match &self.marginal {
            Marginal::Levels { counts } => Some(counts),
            Marginal::Continuous { .. } => None,
        }
    }

    pub(crate) fn restore_sorted(&mut self) {
        if let Marginal::Continuous { window, sorted, .. } = &mut self.marginal {
            *sorted = window.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
        }
    }

    pub fn observe(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Schema(format!(
                "feature {}: non-finite value",
                self.feature_id
            )));
        }
        match &mut self.marginal {
            Marginal::Continuous {
                capacity,
                window,
                sorted,
            } => {
                if window.len() == *capacity {
                    if let Some(old) = window.pop_front() {
                        let at = sorted.partition_point(|v| v.total_cmp(&old).is_lt());
                        sorted.remove(at);
                    }
                }
                window.push_back(value);
                let at = sorted.partition_point(|v| v.total_cmp(&value).is_le());
                sorted.insert(at, value);
            }
            Marginal::Levels { counts } => {
                let level = level_of(self.feature_id, value, counts.len())?;
                counts[level] += 1;
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Latent coordinate of `value` under the current marginal.
    ///
    /// Continuous values use the winsorized empirical cdf `rank/(m+1)` with
    /// the rank clamped to `[1, m]`; levels map to the interval between the
    /// normal quantiles of their cumulative frequencies, clipped to ±6.
    pub fn to_latent(&self, value: f64) -> Result<LatentCoord> {
        if self.is_empty() {
            return Err(Error::ColdStart(self.feature_id));
        }
        match &self.marginal {
            Marginal::Continuous { sorted, .. } => {
                let m = sorted.len();
                let rank = sorted.partition_point(|&v| v <= value).clamp(1, m);
                Ok(LatentCoord::Point(norm_ppf(rank as f64 / (m as f64 + 1.0))))
            }
            Marginal::Levels { counts } => {
                let level = level_of(self.feature_id, value, counts.len())?;
                let (lo, hi) = self.level_interval(counts, level);
                Ok(LatentCoord::Interval { lo, hi })
            }
        }
    }

    fn level_interval(&self, counts: &[u64], level: usize) -> (f64, f64) {
        let total: u64 = counts.iter().sum();
        let below: u64 = counts[..level].iter().sum();
        let upto = below + counts[level];
        let mut lo = clipped_ppf(below as f64 / total as f64);
        let mut hi = clipped_ppf(upto as f64 / total as f64);
        if hi - lo < MIN_INTERVAL {
            let mid = 0.5 * (lo + hi);
            lo = mid - 0.5 * MIN_INTERVAL;
            hi = mid + 0.5 * MIN_INTERVAL;
        }
        (lo, hi)
    }

    /// Map a latent value back to the observed scale: a reservoir quantile
    /// for continuous features, the containing level for ordinal ones.
    /// Cold sketches map everything to 0, the standardized mean.
    pub fn inverse(&self, z: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let q = norm_cdf(z);
        match &self.marginal {
            Marginal::Continuous { sorted, .. } => {
                let m = sorted.len();
                let idx = (q * (m as f64 + 1.0)).round().clamp(1.0, m as f64) as usize;
                sorted[idx - 1]
            }
            Marginal::Levels { counts } => {
                let total: u64 = counts.iter().sum();
                let mut cum = 0u64;
                for (level, &c) in counts.iter().enumerate() {
                    cum += c;
                    if cum as f64 > q * total as f64 {
                        return level as f64;
                    }
                }
                (counts.len() - 1) as f64
            }
        }
    }
}
