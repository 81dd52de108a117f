//! Turning a static dataset into a capricious or trapezoidal stream.
//!
//! All randomness is drawn from ChaCha8 keyed by the run seed, with one
//! stream id per purpose so that feature exposure and label masking never
//! share draws.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, Label};

const FEATURE_STREAM: u64 = 1;
const LABEL_STREAM: u64 = 2;

pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Capricious,
    Trapezoidal,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Capricious => "capricious",
            Regime::Trapezoidal => "trapezoidal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamConfig {
    pub regime: Regime,
    /// Per-feature exposure probability (capricious only).
    pub keep_prob: f64,
    /// Number of contiguous chunks (trapezoidal only).
    pub n_chunks: usize,
    pub label_missing_ratio: f64,
    pub seed: u64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            regime: Regime::Capricious,
            keep_prob: 0.5,
            n_chunks: 10,
            label_missing_ratio: 0.0,
            seed: 0,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        match self.regime {
            Regime::Capricious if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) => {
                return Err(Error::Config(format!(
                    "keep_prob must be in (0, 1], got {}",
                    self.keep_prob
                )))
            }
            Regime::Trapezoidal if self.n_chunks == 0 => {
                return Err(Error::Config("n_chunks must be >= 1".into()))
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.label_missing_ratio) {
            return Err(Error::Config(format!(
                "label_missing_ratio must be in [0, 1), got {}",
                self.label_missing_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub t: usize,
    /// Visible `(feature, value)` pairs, sorted by feature id, never empty.
    pub observed: Vec<(usize, f64)>,
    /// Training label; `None` when masked.
    pub label: Option<Label>,
    /// Ground truth, used for evaluation only.
    pub true_label: Label,
}

pub fn make_capricious(dataset: &Dataset, config: &StreamConfig) -> Vec<Instance> {
    let mut rng = substream(config.seed, FEATURE_STREAM);
    let d = dataset.d();
    dataset
        .records
        .iter()
        .enumerate()
        .map(|(t, record)| {
            // One draw per schema feature keeps the generator position
            // independent of which values happen to be missing.
            let keep: Vec<bool> = (0..d).map(|_| rng.gen::<f64>() < config.keep_prob).collect();
            let mut observed: Vec<(usize, f64)> = record
                .features
                .iter()
                .copied()
                .filter(|&(j, _)| keep[j])
                .collect();
            if observed.is_empty() {
                let pick = rng.gen_range(0..record.features.len());
                observed.push(record.features[pick]);
            }
            Instance {
                t,
                observed,
                label: Some(record.label),
                true_label: record.label,
            }
        })
        .collect()
}

/// Number of features exposed by 1-based chunk `chunk` out of `n_chunks`.
pub fn trapezoid_width(chunk: usize, n_chunks: usize, d: usize) -> usize {
    (chunk * d).div_ceil(n_chunks)
}

/// Chunk sizes for `n` instances split into `n_chunks`, remainder first.
pub fn chunk_sizes(n: usize, n_chunks: usize) -> Vec<usize> {
    let base = n / n_chunks;
    let rem = n % n_chunks;
    (0..n_chunks).map(|i| base + usize::from(i < rem)).collect()
}

pub fn make_trapezoidal(dataset: &Dataset, config: &StreamConfig) -> Vec<Instance> {
    let n_chunks = config.n_chunks.clamp(1, dataset.n().max(1));
    let d = dataset.d();
    let mut out = Vec::with_capacity(dataset.n());
    let mut t = 0;
    for (c, size) in chunk_sizes(dataset.n(), n_chunks).into_iter().enumerate() {
        let width = trapezoid_width(c + 1, n_chunks, d);
        for record in &dataset.records[t..t + size] {
            let mut observed: Vec<(usize, f64)> = record
                .features
                .iter()
                .copied()
                .filter(|&(j, _)| j < width)
                .collect();
            if observed.is_empty() {
                // The record is missing every feature of the prefix; reveal
                // its lowest present feature so the instance is usable.
                observed.push(record.features[0]);
            }
            out.push(Instance {
                t,
                observed,
                label: Some(record.label),
                true_label: record.label,
            });
            t += 1;
        }
    }
    out
}

pub fn mask_labels(mut stream: Vec<Instance>, ratio: f64, seed: u64) -> Vec<Instance> {
    let mut rng = substream(seed, LABEL_STREAM);
    for inst in &mut stream {
        if rng.gen::<f64>() < ratio {
            inst.label = None;
        }
    }
    stream
}

/// Regime dispatch followed by label masking.
pub fn synthesize(dataset: &Dataset, config: &StreamConfig) -> Result<Vec<Instance>> {
    config.validate()?;
    let stream = match config.regime {
        Regime::Capricious => make_capricious(dataset, config),
        Regime::Trapezoidal => make_trapezoidal(dataset, config),
    };
    Ok(mask_labels(stream, config.label_missing_ratio, config.seed))
}

fn label_token(label: Option<Label>) -> &'static str {
    match label {
        Some(Label::Pos) => "+1",
        Some(Label::Neg) => "-1",
        None => "?",
    }
}

/// One line per instance: `t<TAB>j:v,j:v<TAB>label<TAB>true_label`, with
/// `?` for a masked label.
pub fn write_stream(stream: &[Instance], out: &mut impl Write) -> Result<()> {
    let mut line = String::new();
    for inst in stream {
        line.clear();
        let _ = write!(line, "{}\t", inst.t);
        for (i, (j, v)) in inst.observed.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{j}:{v}");
        }
        let _ = write!(
            line,
            "\t{}\t{}",
            label_token(inst.label),
            label_token(Some(inst.true_label))
        );
        writeln!(out, "{line}").map_err(|e| Error::io("<stream writer>", e))?;
    }
    Ok(())
}

pub fn read_stream(input: impl BufRead) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<stream reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            path: "<stream>".into(),
            line: i + 1,
            msg: msg.into(),
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(bad("expected 4 tab-separated columns"));
        }
        let t = cols[0].parse().map_err(|_| bad("bad time index"))?;
        let mut observed = Vec::new();
        for pair in cols[1].split(',').filter(|p| !p.is_empty()) {
            let (j, v) = pair.split_once(':').ok_or_else(|| bad("bad j:v pair"))?;
            observed.push((
                j.parse().map_err(|_| bad("bad feature id"))?,
                v.parse().map_err(|_| bad("bad value"))?,
            ));
        }
        let label = match cols[2] {
            "?" => None,
            s => Some(Label::parse_signed(s).ok_or_else(|| bad("bad label"))?),
        };
        let true_label = Label::parse_signed(cols[3]).ok_or_else(|| bad("bad true label"))?;
        out.push(Instance {
            t,
            observed,
            label,
            true_label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Record;
    use proptest::prelude::*;

    fn dense(n: usize, d: usize) -> Dataset {
        let records = (0..n)
            .map(|i| Record {
                features: (0..d).map(|j| (j, (i * d + j) as f64)).collect(),
                label: if i % 3 == 0 { Label::Pos } else { Label::Neg },
            })
            .collect();
        Dataset::from_records("dense", d, records).unwrap()
    }

    fn cap(keep_prob: f64, seed: u64) -> StreamConfig {
        StreamConfig {
            regime: Regime::Capricious,
            keep_prob,
            seed,
            ..StreamConfig::default()
        }
    }

    #[test]
    fn full_keep_exposes_everything() {
        let ds = dense(50, 7);
        for inst in make_capricious(&ds, &cap(1.0, 3)) {
            assert_eq!(inst.observed.len(), 7);
        }
    }

    #[test]
    fn half_keep_mean_count() {
        let ds = dense(1000, 30);
        let s = make_capricious(&ds, &cap(0.5, 42));
        let mean = s.iter().map(|i| i.observed.len()).sum::<usize>() as f64 / 1000.0;
        assert!((14.0..=16.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn capricious_is_deterministic() {
        let ds = dense(200, 10);
        assert_eq!(make_capricious(&ds, &cap(0.3, 9)), make_capricious(&ds, &cap(0.3, 9)));
        assert_ne!(make_capricious(&ds, &cap(0.3, 9)), make_capricious(&ds, &cap(0.3, 10)));
    }

    #[test]
    fn force_reveal_keeps_instances_nonempty() {
        let ds = dense(500, 3);
        assert!(make_capricious(&ds, &cap(0.01, 1)).iter().all(|i| !i.observed.is_empty()));
    }

    #[test]
    fn trapezoid_widths() {
        assert_eq!(trapezoid_width(1, 10, 20), 2);
        assert_eq!(trapezoid_width(10, 10, 20), 20);
        let w: Vec<_> = (1..=3).map(|c| trapezoid_width(c, 3, 7)).collect();
        assert_eq!(w, vec![3, 5, 7]);
        assert_eq!(chunk_sizes(10, 3), vec![4, 3, 3]);
    }

    #[test]
    fn trapezoidal_chunks() {
        let ds = dense(100, 20);
        let cfg = StreamConfig { regime: Regime::Trapezoidal, n_chunks: 10, ..Default::default() };
        let s = make_trapezoidal(&ds, &cfg);
        assert_eq!(s[0].observed.len(), 2);
        assert_eq!(s[99].observed.len(), 20);
        let one = StreamConfig { n_chunks: 1, ..cfg };
        assert!(make_trapezoidal(&ds, &one).iter().all(|i| i.observed.len() == 20));
    }

    #[test]
    fn masking() {
        let ds = dense(1000, 2);
        let s = make_capricious(&ds, &cap(1.0, 0));
        assert!(mask_labels(s.clone(), 0.0, 5).iter().all(|i| i.label.is_some()));
        let masked = mask_labels(s, 0.9, 5);
        let labeled = masked.iter().filter(|i| i.label.is_some()).count();
        assert!((70..=130).contains(&labeled), "{labeled}");
        assert_eq!(mask_labels(masked.clone(), 0.0, 77), masked);
    }

    #[test]
    fn label_ratio_does_not_move_feature_exposure() {
        let ds = dense(300, 8);
        let a = synthesize(&ds, &StreamConfig { label_missing_ratio: 0.1, ..cap(0.5, 4) }).unwrap();
        let b = synthesize(&ds, &StreamConfig { label_missing_ratio: 0.7, ..cap(0.5, 4) }).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.observed, y.observed);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(cap(0.0, 0).validate().is_err());
        assert!(StreamConfig { label_missing_ratio: 1.0, ..cap(0.5, 0) }.validate().is_err());
        let trap = StreamConfig { regime: Regime::Trapezoidal, n_chunks: 0, ..Default::default() };
        assert!(trap.validate().is_err());
    }

    proptest! {
        #[test]
        fn stream_invariants(n in 1usize..60, d in 1usize..12, keep in 0.05f64..1.0,
                             chunks in 1usize..12, ratio in 0.0f64..0.99, seed in any::<u64>(),
                             trap in any::<bool>()) {
            let ds = dense(n, d);
            let cfg = StreamConfig {
                regime: if trap { Regime::Trapezoidal } else { Regime::Capricious },
                keep_prob: keep,
                n_chunks: chunks.min(n),
                label_missing_ratio: ratio,
                seed,
            };
            let s = synthesize(&ds, &cfg).unwrap();
            prop_assert_eq!(s.len(), n);
            let mut prev: Vec<usize> = Vec::new();
            for (inst, rec) in s.iter().zip(&ds.records) {
                prop_assert!(!inst.observed.is_empty());
                prop_assert_eq!(inst.true_label, rec.label);
                if let Some(l) = inst.label { prop_assert_eq!(l, rec.label); }
                for &(j, v) in &inst.observed {
                    prop_assert_eq!(rec.get(j), Some(v));
                }
                if trap {
                    let ids: Vec<usize> = inst.observed.iter().map(|p| p.0).collect();
                    prop_assert!(prev.iter().all(|j| ids.contains(j)));
                    prev = ids;
                }
            }
            let mut buf = Vec::new();
            write_stream(&s, &mut buf).unwrap();
            prop_assert_eq!(read_stream(&buf[..]).unwrap(), s);
        }
    }
}
