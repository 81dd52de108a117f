//! Seeded synthetic datasets with known structure, used as test oracles and
//! as stand-ins for unavailable benchmark files.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, FeatureKind, FeatureSpec, Label, Record, TypedSchema};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws from a Gaussian copula with correlation `sigma`.
pub struct CopulaSample {
    pub dataset: Dataset,
    /// The latent normal draws behind each record, row per record.
    pub latent: Vec<Vec<f64>>,
}

/// Latent `N(0, sigma)` draws pushed through per-feature marginals:
/// continuous features get `exp(z)` (a monotone, non-Gaussian marginal);
/// ordinal features with `L` levels cut `z` at the standard-normal
/// quantiles of `1/L, ..., (L-1)/L`. Labels follow the sign of the first
/// latent coordinate.
pub fn gaussian_copula(sigma: &DMatrix<f64>, kinds: &[FeatureKind], n: usize, seed: u64) -> Result<CopulaSample> {
    let d = kinds.len();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::Dimension { expected: d, got: sigma.nrows() });
    }
    let chol = Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::Config("sigma is not positive definite".into()))?
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    for _ in 0..n {
        let e = DVector::from_fn(d, |_, _| gaussian(&mut rng));
        let z = &chol * e;
        let features = kinds
            .iter()
            .enumerate()
            .map(|(j, kind)| (j, observe_marginal(*kind, z[j])))
            .collect();
        records.push(Record { features, label: Label::from_margin(z[0]) });
        latent.push(z.iter().copied().collect());
    }
    let schema = TypedSchema {
        features: kinds
            .iter()
            .enumerate()
            .map(|(id, &kind)| {
                let level_values = match kind {
                    FeatureKind::Continuous => vec![],
                    FeatureKind::Ordinal { levels } => (0..levels).map(|l| l as f64).collect(),
                    FeatureKind::Binary => vec![0.0, 1.0],
                };
                FeatureSpec { id, kind, level_values }
            })
            .collect(),
    };
    let dataset = Dataset::from_records("gaussian_copula", d, records)?.with_schema(schema);
    Ok(CopulaSample { dataset, latent })
}

fn observe_marginal(kind: FeatureKind, z: f64) -> f64 {
    let levels = match kind {
        FeatureKind::Continuous => return z.exp(),
        FeatureKind::Ordinal { levels } => levels,
        FeatureKind::Binary => 2,
    };
    let u = crate::copula::gauss::norm_cdf(z);
    ((u * levels as f64).floor() as usize).min(levels - 1) as f64
}

/// Equicorrelated matrix with off-diagonal `rho`.
pub fn equicorrelation(d: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho })
}

/// Correlated Gaussian features with a fixed linear concept whose sign is
/// reversed from record `flip_at` on.
pub fn label_flip(n: usize, d: usize, flip_at: usize, rho: f64, seed: u64) -> Result<Dataset> {
    let chol = Cholesky::new(equicorrelation(d, rho))
        .ok_or_else(|| Error::Config("invalid correlation".into()))?
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..d).map(|j| if j % 2 == 0 { 1.0 } else { -0.5 }).collect();
    let records = (0..n)
        .map(|t| {
            let x = &chol * DVector::from_fn(d, |_, _| gaussian(&mut rng));
            let m: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            let y = Label::from_margin(m);
            let features = x.iter().copied().enumerate().collect();
            Record { features, label: if t >= flip_at { y.flipped() } else { y } }
        })
        .collect();
    Dataset::from_records("label_flip", d, records)
}

/// Two Gaussian clusters at `±sep/2` along every axis; the label is the
/// cluster.
pub fn two_clusters(n: usize, d: usize, sep: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| {
            let y = if rng.gen_bool(0.5) { Label::Pos } else { Label::Neg };
            let c = 0.5 * sep * y.sign();
            let features = (0..d).map(|j| (j, c + gaussian(&mut rng))).collect();
            Record { features, label: y }
        })
        .collect();
    Dataset::from_records("two_clusters", d, records)
}

/// Mixed continuous/ordinal/binary features from a correlated latent
/// Gaussian. The concept is linear in the latent space and rotates at
/// `drift_at`: the features that carried the signal stop doing so and a
/// different group takes over.
pub fn mixed_drift(n: usize, drift_at: usize, seed: u64) -> Result<Dataset> {
    let kinds = mixed_kinds();
    let d = kinds.len();
    let chol = Cholesky::new(equicorrelation(d, 0.3))
        .ok_or_else(|| Error::Config("invalid correlation".into()))?
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let before: Vec<f64> = (0..d).map(|j| if j < d / 2 { 1.0 } else { 0.0 }).collect();
    let after: Vec<f64> = (0..d).map(|j| if j < d / 2 { 0.0 } else { 1.0 }).collect();
    let records = (0..n)
        .map(|t| {
            let z = &chol * DVector::from_fn(d, |_, _| gaussian(&mut rng));
            let w = if t < drift_at { &before } else { &after };
            let sign = if t < drift_at { 1.0 } else { -1.0 };
            let m: f64 = sign * z.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            let features = kinds
                .iter()
                .enumerate()
                .map(|(j, &k)| (j, observe_marginal(k, z[j])))
                .collect();
            Record { features, label: Label::from_margin(m) }
        })
        .collect();
    let schema = TypedSchema {
        features: kinds
            .iter()
            .enumerate()
            .map(|(id, &kind)| FeatureSpec {
                id,
                kind,
                level_values: match kind {
                    FeatureKind::Continuous => vec![],
                    FeatureKind::Ordinal { levels } => (0..levels).map(|l| l as f64).collect(),
                    FeatureKind::Binary => vec![0.0, 1.0],
                },
            })
            .collect(),
    };
    Ok(Dataset::from_records("mixed_drift", d, records)?.with_schema(schema))
}

fn mixed_kinds() -> Vec<FeatureKind> {
    use FeatureKind::*;
    vec![
        Continuous,
        Ordinal { levels: 5 },
        Binary,
        Continuous,
        Ordinal { levels: 7 },
        Continuous,
        Binary,
        Ordinal { levels: 5 },
    ]
}

/// Rotating-hyperplane stream: the decision boundary turns slowly so the
/// concept drifts gradually. Stand-in for an unnamed real stream.
pub fn rotating_hyperplane(n: usize, d: usize, turns: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|t| {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let angle = std::f64::consts::TAU * turns * t as f64 / n.max(1) as f64;
            let m = x[0] * angle.cos() + x.get(1).copied().unwrap_or(0.0) * angle.sin()
                + 0.1 * x.iter().skip(2).sum::<f64>();
            let y = if rng.gen_bool(0.05) { Label::from_margin(m).flipped() } else { Label::from_margin(m) };
            Record { features: x.into_iter().enumerate().collect(), label: y }
        })
        .collect();
    Dataset::from_records("rotating_hyperplane", d, records)
}

/// Generator selection as it appears in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    GaussianCopula { n: usize, rho: f64, levels: usize },
    LabelFlip { n: usize, d: usize, flip_at: usize, rho: f64 },
    TwoClusters { n: usize, d: usize, sep: f64 },
    MixedDrift { n: usize, drift_at: usize },
    RotatingHyperplane { n: usize, d: usize, turns: f64 },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::GaussianCopula { .. } => "gaussian_copula",
            Generator::LabelFlip { .. } => "label_flip",
            Generator::TwoClusters { .. } => "two_clusters",
            Generator::MixedDrift { .. } => "mixed_drift",
            Generator::RotatingHyperplane { .. } => "rotating_hyperplane",
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        match *self {
            Generator::GaussianCopula { n, rho, levels } => {
                let kinds = vec![
                    FeatureKind::Continuous,
                    FeatureKind::Ordinal { levels: levels.max(2) },
                    FeatureKind::Continuous,
                    FeatureKind::Ordinal { levels: levels.max(2) },
                    FeatureKind::Continuous,
                ];
                Ok(gaussian_copula(&equicorrelation(kinds.len(), rho), &kinds, n, seed)?.dataset)
            }
            Generator::LabelFlip { n, d, flip_at, rho } => label_flip(n, d, flip_at, rho, seed),
            Generator::TwoClusters { n, d, sep } => two_clusters(n, d, sep, seed),
            Generator::MixedDrift { n, drift_at } => mixed_drift(n, drift_at, seed),
            Generator::RotatingHyperplane { n, d, turns } => rotating_hyperplane(n, d, turns, seed),
        }
    }
}
