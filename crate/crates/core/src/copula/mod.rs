//! Gaussian copula latent space over mixed-type, partially observed features.
//!
//! Each feature keeps an online marginal sketch. Observed values are pushed
//! through their empirical cdf and the normal quantile function into a
//! latent coordinate (a point for continuous features, a truncation
//! interval for ordinal and binary ones). A single correlation matrix
//! couples the latent coordinates; it is learned by blending rank-one
//! moments of completed latent vectors and projecting back onto the set of
//! correlation matrices.

pub mod gauss;
mod marginal;
mod snapshot;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use marginal::{LatentCoord, MarginalSketch};
pub use snapshot::SNAPSHOT_VERSION;

use crate::error::{Error, Result};
use crate::ingest::TypedSchema;
use crate::stream::Instance;
use gauss::truncated_mean;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CopulaConfig {
    /// Reservoir size for continuous marginals.
    pub reservoir_capacity: usize,
    /// Lower bound on the correlation step size.
    pub decay_floor: f64,
    /// Added to the observed block before solving.
    pub ridge: f64,
    /// Smallest eigenvalue kept by the projection.
    pub eigen_floor: f64,
}

impl Default for CopulaConfig {
    fn default() -> Self {
        CopulaConfig {
            reservoir_capacity: 256,
            decay_floor: 0.01,
            ridge: 1e-6,
            eigen_floor: 1e-6,
        }
    }
}

impl CopulaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reservoir_capacity == 0 {
            return Err(Error::Config("reservoir_capacity must be >= 1".into()));
        }
        if !(self.decay_floor > 0.0 && self.decay_floor <= 1.0) {
            return Err(Error::Config(format!(
                "decay_floor must be in (0, 1], got {}",
                self.decay_floor
            )));
        }
        if self.ridge < 0.0 || self.eigen_floor <= 0.0 {
            return Err(Error::Config("ridge must be >= 0 and eigen_floor > 0".into()));
        }
        Ok(())
    }
}

/// Latent view of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentObservation {
    /// Observed coordinates sorted by feature id.
    pub coords: Vec<(usize, LatentCoord)>,
    /// Feature ids not observed in this instance.
    pub missing: Vec<usize>,
}

impl LatentObservation {
    fn observed_ids(&self) -> Vec<usize> {
        self.coords.iter().map(|&(j, _)| j).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Imputation {
    /// Completed latent vector.
    pub z_full: Vec<f64>,
    /// Observed values where visible, reconstructions elsewhere.
    pub x_rec: Vec<f64>,
    /// Nothing was observed; `z_full` is the prior mean.
    pub all_missing: bool,
}

/// Conditional moments shared by imputation and the correlation update.
struct Completion {
    z_full: DVector<f64>,
    observed: Vec<usize>,
    missing: Vec<usize>,
    /// Conditional covariance of the missing block given the observed one.
    cond_cov: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Boost {
    decay_floor: f64,
    remaining: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CopulaState {
    schema: TypedSchema,
    config: CopulaConfig,
    sketches: Vec<MarginalSketch>,
    sigma: DMatrix<f64>,
    step: u64,
    boost: Option<Boost>,
}

impl CopulaState {
    pub fn new(schema: &TypedSchema, config: CopulaConfig) -> Result<Self> {
        config.validate()?;
        let d = schema.dim();
        let sketches = schema
            .features
            .iter()
            .map(|f| MarginalSketch::new(f.id, f.kind, f.level_count(), config.reservoir_capacity))
            .collect();
        Ok(CopulaState {
            schema: schema.clone(),
            config,
            sketches,
            sigma: DMatrix::identity(d, d),
            step: 0,
            boost: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.sketches.len()
    }

    pub fn schema(&self) -> &TypedSchema {
        &self.schema
    }

    pub fn config(&self) -> &CopulaConfig {
        &self.config
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn sketch(&self, feature: usize) -> Option<&MarginalSketch> {
        self.sketches.get(feature)
    }

    /// Replace the correlation matrix; the input is projected onto the set
    /// of valid correlation matrices first.
    pub fn set_sigma(&mut self, sigma: DMatrix<f64>) -> Result<()> {
        let d = self.dim();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: sigma.nrows(),
            });
        }
        self.sigma = sigma;
        self.project();
        Ok(())
    }

    /// Current lower bound on the correlation step size, including any
    /// post-drift boost.
    pub fn decay_floor(&self) -> f64 {
        match &self.boost {
            Some(b) => b.decay_floor.max(self.config.decay_floor),
            None => self.config.decay_floor,
        }
    }

    /// Raise the step-size floor for the next `len` correlation updates.
    pub fn boost_plasticity(&mut self, decay_floor: f64, len: usize) {
        self.boost = (len > 0).then_some(Boost {
            decay_floor,
            remaining: len,
        });
    }

    pub fn boost_remaining(&self) -> usize {
        self.boost.as_ref().map_or(0, |b| b.remaining)
    }

    pub fn update_marginal(&mut self, feature: usize, value: f64) -> Result<()> {
        let d = self.dim();
        self.sketches
            .get_mut(feature)
            .ok_or_else(|| Error::Schema(format!("unknown feature {feature} (d = {d})")))?
            .observe(value)
    }

    /// Fold every observed value into its marginal.
    pub fn update_marginals(&mut self, observed: &[(usize, f64)]) -> Result<()> {
        for &(j, v) in observed {
            self.update_marginal(j, v)?;
        }
        Ok(())
    }

    /// Give never-seen features their first marginal observation so that
    /// they become transformable. Returns the ids that were warmed.
    pub fn warm_cold_features(&mut self, observed: &[(usize, f64)]) -> Result<Vec<usize>> {
        let mut warmed = Vec::new();
        for &(j, v) in observed {
            if self.sketches.get(j).is_some_and(|s| s.is_empty()) {
                self.update_marginal(j, v)?;
                warmed.push(j);
            }
        }
        Ok(warmed)
    }

    pub fn to_latent(&self, observed: &[(usize, f64)]) -> Result<LatentObservation> {
        let d = self.dim();
        let mut coords = Vec::with_capacity(observed.len());
        let mut seen = vec![false; d];
        for &(j, v) in observed {
            let sketch = self
                .sketches
                .get(j)
                .ok_or_else(|| Error::Schema(format!("unknown feature {j} (d = {d})")))?;
            coords.push((j, sketch.to_latent(v)?));
            seen[j] = true;
        }
        coords.sort_by_key(|&(j, _)| j);
        let missing = (0..d).filter(|&j| !seen[j]).collect();
        Ok(LatentObservation { coords, missing })
    }

    pub fn instance_to_latent(&self, instance: &Instance) -> Result<LatentObservation> {
        self.to_latent(&instance.observed)
    }

    fn point_values(obs: &LatentObservation) -> Vec<f64> {
        obs.coords
            .iter()
            .map(|&(_, c)| match c {
                LatentCoord::Point(z) => z,
                LatentCoord::Interval { lo, hi } => truncated_mean(lo, hi),
            })
            .collect()
    }

    fn observed_block(&self, observed: &[usize]) -> DMatrix<f64> {
        let k = observed.len();
        DMatrix::from_fn(k, k, |a, b| {
            self.sigma[(observed[a], observed[b])] + if a == b { self.config.ridge } else { 0.0 }
        })
    }

    fn cholesky(&self, block: DMatrix<f64>) -> Cholesky<f64, Dyn> {
        let k = block.nrows();
        match Cholesky::new(block.clone()) {
            Some(c) => c,
            // Only reachable with a zero ridge on a singular block.
            None => Cholesky::new(block + DMatrix::identity(k, k) * 1e-9)
                .expect("ridged correlation block is positive definite"),
        }
    }

    fn complete(&self, obs: &LatentObservation, with_cov: bool) -> Completion {
        let d = self.dim();
        let observed = obs.observed_ids();
        let missing = obs.missing.clone();
        let mut z_full = DVector::zeros(d);
        if observed.is_empty() {
            return Completion {
                z_full,
                observed,
                cond_cov: with_cov.then(|| {
                    DMatrix::from_fn(missing.len(), missing.len(), |a, b| {
                        self.sigma[(missing[a], missing[b])]
                    })
                }),
                missing,
            };
        }
        let z_obs = DVector::from_vec(Self::point_values(obs));
        for (a, &j) in observed.iter().enumerate() {
            z_full[j] = z_obs[a];
        }
        if missing.is_empty() {
            return Completion {
                z_full,
                observed,
                missing,
                cond_cov: with_cov.then(|| DMatrix::zeros(0, 0)),
            };
        }
        let chol = self.cholesky(self.observed_block(&observed));
        let cross = DMatrix::from_fn(observed.len(), missing.len(), |a, b| {
            self.sigma[(observed[a], missing[b])]
        });
        let weights = chol.solve(&z_obs);
        let z_miss = cross.transpose() * weights;
        for (b, &j) in missing.iter().enumerate() {
            z_full[j] = z_miss[b];
        }
        let cond_cov = with_cov.then(|| {
            let half = chol
                .l()
                .solve_lower_triangular(&cross)
                .expect("cholesky factor is nonsingular");
            let mm = DMatrix::from_fn(missing.len(), missing.len(), |a, b| {
                self.sigma[(missing[a], missing[b])]
            });
            mm - half.transpose() * half
        });
        Completion {
            z_full,
            observed,
            missing,
            cond_cov,
        }
    }

    /// Complete a latent observation.
    ///
    /// Interval coordinates become their truncated-normal means; missing
    /// coordinates get the conditional Gaussian mean given the observed
    /// block.
    pub fn impute(&self, obs: &LatentObservation, observed_values: &[(usize, f64)]) -> Imputation {
        let completion = self.complete(obs, false);
        let z_full: Vec<f64> = completion.z_full.iter().copied().collect();
        let mut x_rec = self.reconstruct(&z_full);
        for &(j, v) in observed_values {
            if j < x_rec.len() {
                x_rec[j] = v;
            }
        }
        Imputation {
            all_missing: completion.observed.is_empty(),
            z_full,
            x_rec,
        }
    }

    /// Map a full latent vector back to the observed scale coordinate-wise.
    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        self.sketches
            .iter()
            .zip(z)
            .map(|(s, &zj)| s.inverse(zj))
            .collect()
    }

    /// Blend the completed moment of `obs` into the correlation matrix.
    ///
    /// The moment is `ẑẑᵀ` plus the conditional covariance on the missing
    /// block, the step size is `max(decay_floor, 1/step)`, and the result
    /// is projected back to a correlation matrix.
    pub fn update_correlation(&mut self, obs: &LatentObservation) {
        let completion = self.complete(obs, true);
        self.step += 1;
        let gamma = self.decay_floor().max(1.0 / self.step as f64);
        let z = &completion.z_full;
        let mut moment = z * z.transpose();
        if let Some(cov) = &completion.cond_cov {
            for (a, &i) in completion.missing.iter().enumerate() {
                for (b, &j) in completion.missing.iter().enumerate() {
                    moment[(i, j)] += cov[(a, b)];
                }
            }
        }
        self.sigma = &self.sigma * (1.0 - gamma) + moment * gamma;
        self.project();
        if let Some(b) = &mut self.boost {
            b.remaining -= 1;
            if b.remaining == 0 {
                self.boost = None;
            }
        }
    }

    fn normalize_diagonal(m: &mut DMatrix<f64>) {
        let d = m.nrows();
        let scale: Vec<f64> = (0..d)
            .map(|i| {
                let v = m[(i, i)];
                if v > 1e-300 {
                    1.0 / v.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] *= scale[i] * scale[j];
            }
            m[(i, i)] = 1.0;
        }
    }

    /// Symmetrize, unit diagonal, eigenvalue floor, renormalize.
    fn project(&mut self) {
        let d = self.dim();
        let sym = (&self.sigma + self.sigma.transpose()) * 0.5;
        self.sigma = sym;
        Self::normalize_diagonal(&mut self.sigma);
        let floor = self.config.eigen_floor;
        let shifted = &self.sigma - DMatrix::identity(d, d) * floor;
        if Cholesky::new(shifted).is_none() {
            let eig = SymmetricEigen::new(self.sigma.clone());
            let vals = eig.eigenvalues.map(|v| v.max(floor));
            let v = &eig.eigenvectors;
            self.sigma = v * DMatrix::from_diagonal(&vals) * v.transpose();
            let sym = (&self.sigma + self.sigma.transpose()) * 0.5;
            self.sigma = sym;
            Self::normalize_diagonal(&mut self.sigma);
        }
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    self.sigma[(i, j)] = self.sigma[(i, j)].clamp(-1.0, 1.0);
                }
            }
        }
    }

    /// Mean per-coordinate leave-one-out residual of the observed latent
    /// coordinates under the current correlation matrix.
    ///
    /// For each window entry the observed coordinates are read from its
    /// completed latent vector; each one is predicted from the remaining
    /// observed coordinates, and the residual norm is divided by the square
    /// root of the number of observed coordinates.
    pub fn latent_mismatch(&self, window: &[(LatentObservation, Vec<f64>)]) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (obs, z_full) in window {
            let observed = obs.observed_ids();
            if observed.is_empty() {
                continue;
            }
            let z_obs = DVector::from_iterator(observed.len(), observed.iter().map(|&j| z_full[j]));
            let residual = if observed.len() == 1 {
                z_obs
            } else {
                let precision = self
                    .cholesky(self.observed_block(&observed))
                    .inverse();
                let pz = &precision * &z_obs;
                DVector::from_iterator(
                    observed.len(),
                    (0..observed.len()).map(|a| pz[a] / precision[(a, a)]),
                )
            };
            total += residual.norm() / (observed.len() as f64).sqrt();
            count += 1;
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FeatureKind, FeatureSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn schema(kinds: &[FeatureKind]) -> TypedSchema {
        TypedSchema {
            features: kinds
                .iter()
                .enumerate()
                .map(|(id, &kind)| FeatureSpec {
                    id,
                    kind,
                    level_values: match kind {
                        FeatureKind::Continuous => vec![],
                        FeatureKind::Binary => vec![0.0, 1.0],
                        FeatureKind::Ordinal { levels } => (0..levels).map(|l| l as f64).collect(),
                    },
                })
                .collect(),
        }
    }

    fn continuous(d: usize) -> CopulaState {
        CopulaState::new(&schema(&vec![FeatureKind::Continuous; d]), CopulaConfig::default()).unwrap()
    }

    fn point_obs(d: usize, coords: &[(usize, f64)]) -> LatentObservation {
        LatentObservation {
            coords: coords.iter().map(|&(j, z)| (j, LatentCoord::Point(z))).collect(),
            missing: (0..d).filter(|j| !coords.iter().any(|c| c.0 == *j)).collect(),
        }
    }

    fn assert_correlation_matrix(m: &DMatrix<f64>) {
        let d = m.nrows();
        for i in 0..d {
            assert!((m[(i, i)] - 1.0).abs() < 1e-9);
            for j in 0..d {
                assert_eq!(m[(i, j)], m[(j, i)]);
                assert!(m[(i, j)].abs() <= 1.0);
            }
        }
        let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
        assert!(min >= -1e-8, "min eigenvalue {min}");
    }

    #[test]
    fn single_feature_sigma_stays_one() {
        let mut c = continuous(1);
        c.update_marginal(0, 1.0).unwrap();
        for i in 0..50 {
            let obs = c.to_latent(&[(0, i as f64)]).unwrap();
            c.update_correlation(&obs);
            c.update_marginal(0, i as f64).unwrap();
            assert_eq!(c.sigma()[(0, 0)], 1.0);
        }
    }

    fn feed(c: &mut CopulaState, rows: impl Iterator<Item = Vec<f64>>) {
        for row in rows {
            let observed: Vec<(usize, f64)> = row.into_iter().enumerate().collect();
            c.warm_cold_features(&observed).unwrap();
            let obs = c.to_latent(&observed).unwrap();
            c.update_correlation(&obs);
            c.update_marginals(&observed).unwrap();
            assert_correlation_matrix(c.sigma());
        }
    }

    /// Batch oracle: 2 sin(pi/6 * spearman) for Gaussian data.
    fn spearman_oracle(xs: &[f64], ys: &[f64]) -> f64 {
        fn ranks(v: &[f64]) -> Vec<f64> {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            let mut r = vec![0.0; v.len()];
            for (rank, &i) in idx.iter().enumerate() {
                r[i] = rank as f64;
            }
            r
        }
        let (rx, ry) = (ranks(xs), ranks(ys));
        let n = xs.len() as f64;
        let m = (n - 1.0) / 2.0;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
        let var: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
        2.0 * (std::f64::consts::PI / 6.0 * cov / var).sin()
    }

    #[test]
    fn comonotone_features_correlate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                vec![x, x]
            })
            .collect();
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        assert!(spearman_oracle(&xs, &xs) > 0.999);
        let mut c = continuous(2);
        feed(&mut c, rows.into_iter());
        assert!(c.sigma()[(0, 1)] >= 0.95, "{}", c.sigma()[(0, 1)]);
    }

    #[test]
    fn independent_features_stay_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rows: Vec<Vec<f64>> = (0..2000)
            .map(|_| vec![rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let mut c = continuous(2);
        feed(&mut c, rows.into_iter());
        assert!(c.sigma()[(0, 1)].abs() <= 0.1, "{}", c.sigma()[(0, 1)]);
    }

    #[test]
    fn identity_sigma_imputes_prior_mean() {
        let c = continuous(4);
        let imp = c.impute(&point_obs(4, &[(1, 0.7), (3, -2.0)]), &[]);
        assert_eq!(imp.z_full, vec![0.0, 0.7, 0.0, -2.0]);
        assert!(!imp.all_missing);
        let none = c.impute(&point_obs(4, &[]), &[]);
        assert!(none.all_missing);
        assert_eq!(none.z_full, vec![0.0; 4]);
    }

    #[test]
    fn bivariate_conditional_mean() {
        let mut c = continuous(2);
        let rho = 0.6;
        c.set_sigma(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap();
        let imp = c.impute(&point_obs(2, &[(0, 1.0)]), &[]);
        assert!((imp.z_full[1] - rho / (1.0 + 1e-6)).abs() < 1e-15);
        assert!((imp.z_full[1] - rho).abs() < 1e-6);
    }

    #[test]
    fn interval_mean_matches_monte_carlo() {
        let c = CopulaState::new(&schema(&[FeatureKind::Binary]), CopulaConfig::default()).unwrap();
        let obs = LatentObservation {
            coords: vec![(0, LatentCoord::Interval { lo: 0.0, hi: 6.0 })],
            missing: vec![],
        };
        let z = c.impute(&obs, &[]).z_full[0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut sum, mut n) = (0.0, 0usize);
        while n < 200_000 {
            let v: f64 = rng.sample(StandardNormal);
            if (0.0..=6.0).contains(&v) {
                sum += v;
                n += 1;
            }
        }
        assert!((z - 0.7979).abs() < 1e-4, "{z}");
        assert!((z - sum / n as f64).abs() < 5e-3);
    }

    #[test]
    fn mismatch_zero_for_self_explained_window() {
        let mut c = continuous(2);
        c.set_sigma(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        let obs = point_obs(2, &[(0, 1.0), (1, 1.0)]);
        let score = c.latent_mismatch(&[(obs.clone(), vec![1.0, 1.0]), (obs, vec![1.0, 1.0])]);
        assert!(score < 1e-5, "{score}");
    }

    fn draw_correlated(rng: &mut ChaCha8Rng, rho: f64) -> Vec<f64> {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        vec![a, rho * a + (1.0 - rho * rho).sqrt() * b]
    }

    #[test]
    fn mismatch_lower_under_true_sigma() {
        let rho = 0.9;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let window: Vec<(LatentObservation, Vec<f64>)> = (0..5000)
            .map(|_| {
                let z = draw_correlated(&mut rng, rho);
                (point_obs(2, &[(0, z[0]), (1, z[1])]), z)
            })
            .collect();
        let mut truth = continuous(2);
        truth.set_sigma(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap();
        let ident = continuous(2);
        let s_true = truth.latent_mismatch(&window);
        let s_ident = ident.latent_mismatch(&window);
        // Leave-one-out residuals are N(0, (1-rho^2) [[1, -rho], [-rho, 1]]);
        // integrate their norm over a grid in the eigenbasis.
        let lambda = [(1.0 - rho * rho) * (1.0 + rho), (1.0 - rho * rho) * (1.0 - rho)];
        let h = 0.01;
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut analytic = 0.0;
        for a in -800..=800 {
            for b in -800..=800 {
                let (u, v) = (a as f64 * h, b as f64 * h);
                analytic += (lambda[0] * u * u + lambda[1] * v * v).sqrt() * pdf(u) * pdf(v) * h * h;
            }
        }
        analytic /= 2f64.sqrt();
        assert!((s_true - analytic).abs() < 0.02, "{s_true} vs {analytic}");
        assert!(s_true < s_ident);
    }

    #[test]
    fn mismatch_rises_after_sign_flip() {
        let rho = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut c = continuous(2);
        c.set_sigma(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap();
        let mut window = |r: f64| -> Vec<(LatentObservation, Vec<f64>)> {
            (0..500)
                .map(|_| {
                    let z = draw_correlated(&mut rng, r);
                    (point_obs(2, &[(0, z[0]), (1, z[1])]), z)
                })
                .collect()
        };
        let before = window(rho);
        let after = window(-rho);
        assert!(c.latent_mismatch(&after) > c.latent_mismatch(&before));
    }

    #[test]
    fn projection_repairs_invalid_matrix() {
        let mut c = continuous(3);
        c.set_sigma(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0],
        ))
        .unwrap();
        assert_correlation_matrix(c.sigma());
    }

    #[test]
    fn ordinal_reconstruction_picks_containing_level() {
        let mut c = CopulaState::new(
            &schema(&[FeatureKind::Ordinal { levels: 3 }, FeatureKind::Continuous]),
            CopulaConfig::default(),
        )
        .unwrap();
        for i in 0..30 {
            c.update_marginals(&[(0, (i % 3) as f64), (1, i as f64)]).unwrap();
        }
        let obs = c.to_latent(&[(0, 2.0)]).unwrap();
        let imp = c.impute(&obs, &[(0, 2.0)]);
        assert_eq!(imp.x_rec[0], 2.0);
        assert_eq!(c.reconstruct(&imp.z_full)[0], 2.0);
    }

    #[test]
    fn boost_expires() {
        let mut c = continuous(2);
        c.update_marginals(&[(0, 0.0), (1, 0.0)]).unwrap();
        c.boost_plasticity(0.2, 3);
        assert_eq!(c.decay_floor(), 0.2);
        for _ in 0..3 {
            let obs = c.to_latent(&[(0, 0.0)]).unwrap();
            c.update_correlation(&obs);
        }
        assert_eq!(c.boost_remaining(), 0);
        assert_eq!(c.decay_floor(), 0.01);
    }
}
