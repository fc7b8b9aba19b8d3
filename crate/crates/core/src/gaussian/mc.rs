//! Seeded Monte Carlo cross-check for the closed-form covariance algebra.
//!
//! Samples are split into a fixed number of shards. Shard `k` draws from a
//! ChaCha20 stream seeded with `(seed, stream = k)`, and shard sums are merged
//! in shard order, so results are bit-identical with or without the
//! `parallel` feature and for any thread count.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{normalized_combo_variance, propagate, CovarianceModel, LinearMap, PSD_TOL};
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 10_000;
pub const SHARDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MCConfig {
    samples: usize,
    seed: u64,
}

impl MCConfig {
    pub fn new(samples: usize, seed: u64) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "at least {MIN_SAMPLES} Monte Carlo samples are required, got {samples}"
            )));
        }
        Ok(Self { samples, seed })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn shard_len(&self, shard: usize) -> usize {
        self.samples / SHARDS + usize::from(shard < self.samples % SHARDS)
    }
}

/// Draws zero-mean Gaussian vectors with covariance `L L^T = Sigma`, where `L`
/// comes from the eigendecomposition of `Sigma`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    /// Eigenvalues in `[-1e-9, 0)` are clamped to zero; anything more negative
    /// is an error.
    pub fn new(cov: &CovarianceModel) -> Result<Self> {
        let eig = SymmetricEigen::new(cov.matrix().clone());
        let mut roots = DVector::zeros(eig.eigenvalues.len());
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l < PSD_TOL {
                return Err(Error::Factorization(format!("eigenvalue {l:.3e} is below {PSD_TOL:e}")));
            }
            roots[i] = l.max(0.0).sqrt();
        }
        Ok(Self {
            factor: eig.eigenvectors * DMatrix::from_diagonal(&roots),
        })
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn sample(&self, rng: &mut ChaCha20Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.factor.ncols(), |_, _| StandardNormal.sample(rng));
        &self.factor * z
    }
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

/// How shards are scheduled. Results are bit-identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Self::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Self::Sequential
        }
    }
}

/// Runs `f` on every shard and returns the per-shard results in shard order.
fn map_shards<T, F>(exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..SHARDS).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..SHARDS).into_par_iter().map(f).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McReport {
    pub analytic: f64,
    pub empirical: f64,
    /// `(empirical - analytic) / (analytic * sqrt(2 / n))`: the standard error
    /// of a zero-mean Gaussian variance estimate with `n` samples.
    pub z_score: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McReport {
    pub fn relative_error(&self) -> f64 {
        (self.empirical - self.analytic).abs() / self.analytic
    }
}

/// Samples input fluctuations from `cov`, pushes each through `map` and
/// estimates the normalised variance of the weighted combination.
pub fn mc_validate(cov: &CovarianceModel, map: &LinearMap, weights: &[f64], mc: MCConfig) -> Result<McReport> {
    mc_validate_with(cov, map, weights, mc, Execution::default())
}

pub fn mc_validate_with(
    cov: &CovarianceModel,
    map: &LinearMap,
    weights: &[f64],
    mc: MCConfig,
    exec: Execution,
) -> Result<McReport> {
    let analytic = normalized_combo_variance(&propagate(map, cov)?, weights)?;
    let sampler = GaussianSampler::new(cov)?;
    let w = DVector::from_row_slice(weights);
    let norm = w.norm_squared();
    let transfer = map.matrix() * sampler.factor();

    let sums = map_shards(exec, |shard| {
        let mut rng = shard_rng(mc.seed, shard);
        let mut z = DVector::zeros(transfer.ncols());
        let mut acc = 0.0;
        for _ in 0..mc.shard_len(shard) {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let y = &transfer * &z;
            let x = w.dot(&y);
            acc += x * x;
        }
        acc
    });
    let total: f64 = sums.iter().sum();
    let n = mc.samples as f64;
    let empirical = total / n / norm;
    let z_score = if analytic > 0.0 {
        (empirical - analytic) / (analytic * (2.0 / n).sqrt())
    } else if empirical == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(McReport {
        analytic,
        empirical,
        z_score,
        samples: mc.samples,
        seed: mc.seed,
    })
}

/// Empirical second-moment matrix of `map` applied to samples of `cov`.
pub fn sample_covariance(cov: &CovarianceModel, map: &LinearMap, mc: MCConfig) -> Result<DMatrix<f64>> {
    sample_covariance_with(cov, map, mc, Execution::default())
}

pub fn sample_covariance_with(cov: &CovarianceModel, map: &LinearMap, mc: MCConfig, exec: Execution) -> Result<DMatrix<f64>> {
    if map.input() != cov.basis() {
        return Err(Error::InvalidArgument("map input basis does not match the covariance basis".into()));
    }
    let sampler = GaussianSampler::new(cov)?;
    let transfer = map.matrix() * sampler.factor();
    let m = transfer.nrows();
    let sums = map_shards(exec, |shard| {
        let mut rng = shard_rng(mc.seed, shard);
        let mut z = DVector::zeros(transfer.ncols());
        let mut acc = DMatrix::zeros(m, m);
        for _ in 0..mc.shard_len(shard) {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let y = &transfer * &z;
            acc.ger(1.0, &y, &y, 1.0);
        }
        acc
    });
    let mut total = DMatrix::zeros(m, m);
    for s in &sums {
        total += s;
    }
    Ok(total / mc.samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{Beam, FluctuationBasis};

    #[test]
    fn config_requires_enough_samples() {
        assert!(MCConfig::new(9_999, 1).is_err());
        let cfg = MCConfig::new(10_001, 1).unwrap();
        let total: usize = (0..SHARDS).map(|s| cfg.shard_len(s)).sum();
        assert_eq!(total, 10_001);
    }

    #[test]
    fn sampler_clamps_rounding_negatives() {
        let basis = FluctuationBasis::standard_input();
        // Rank-one covariance: three zero eigenvalues that may come out as -1e-17.
        let v = DVector::from_row_slice(&[1.0, 2.0, -1.0, 0.5]);
        let cov = CovarianceModel::new(basis, &v * v.transpose()).unwrap();
        let s = GaussianSampler::new(&cov).unwrap();
        let back = s.factor() * s.factor().transpose();
        assert!((back - cov.matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn shot_noise_recovered() {
        let basis = FluctuationBasis::standard_input();
        let cov = CovarianceModel::identity(basis.clone());
        let r = mc_validate(&cov, &LinearMap::identity(basis), &[1.0, 0.0, 0.0, 0.0], MCConfig::new(1_000_000, 7).unwrap())
            .unwrap();
        assert_eq!(r.analytic, 1.0);
        assert!(r.relative_error() < 0.01, "{r:?}");
        assert!(r.z_score.abs() < 4.0);
    }

    #[test]
    fn same_seed_same_bits() {
        let basis = FluctuationBasis::standard_input();
        let cov = CovarianceModel::diagonal(basis.clone(), &[0.4, 90.0, 0.4, 90.0]).unwrap();
        let map = LinearMap::per_beam_rotation(&basis, |b| if b == Beam::A { 0.2 } else { -0.3 }).unwrap();
        let cfg = MCConfig::new(20_000, 99).unwrap();
        let a = mc_validate(&cov, &map, &[1.0, 0.0, 1.0, 0.0], cfg).unwrap();
        let b = mc_validate(&cov, &map, &[1.0, 0.0, 1.0, 0.0], cfg).unwrap();
        assert_eq!(a.empirical.to_bits(), b.empirical.to_bits());
        let c = mc_validate(&cov, &map, &[1.0, 0.0, 1.0, 0.0], MCConfig::new(20_000, 100).unwrap()).unwrap();
        assert_ne!(a.empirical.to_bits(), c.empirical.to_bits());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential_bits() {
        let basis = FluctuationBasis::standard_input();
        let cov = CovarianceModel::diagonal(basis.clone(), &[0.4, 90.0, 0.4, 90.0]).unwrap();
        let map = LinearMap::per_beam_rotation(&basis, |_| 0.3).unwrap();
        let cfg = MCConfig::new(50_000, 4).unwrap();
        let w = [1.0, 0.5, 1.0, -0.5];
        let s = mc_validate_with(&cov, &map, &w, cfg, Execution::Sequential).unwrap();
        let p = mc_validate_with(&cov, &map, &w, cfg, Execution::Parallel).unwrap();
        assert_eq!(s.empirical.to_bits(), p.empirical.to_bits());
        let s = sample_covariance_with(&cov, &map, cfg, Execution::Sequential).unwrap();
        let p = sample_covariance_with(&cov, &map, cfg, Execution::Parallel).unwrap();
        assert!(s.iter().zip(p.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn empirical_covariance_matches_propagation() {
        let basis = FluctuationBasis::standard_input();
        let cov = CovarianceModel::diagonal(basis.clone(), &[0.5, 4.0, 1.0, 2.0]).unwrap();
        let map = LinearMap::per_beam_rotation(&basis, |_| 0.7).unwrap();
        let emp = sample_covariance(&cov, &map, MCConfig::new(400_000, 3).unwrap()).unwrap();
        let exact = propagate(&map, &cov).unwrap();
        assert!((emp - exact.matrix()).abs().max() < 0.05);
    }
}
