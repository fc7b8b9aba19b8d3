//! Exact two-mode Stokes operators on a truncated Fock space.
//!
//! This is an oracle for the normalised Gaussian model, not a production
//! simulator: matrices are dense and `n_max` is capped at 32.
//!
//! Basis states `|n_x, n_y>` are ordered row-major, index `n_x * (n_max + 1) + n_y`.
//! Truncated creation operators are wrong on the boundary `n = n_max`, so
//! algebraic identities are only checked on the protected subspace
//! `n_x + n_y <= n_max - 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stokes::DarkPlaneAngle;

pub const MAX_N_MAX: usize = 32;

/// Cumulative Poisson tail allowed above `n_max`, per mode.
pub const TAIL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedTwoModeSpace {
    n_max: usize,
}

impl TruncatedTwoModeSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidArgument("n_max must be at least 1".into()));
        }
        if n_max > MAX_N_MAX {
            return Err(Error::InvalidArgument(format!(
                "n_max = {n_max} exceeds the dense-oracle limit {MAX_N_MAX}"
            )));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 1)
    }

    pub fn index(&self, n_x: usize, n_y: usize) -> usize {
        n_x * (self.n_max + 1) + n_y
    }

    pub fn occupation(&self, idx: usize) -> (usize, usize) {
        (idx / (self.n_max + 1), idx % (self.n_max + 1))
    }

    pub fn is_protected(&self, idx: usize) -> bool {
        let (nx, ny) = self.occupation(idx);
        nx + ny < self.n_max
    }

    /// Fock state `|n_x, n_y>`.
    pub fn fock_state(&self, n_x: usize, n_y: usize) -> Result<DVector<Complex64>> {
        if n_x > self.n_max || n_y > self.n_max {
            return Err(Error::InvalidArgument(format!(
                "|{n_x}, {n_y}> is outside the truncated space (n_max = {})",
                self.n_max
            )));
        }
        let mut v = DVector::zeros(self.dim());
        v[self.index(n_x, n_y)] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// Annihilation operator of the x mode.
    pub fn annihilation_x(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for nx in 1..=self.n_max {
            for ny in 0..=self.n_max {
                m[(self.index(nx - 1, ny), self.index(nx, ny))] = Complex64::new((nx as f64).sqrt(), 0.0);
            }
        }
        m
    }

    /// Annihilation operator of the y mode.
    pub fn annihilation_y(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for nx in 0..=self.n_max {
            for ny in 1..=self.n_max {
                m[(self.index(nx, ny - 1), self.index(nx, ny))] = Complex64::new((ny as f64).sqrt(), 0.0);
            }
        }
        m
    }

    /// Product coherent state `|alpha_x> |alpha_y>`, truncated and renormalised.
    ///
    /// Refuses when either mode has more than [`TAIL_LIMIT`] probability above
    /// `n_max`.
    pub fn coherent_state(&self, alpha_x: Complex64, alpha_y: Complex64) -> Result<DVector<Complex64>> {
        let tail = poisson_tail(alpha_x.norm_sqr(), self.n_max).max(poisson_tail(alpha_y.norm_sqr(), self.n_max));
        if tail >= TAIL_LIMIT {
            return Err(Error::Truncation { tail, limit: TAIL_LIMIT });
        }
        let cx = coherent_amplitudes(alpha_x, self.n_max);
        let cy = coherent_amplitudes(alpha_y, self.n_max);
        let mut v = DVector::from_fn(self.dim(), |i, _| {
            let (nx, ny) = self.occupation(i);
            cx[nx] * cy[ny]
        });
        let norm = v.norm();
        v /= Complex64::new(norm, 0.0);
        Ok(v)
    }

    /// Circularly polarised coherent state: `alpha_x = alpha / sqrt 2`,
    /// `alpha_y = i alpha / sqrt 2`, giving `<S3> = |alpha|^2`.
    pub fn circular_coherent_state(&self, alpha: Complex64) -> Result<DVector<Complex64>> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        self.coherent_state(alpha * h, alpha * Complex64::new(0.0, h))
    }
}

fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    out.push(c);
    for n in 1..=n_max {
        c = c * alpha / (n as f64).sqrt();
        out.push(c);
    }
    out
}

/// `P(N > n_max)` for a Poisson variable of mean `mean`.
fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut p = (-mean).exp();
    let mut cdf = p;
    for n in 1..=n_max {
        p *= mean / n as f64;
        cdf += p;
    }
    // Summing the tail directly avoids cancellation in 1 - cdf for tiny tails.
    let mut tail = 0.0;
    let mut term = p;
    for n in (n_max + 1)..(n_max + 200) {
        term *= mean / n as f64;
        tail += term;
        if term < tail * 1e-17 {
            break;
        }
    }
    if cdf < 0.5 {
        1.0 - cdf
    } else {
        tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StokesLabel {
    S0,
    S1,
    S2,
    S3,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub label: StokesLabel,
    pub matrix: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn expectation(&self, state: &DVector<Complex64>) -> Complex64 {
        state.dotc(&(&self.matrix * state))
    }

    /// Max-norm of `M - M^dagger`.
    pub fn hermiticity_residual(&self) -> f64 {
        max_norm(&(&self.matrix - self.matrix.adjoint()))
    }
}

fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// The four Stokes operators on one truncated space.
#[derive(Debug, Clone)]
pub struct StokesMatrices {
    pub space: TruncatedTwoModeSpace,
    pub s0: OperatorMatrix,
    pub s1: OperatorMatrix,
    pub s2: OperatorMatrix,
    pub s3: OperatorMatrix,
}

pub fn build_stokes_matrices(space: TruncatedTwoModeSpace) -> StokesMatrices {
    let ax = space.annihilation_x();
    let ay = space.annihilation_y();
    let ax_dag = ax.adjoint();
    let ay_dag = ay.adjoint();
    let nx = &ax_dag * &ax;
    let ny = &ay_dag * &ay;
    let xy = &ax_dag * &ay;
    let yx = &ay_dag * &ax;
    let i = Complex64::new(0.0, 1.0);
    StokesMatrices {
        space,
        s0: OperatorMatrix { label: StokesLabel::S0, matrix: &nx + &ny },
        s1: OperatorMatrix { label: StokesLabel::S1, matrix: &nx - &ny },
        s2: OperatorMatrix { label: StokesLabel::S2, matrix: &xy + &yx },
        s3: OperatorMatrix { label: StokesLabel::S3, matrix: (&yx - &xy) * i },
    }
}

impl StokesMatrices {
    /// `S_k` for k in 0..=3.
    pub fn component(&self, k: usize) -> Result<&OperatorMatrix> {
        match k {
            0 => Ok(&self.s0),
            1 => Ok(&self.s1),
            2 => Ok(&self.s2),
            3 => Ok(&self.s3),
            _ => Err(Error::InvalidArgument(format!("no Stokes component S{k}"))),
        }
    }

    /// `S(theta) = cos(theta) S1 + sin(theta) S2`.
    pub fn dark_plane(&self, theta: DarkPlaneAngle) -> DMatrix<Complex64> {
        let (c, s) = theta.direction();
        &self.s1.matrix * Complex64::new(c, 0.0) + &self.s2.matrix * Complex64::new(s, 0.0)
    }

    fn protected_max_norm(&self, m: &DMatrix<Complex64>) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..m.nrows() {
            if !self.space.is_protected(r) {
                continue;
            }
            for c in 0..m.ncols() {
                if self.space.is_protected(c) {
                    worst = worst.max(m[(r, c)].norm());
                }
            }
        }
        worst
    }

    /// Max-norm of `[S_k, S_l] - 2i eps_klm S_m` on the protected subspace.
    pub fn commutator_residual(&self, k: usize, l: usize, m: usize) -> Result<f64> {
        let eps = levi_civita(k, l, m).ok_or_else(|| {
            Error::InvalidArgument(format!("({k}, {l}, {m}) is not a permutation of (1, 2, 3)"))
        })?;
        let sk = &self.component(k)?.matrix;
        let sl = &self.component(l)?.matrix;
        let sm = &self.component(m)?.matrix;
        let comm = sk * sl - sl * sk;
        let expected = sm * Complex64::new(0.0, 2.0 * eps);
        Ok(self.protected_max_norm(&(comm - expected)))
    }

    /// Max-norm of `[S0, S_k]` on the protected subspace.
    pub fn s0_commutator_residual(&self, k: usize) -> Result<f64> {
        if !(1..=3).contains(&k) {
            return Err(Error::InvalidArgument(format!("S0 is checked against S1..S3, got S{k}")));
        }
        let sk = &self.component(k)?.matrix;
        let s0 = &self.s0.matrix;
        Ok(self.protected_max_norm(&(s0 * sk - sk * s0)))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        [&self.s0, &self.s1, &self.s2, &self.s3]
            .iter()
            .map(|op| op.hermiticity_residual())
            .fold(0.0, f64::max)
    }
}

fn levi_civita(k: usize, l: usize, m: usize) -> Option<f64> {
    match (k, l, m) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => Some(1.0),
        (1, 3, 2) | (3, 2, 1) | (2, 1, 3) => Some(-1.0),
        _ => None,
    }
}

/// Exact dark-plane statistics of a circular coherent state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentVariance {
    pub variance: f64,
    pub s1_mean: f64,
    pub s2_mean: f64,
    pub s3_mean: f64,
}

impl CoherentVariance {
    /// Variance in units of `|<S3>|`, the shot-noise reference.
    pub fn normalized(&self) -> Result<f64> {
        if self.s3_mean.abs() < 1e-12 {
            return Err(Error::DegenerateNormalization(
                "no bright S3 carrier, so there is no shot-noise reference".into(),
            ));
        }
        Ok(self.variance / self.s3_mean.abs())
    }
}

pub fn coherent_dark_plane_variance(
    alpha: Complex64,
    theta: DarkPlaneAngle,
    stokes: &StokesMatrices,
) -> Result<CoherentVariance> {
    let n_max = stokes.space.n_max();
    if alpha.norm_sqr() > n_max as f64 / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "|alpha|^2 = {} exceeds n_max / 4 = {}",
            alpha.norm_sqr(),
            n_max as f64 / 4.0
        )));
    }
    let psi = stokes.space.circular_coherent_state(alpha)?;
    let s_theta = stokes.dark_plane(theta);
    let applied = &s_theta * &psi;
    let mean = psi.dotc(&applied).re;
    let second = applied.dotc(&applied).re;
    Ok(CoherentVariance {
        variance: second - mean * mean,
        s1_mean: stokes.s1.expectation(&psi).re,
        s2_mean: stokes.s2.expectation(&psi).re,
        s3_mean: stokes.s3.expectation(&psi).re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn stokes(n_max: usize) -> StokesMatrices {
        build_stokes_matrices(TruncatedTwoModeSpace::new(n_max).unwrap())
    }

    #[test]
    fn rejects_bad_truncation() {
        assert!(TruncatedTwoModeSpace::new(0).is_err());
        assert!(TruncatedTwoModeSpace::new(33).is_err());
        assert_eq!(TruncatedTwoModeSpace::new(3).unwrap().dim(), 16);
    }

    #[test]
    fn vacuum_expectations_vanish() {
        let s = stokes(1);
        let vac = s.space.fock_state(0, 0).unwrap();
        for k in 0..4 {
            assert!(s.component(k).unwrap().expectation(&vac).norm() < 1e-15);
        }
    }

    #[test]
    fn single_x_photon() {
        for n_max in [1, 4] {
            let s = stokes(n_max);
            let psi = s.space.fock_state(1, 0).unwrap();
            assert!((s.s0.expectation(&psi).re - 1.0).abs() < 1e-15);
            assert!((s.s1.expectation(&psi).re - 1.0).abs() < 1e-15);
            assert!(s.s2.expectation(&psi).norm() < 1e-15);
            assert!(s.s3.expectation(&psi).norm() < 1e-15);
        }
    }

    #[test]
    fn circular_coherent_means() {
        // Oracle: |alpha|^2 = 0.5 on n_max = 12; tail is ~1e-15.
        let s = stokes(12);
        let alpha = Complex64::new(0.5f64.sqrt(), 0.0);
        let psi = s.space.circular_coherent_state(alpha).unwrap();
        assert!((s.s3.expectation(&psi).re - 0.5).abs() < 1e-9);
        assert!((s.s0.expectation(&psi).re - 0.5).abs() < 1e-9);
        assert!(s.s1.expectation(&psi).norm() < 1e-12);
        assert!(s.s2.expectation(&psi).norm() < 1e-12);
    }

    #[test]
    fn stokes_matrices_are_hermitian() {
        for n_max in [1, 3, 8] {
            assert!(stokes(n_max).hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn su2_commutators_on_protected_subspace() {
        let s = stokes(3);
        for (k, l, m) in [(1, 2, 3), (2, 3, 1), (3, 1, 2), (2, 1, 3)] {
            assert!(s.commutator_residual(k, l, m).unwrap() <= 1e-12, "({k},{l},{m})");
        }
        for k in 1..=3 {
            assert!(s.s0_commutator_residual(k).unwrap() <= 1e-12);
        }
        assert!(s.commutator_residual(1, 1, 2).is_err());
        assert!(s.commutator_residual(0, 1, 2).is_err());
        assert!(s.s0_commutator_residual(0).is_err());
    }

    #[test]
    fn vacuum_has_no_shot_noise_reference() {
        let s = stokes(4);
        let v = coherent_dark_plane_variance(Complex64::new(0.0, 0.0), DarkPlaneAngle::default(), &s).unwrap();
        assert_eq!(v.variance, 0.0);
        assert!(matches!(v.normalized(), Err(Error::DegenerateNormalization(_))));
    }

    #[test]
    fn coherent_variance_equals_s3() {
        let s = stokes(16);
        let alpha = Complex64::new(2f64.sqrt(), 0.0);
        for theta in [0.0, FRAC_PI_4, FRAC_PI_2] {
            let v = coherent_dark_plane_variance(alpha, DarkPlaneAngle::from_radians(theta), &s).unwrap();
            assert!((v.s3_mean - 2.0).abs() < 1e-6);
            assert!((v.normalized().unwrap() - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn coherent_state_saturates_uncertainty() {
        let s = stokes(16);
        let alpha = Complex64::new(2f64.sqrt(), 0.0);
        let a = coherent_dark_plane_variance(alpha, DarkPlaneAngle::from_radians(0.3), &s).unwrap();
        let b = coherent_dark_plane_variance(alpha, DarkPlaneAngle::from_radians(0.3).conjugate(), &s).unwrap();
        assert!(a.variance * b.variance >= a.s3_mean.powi(2) * (1.0 - 0.02));
    }

    #[test]
    fn truncation_converges() {
        let alpha = Complex64::new(1.0, 0.0);
        let errs: Vec<f64> = [8, 12, 16]
            .into_iter()
            .map(|n| {
                let v = coherent_dark_plane_variance(alpha, DarkPlaneAngle::default(), &stokes(n)).unwrap();
                (v.normalized().unwrap() - 1.0).abs()
            })
            .collect();
        assert!(errs[1] <= errs[0] && errs[2] <= errs[1] + 1e-13, "{errs:?}");
    }

    #[test]
    fn refuses_heavy_tails() {
        let s = stokes(8);
        // |alpha|^2 = 2 puts mean 1 in each mode; P(n > 8) is just above 1e-6.
        let r = coherent_dark_plane_variance(Complex64::new(1.0, 1.0), DarkPlaneAngle::default(), &s);
        assert!(matches!(r, Err(Error::Truncation { .. })), "{r:?}");
        let r = coherent_dark_plane_variance(Complex64::new(3.0, 0.0), DarkPlaneAngle::default(), &s);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn poisson_tail_matches_direct_sum() {
        let tail = poisson_tail(1.0, 8);
        // P(N > 8) for mean 1: e^-1 * sum_{n>=9} 1/n!
        let mut direct = 0.0;
        let mut f = 1.0;
        for n in 1..40 {
            f *= n as f64;
            if n >= 9 {
                direct += 1.0 / f;
            }
        }
        direct *= (-1.0f64).exp();
        assert!((tail - direct).abs() < 1e-18, "{tail} vs {direct}");
    }
}
