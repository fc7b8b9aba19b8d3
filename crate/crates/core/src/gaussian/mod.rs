//! Gaussian statistics of dark-plane Stokes fluctuations.
//!
//! Every dark-plane parameter has zero mean, so a state is fully described by
//! its covariance matrix over an ordered [`FluctuationBasis`]. Linear optics
//! (beam splitters, wave-plate rotations, electronic gains) act as real
//! matrices on the fluctuation coordinates and send `Sigma` to `M Sigma M^T`.

mod mc;

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stokes::dark_plane_rotation_map;

pub use mc::{
    mc_validate, mc_validate_with, sample_covariance, sample_covariance_with, Execution, GaussianSampler, MCConfig, McReport,
    MIN_SAMPLES, SHARDS,
};

/// Relative symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted as rounding noise.
pub const PSD_TOL: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Beam {
    A,
    B,
    C,
    D,
}

/// Dark-plane direction relative to the squeezing angle `theta_sq`.
///
/// `Opt` is `theta_sq - gamma` and `OptPerp` is `theta_sq + pi/2 - gamma`,
/// where `gamma` is set by the beam-splitter ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Sq,
    Asq,
    Opt,
    OptPerp,
}

impl Axis {
    pub fn conjugate(self) -> Self {
        match self {
            Axis::Sq => Axis::Asq,
            Axis::Asq => Axis::Sq,
            Axis::Opt => Axis::OptPerp,
            Axis::OptPerp => Axis::Opt,
        }
    }
}

/// One fluctuation coordinate: the Stokes parameter of `beam` along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub beam: Beam,
    pub axis: Axis,
}

impl Coord {
    pub const fn new(beam: Beam, axis: Axis) -> Self {
        Self { beam, axis }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axis = match self.axis {
            Axis::Sq => "sq",
            Axis::Asq => "asq",
            Axis::Opt => "opt",
            Axis::OptPerp => "opt_perp",
        };
        write!(f, "{:?}({axis})", self.beam)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FluctuationBasis {
    coords: Vec<Coord>,
}

impl FluctuationBasis {
    pub fn new(coords: Vec<Coord>) -> Result<Self> {
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(Error::InvalidArgument(format!("duplicate basis label {c}")));
            }
        }
        Ok(Self { coords })
    }

    fn pairs(beams: [Beam; 2], axes: [Axis; 2]) -> Self {
        let coords = beams
            .iter()
            .flat_map(|&b| axes.iter().map(move |&a| Coord::new(b, a)))
            .collect();
        Self { coords }
    }

    /// `[A(sq), A(asq), B(sq), B(asq)]`.
    pub fn standard_input() -> Self {
        Self::pairs([Beam::A, Beam::B], [Axis::Sq, Axis::Asq])
    }

    /// `[C(sq), C(asq), D(sq), D(asq)]`.
    pub fn output_sq() -> Self {
        Self::pairs([Beam::C, Beam::D], [Axis::Sq, Axis::Asq])
    }

    /// `[C(opt), C(opt_perp), D(opt), D(opt_perp)]`.
    pub fn output_opt() -> Self {
        Self::pairs([Beam::C, Beam::D], [Axis::Opt, Axis::OptPerp])
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn index_of(&self, coord: Coord) -> Result<usize> {
        self.coords
            .iter()
            .position(|&c| c == coord)
            .ok_or_else(|| Error::InvalidArgument(format!("{coord} is not in the basis")))
    }

    /// Indices of the two coordinates belonging to `beam`, if the basis holds
    /// exactly one conjugate pair for it.
    pub fn beam_pair(&self, beam: Beam) -> Result<(usize, usize)> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.coords[i].beam == beam).collect();
        match idx.as_slice() {
            &[i, j] if self.coords[i].axis.conjugate() == self.coords[j].axis => Ok((i, j)),
            _ => Err(Error::InvalidArgument(format!(
                "beam {beam:?} does not have a single conjugate pair in the basis"
            ))),
        }
    }

    pub fn beams(&self) -> Vec<Beam> {
        let mut beams: Vec<Beam> = self.coords.iter().map(|c| c.beam).collect();
        beams.sort_unstable();
        beams.dedup();
        beams
    }
}

/// Covariance of zero-mean dark-plane fluctuations, shot-noise normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    basis: FluctuationBasis,
    matrix: DMatrix<f64>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

impl CovarianceModel {
    /// Validates shape, symmetry (relative `1e-12`) and positive
    /// semi-definiteness (minimum eigenvalue `>= -1e-9`).
    pub fn new(basis: FluctuationBasis, matrix: DMatrix<f64>) -> Result<Self> {
        let n = basis.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "covariance is {}x{} but basis has {n} labels",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalConsistency("covariance has non-finite entries".into()));
        }
        let scale = max_abs(&matrix).max(1.0);
        let asym = max_abs(&(&matrix - matrix.transpose()));
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NumericalConsistency(format!("covariance asymmetric by {asym:.3e}")));
        }
        let model = Self { basis, matrix };
        let min_eig = model.min_eigenvalue();
        if min_eig < PSD_TOL {
            return Err(Error::NumericalConsistency(format!(
                "covariance is not positive semi-definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(model)
    }

    /// Shot-noise (coherent or vacuum) covariance.
    pub fn identity(basis: FluctuationBasis) -> Self {
        let n = basis.len();
        Self {
            basis,
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(basis: FluctuationBasis, variances: &[f64]) -> Result<Self> {
        if variances.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument("variances must be non-negative".into()));
        }
        let m = DMatrix::from_diagonal(&DVector::from_row_slice(variances));
        Self::new(basis, m)
    }

    pub fn basis(&self) -> &FluctuationBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Always zero: dark-plane parameters carry no mean.
    pub fn mean(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    pub fn variance(&self, coord: Coord) -> Result<f64> {
        let i = self.basis.index_of(coord)?;
        Ok(self.matrix[(i, i)])
    }

    pub fn covariance(&self, a: Coord, b: Coord) -> Result<f64> {
        let i = self.basis.index_of(a)?;
        let j = self.basis.index_of(b)?;
        Ok(self.matrix[(i, j)])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone()).eigenvalues.min()
    }

    /// Same matrix, new labels. Used when a physical operation only renames
    /// what a detector channel reports.
    pub fn relabel(&self, basis: FluctuationBasis) -> Result<Self> {
        if basis.len() != self.dim() {
            return Err(Error::InvalidArgument("relabel must keep the dimension".into()));
        }
        Ok(Self {
            basis,
            matrix: self.matrix.clone(),
        })
    }
}

/// Real matrix acting on fluctuation coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    input: FluctuationBasis,
    output: FluctuationBasis,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>, input: FluctuationBasis, output: FluctuationBasis) -> Result<Self> {
        if matrix.nrows() != output.len() || matrix.ncols() != input.len() {
            return Err(Error::InvalidArgument(format!(
                "map is {}x{} but bases are {} -> {}",
                matrix.nrows(),
                matrix.ncols(),
                input.len(),
                output.len()
            )));
        }
        Ok(Self { matrix, input, output })
    }

    pub fn identity(basis: FluctuationBasis) -> Self {
        let n = basis.len();
        Self {
            matrix: DMatrix::identity(n, n),
            input: basis.clone(),
            output: basis,
        }
    }

    /// Per-beam dark-plane rotations. `angle(beam)` is the rotation applied to
    /// that beam's conjugate pair; labels are unchanged, so this models a
    /// wave plate set `angle` away from the labelled direction.
    pub fn per_beam_rotation(basis: &FluctuationBasis, angle: impl Fn(Beam) -> f64) -> Result<Self> {
        let n = basis.len();
        let mut m = DMatrix::zeros(n, n);
        for beam in basis.beams() {
            let (i, j) = basis.beam_pair(beam)?;
            let r = dark_plane_rotation_map(angle(beam));
            m[(i, i)] = r[(0, 0)];
            m[(i, j)] = r[(0, 1)];
            m[(j, i)] = r[(1, 0)];
            m[(j, j)] = r[(1, 1)];
        }
        Self::new(m, basis.clone(), basis.clone())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn input(&self) -> &FluctuationBasis {
        &self.input
    }

    pub fn output(&self) -> &FluctuationBasis {
        &self.output
    }

    /// Apply `self`, then `next`.
    pub fn then(&self, next: &LinearMap) -> Result<LinearMap> {
        if next.input != self.output {
            return Err(Error::InvalidArgument("composed maps have mismatched bases".into()));
        }
        Ok(LinearMap {
            matrix: &next.matrix * &self.matrix,
            input: self.input.clone(),
            output: next.output.clone(),
        })
    }

    /// Same coefficients with a different output labelling.
    pub fn with_output(mut self, output: FluctuationBasis) -> Result<Self> {
        if output.len() != self.output.len() {
            return Err(Error::InvalidArgument("output relabel must keep the dimension".into()));
        }
        self.output = output;
        Ok(self)
    }

    /// Max-norm of `M M^T - I`; only meaningful for square maps.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        max_abs(&(&self.matrix * self.matrix.transpose() - DMatrix::identity(n, n)))
    }
}

/// `M Sigma M^T`, symmetrised and re-validated.
pub fn propagate(map: &LinearMap, cov: &CovarianceModel) -> Result<CovarianceModel> {
    if map.input != cov.basis {
        return Err(Error::InvalidArgument(
            "map input basis does not match the covariance basis".into(),
        ));
    }
    let out = &map.matrix * &cov.matrix * map.matrix.transpose();
    let sym = (&out + out.transpose()) * 0.5;
    CovarianceModel::new(map.output.clone(), sym)
}

fn check_weights(cov: &CovarianceModel, weights: &[f64]) -> Result<()> {
    if weights.len() != cov.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for a basis of {}",
            weights.len(),
            cov.dim()
        )));
    }
    Ok(())
}

/// `w^T Sigma w`.
pub fn combo_variance(cov: &CovarianceModel, weights: &[f64]) -> Result<f64> {
    check_weights(cov, weights)?;
    let w = DVector::from_row_slice(weights);
    Ok(w.dot(&(&cov.matrix * &w)).max(0.0))
}

/// `w^T Sigma w / sum(w_i^2)`. Each detected beam contributes shot noise in
/// proportion to the square of its electronic gain, so the shot reference of a
/// combination is the squared norm of its weights.
pub fn normalized_combo_variance(cov: &CovarianceModel, weights: &[f64]) -> Result<f64> {
    check_weights(cov, weights)?;
    let norm: f64 = weights.iter().map(|w| w * w).sum();
    if norm == 0.0 {
        return Err(Error::DegenerateNormalization("all combination weights are zero".into()));
    }
    Ok(combo_variance(cov, weights)? / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symmetric_input() -> CovarianceModel {
        CovarianceModel::diagonal(FluctuationBasis::standard_input(), &[0.389, 92.25, 0.389, 92.25]).unwrap()
    }

    fn half_splitter() -> LinearMap {
        // Four rows of the 50:50 input-output relations.
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.5, 0.5, -0.5, //
                -0.5, 0.5, 0.5, 0.5, //
                0.5, -0.5, 0.5, 0.5, //
                0.5, 0.5, -0.5, 0.5,
            ],
        );
        LinearMap::new(m, FluctuationBasis::standard_input(), FluctuationBasis::output_sq()).unwrap()
    }

    #[test]
    fn rejects_duplicate_labels() {
        let c = Coord::new(Beam::A, Axis::Sq);
        assert!(FluctuationBasis::new(vec![c, c]).is_err());
    }

    #[test]
    fn rejects_non_psd_and_asymmetric() {
        let basis = FluctuationBasis::new(vec![Coord::new(Beam::A, Axis::Sq), Coord::new(Beam::A, Axis::Asq)]).unwrap();
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            CovarianceModel::new(basis.clone(), bad),
            Err(Error::NumericalConsistency(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(CovarianceModel::new(basis.clone(), asym).is_err());
        assert!(CovarianceModel::new(basis, DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn identity_map_keeps_covariance() {
        let cov = symmetric_input();
        let out = propagate(&LinearMap::identity(cov.basis().clone()), &cov).unwrap();
        assert_eq!(out, cov);
    }

    #[test]
    fn basis_mismatch_is_rejected() {
        let cov = CovarianceModel::identity(FluctuationBasis::output_sq());
        assert!(matches!(propagate(&half_splitter(), &cov), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn symmetric_splitter_output_variance() {
        let out = propagate(&half_splitter(), &symmetric_input()).unwrap();
        // 0.25 * (0.389 + 0.389) + 0.25 * (92.25 + 92.25)
        for i in 0..4 {
            assert!((out.matrix()[(i, i)] - 46.3195).abs() < 1e-12);
        }
        let db = 10.0 * out.matrix()[(0, 0)].log10();
        assert!((db - 16.66).abs() < 0.01, "{db}");
    }

    #[test]
    fn combination_variances() {
        let cov = symmetric_input();
        assert_eq!(combo_variance(&cov, &[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.389);
        assert!((combo_variance(&cov, &[1.0, 0.0, 1.0, 0.0]).unwrap() - 0.778).abs() < 1e-12);
        let w = [0.3, -1.2, 0.7, 2.0];
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        assert_eq!(combo_variance(&cov, &w).unwrap(), combo_variance(&cov, &neg).unwrap());
        assert!(combo_variance(&cov, &[1.0]).is_err());
    }

    #[test]
    fn normalized_combinations() {
        let coherent = CovarianceModel::identity(FluctuationBasis::output_sq());
        assert!((normalized_combo_variance(&coherent, &[0.3, 0.0, -2.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            normalized_combo_variance(&coherent, &[0.0; 4]),
            Err(Error::DegenerateNormalization(_))
        ));
        let out = propagate(&half_splitter(), &symmetric_input()).unwrap();
        // Perfectly symmetric splitter: asq difference leaves the squeezed average.
        let v = normalized_combo_variance(&out, &[0.0, 1.0, 0.0, -1.0]).unwrap();
        assert!((v - 0.389).abs() < 1e-12, "{v}");
    }

    #[test]
    fn per_beam_rotation_needs_pairs() {
        let basis = FluctuationBasis::new(vec![Coord::new(Beam::C, Axis::Sq), Coord::new(Beam::D, Axis::Sq)]).unwrap();
        assert!(LinearMap::per_beam_rotation(&basis, |_| 0.1).is_err());
        let ok = LinearMap::per_beam_rotation(&FluctuationBasis::output_sq(), |_| 0.1).unwrap();
        assert!(ok.orthogonality_residual() < 1e-15);
    }

    fn random_psd(seed: &[f64]) -> DMatrix<f64> {
        let a = DMatrix::from_row_slice(4, 4, &seed[..16]);
        &a * a.transpose()
    }

    proptest! {
        #[test]
        fn propagation_preserves_psd(
            a in prop::collection::vec(-3.0..3.0f64, 16),
            m in prop::collection::vec(-3.0..3.0f64, 16),
        ) {
            let cov = CovarianceModel::new(FluctuationBasis::standard_input(), random_psd(&a)).unwrap();
            let map = LinearMap::new(
                DMatrix::from_row_slice(4, 4, &m),
                FluctuationBasis::standard_input(),
                FluctuationBasis::output_sq(),
            ).unwrap();
            let out = propagate(&map, &cov).unwrap();
            prop_assert!(out.min_eigenvalue() >= PSD_TOL * max_abs(out.matrix()).max(1.0));
        }

        #[test]
        fn orthogonal_maps_preserve_shot_noise(angles in prop::collection::vec(-6.3..6.3f64, 2)) {
            let basis = FluctuationBasis::output_sq();
            let rot = LinearMap::per_beam_rotation(&basis, |b| if b == Beam::C { angles[0] } else { angles[1] }).unwrap();
            let out = propagate(&rot, &CovarianceModel::identity(basis.clone())).unwrap();
            prop_assert!(max_abs(&(out.matrix() - DMatrix::<f64>::identity(4, 4))) < 1e-12);
        }

        #[test]
        fn combo_variance_is_non_negative(
            a in prop::collection::vec(-3.0..3.0f64, 16),
            w in prop::collection::vec(-3.0..3.0f64, 4),
        ) {
            let cov = CovarianceModel::new(FluctuationBasis::standard_input(), random_psd(&a)).unwrap();
            prop_assert!(combo_variance(&cov, &w).unwrap() >= 0.0);
        }
    }
}
