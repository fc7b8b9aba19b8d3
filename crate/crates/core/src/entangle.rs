//! Entangling two polarisation-squeezed beams on a beam splitter.
//!
//! Inputs A and B are independent, each described by its variance along its
//! squeezing angle and the conjugate direction. They meet on a splitter with
//! intensity transmittance `t` and a locked relative phase of `pi/2`, giving
//! outputs C and D. The maps below use the intensity coefficients `T`, `R` and
//! `sqrt(RT)` directly; with `T + R = 1` the resulting 4x4 matrix is
//! orthogonal, which is the statement that the splitter adds no noise.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    normalized_combo_variance, propagate, Beam, CovarianceModel, FluctuationBasis, LinearMap,
};
use crate::stokes::{DarkPlaneAngle, PolSqueezedSource};

const ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterSpec {
    t: f64,
    relative_phase: f64,
}

impl BeamSplitterSpec {
    /// Splitter with intensity transmittance `t` in `[0, 1]` and the standard
    /// `pi/2` relative phase. The end points route beams straight through.
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("transmittance {t} is outside [0, 1]")));
        }
        Ok(Self {
            t,
            relative_phase: FRAC_PI_2,
        })
    }

    pub fn symmetric() -> Self {
        Self {
            t: 0.5,
            relative_phase: FRAC_PI_2,
        }
    }

    pub fn with_relative_phase(mut self, phase: f64) -> Self {
        self.relative_phase = phase;
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        1.0 - self.t
    }

    pub fn relative_phase(&self) -> f64 {
        self.relative_phase
    }

    /// Rotation `gamma` of the optimised measurement direction, `cos(gamma) = sqrt(T)`.
    pub fn gamma(&self) -> f64 {
        self.t.sqrt().clamp(0.0, 1.0).acos()
    }

    fn check_phase(&self) -> Result<()> {
        if (self.relative_phase - FRAC_PI_2).abs() > 1e-12 {
            return Err(Error::UnsupportedConfiguration(format!(
                "only a pi/2 relative phase is modelled, got {}",
                self.relative_phase
            )));
        }
        Ok(())
    }
}

/// Non-ideal detection of the two output beams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionImperfections {
    pub efficiency_c: f64,
    pub efficiency_d: f64,
    pub visibility: f64,
    /// Wave-plate misset on beam C, radians of dark-plane rotation.
    pub angle_error_c: f64,
    pub angle_error_d: f64,
}

impl Default for DetectionImperfections {
    fn default() -> Self {
        Self::ideal()
    }
}

impl DetectionImperfections {
    pub fn ideal() -> Self {
        Self {
            efficiency_c: 1.0,
            efficiency_d: 1.0,
            visibility: 1.0,
            angle_error_c: 0.0,
            angle_error_d: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("efficiency_c", self.efficiency_c),
            ("efficiency_d", self.efficiency_d),
            ("visibility", self.visibility),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if !self.angle_error_c.is_finite() || !self.angle_error_d.is_finite() {
            return Err(Error::InvalidArgument("angle errors must be finite".into()));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::ideal()
    }
}

/// `diag(V_A,sq, V_A,asq, V_B,sq, V_B,asq)` over `[A(sq), A(asq), B(sq), B(asq)]`.
pub fn input_covariance(a: &PolSqueezedSource, b: &PolSqueezedSource) -> CovarianceModel {
    CovarianceModel::diagonal(
        FluctuationBasis::standard_input(),
        &[a.v_sq(), a.v_asq(), b.v_sq(), b.v_asq()],
    )
    .expect("validated sources give a valid diagonal covariance")
}

/// Equal-weight average of two sources in linear units.
pub fn symmetrised_source(a: &PolSqueezedSource, b: &PolSqueezedSource) -> PolSqueezedSource {
    PolSqueezedSource::new(
        (a.v_sq() + b.v_sq()) / 2.0,
        (a.v_asq() + b.v_asq()) / 2.0,
        DarkPlaneAngle::from_radians((a.theta_sq().radians() + b.theta_sq().radians()) / 2.0),
        (a.s3_mean() + b.s3_mean()) / 2.0,
    )
    .expect("the mean of two valid sources satisfies the uncertainty bound")
}

fn checked(map: LinearMap) -> Result<LinearMap> {
    let res = map.orthogonality_residual();
    if res > ORTHOGONALITY_TOL {
        return Err(Error::NumericalConsistency(format!(
            "splitter map is not orthogonal (residual {res:.3e})"
        )));
    }
    Ok(map)
}

/// Input-output relations along the squeezed and anti-squeezed directions,
/// `[A(sq), A(asq), B(sq), B(asq)] -> [C(sq), C(asq), D(sq), D(asq)]`.
pub fn entangling_bs_map(bs: &BeamSplitterSpec) -> Result<LinearMap> {
    bs.check_phase()?;
    let t = bs.t();
    let r = bs.r();
    let s = (r * t).sqrt();
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
         t,  s,  r, -s,
        -s,  t,  s,  r,
         r, -s,  t,  s,
         s,  r, -s,  t,
    ]);
    checked(LinearMap::new(m, FluctuationBasis::standard_input(), FluctuationBasis::output_sq())?)
}

/// Outputs measured along `theta_sq - gamma` and `theta_sq + pi/2 - gamma`,
/// `[A(sq), A(asq), B(sq), B(asq)] -> [C(opt), C(opt_perp), D(opt), D(opt_perp)]`.
///
/// Along these directions each output coordinate depends on only two of the
/// four input coordinates.
pub fn optimized_direction_map(bs: &BeamSplitterSpec) -> Result<LinearMap> {
    bs.check_phase()?;
    let st = bs.t().sqrt();
    let sr = bs.r().sqrt();
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        st, 0.0, 0.0, -sr,
        0.0, st,  sr, 0.0,
        0.0, -sr, st, 0.0,
        sr, 0.0, 0.0,  st,
    ]);
    let direct = checked(LinearMap::new(
        m,
        FluctuationBasis::standard_input(),
        FluctuationBasis::output_opt(),
    )?)?;

    let gamma = bs.gamma();
    let rotated = entangling_bs_map(bs)?
        .then(&LinearMap::per_beam_rotation(&FluctuationBasis::output_sq(), |_| -gamma)?)?
        .with_output(FluctuationBasis::output_opt())?;
    let diff = (direct.matrix() - rotated.matrix()).abs().max();
    if diff > ORTHOGONALITY_TOL {
        return Err(Error::NumericalConsistency(format!(
            "optimised map differs from rotated splitter map by {diff:.3e}"
        )));
    }
    Ok(direct)
}

/// Output covariance along the squeezed/anti-squeezed directions.
pub fn output_covariance(a: &PolSqueezedSource, b: &PolSqueezedSource, bs: &BeamSplitterSpec) -> Result<CovarianceModel> {
    propagate(&entangling_bs_map(bs)?, &input_covariance(a, b))
}

/// Output covariance along the optimised directions.
pub fn optimized_output_covariance(
    a: &PolSqueezedSource,
    b: &PolSqueezedSource,
    bs: &BeamSplitterSpec,
) -> Result<CovarianceModel> {
    propagate(&optimized_direction_map(bs)?, &input_covariance(a, b))
}

/// Applies, in order: imperfect mode overlap, wave-plate missets, then loss.
///
/// Visibility `v`: the C-D cross-covariance block is scaled by `v^2` while each
/// beam keeps its own noise, i.e. `v^2 Sigma + (1 - v^2) blockdiag(Sigma_CC, Sigma_DD)`.
/// Loss `eta` per beam: `V -> eta V + (1 - eta)`, cross terms scale by
/// `sqrt(eta_c eta_d)`.
pub fn apply_detection(cov: &CovarianceModel, imp: &DetectionImperfections) -> Result<CovarianceModel> {
    imp.validate()?;
    let basis = cov.basis().clone();
    if basis.len() != 4 {
        return Err(Error::InvalidArgument("detection acts on a C/D output basis".into()));
    }
    let (c0, c1) = basis.beam_pair(Beam::C)?;
    basis.beam_pair(Beam::D)?;
    let beam_of = |i: usize| if i == c0 || i == c1 { Beam::C } else { Beam::D };

    let v2 = imp.visibility * imp.visibility;
    let mut m = cov.matrix().clone();
    for i in 0..4 {
        for j in 0..4 {
            if beam_of(i) != beam_of(j) {
                m[(i, j)] *= v2;
            }
        }
    }
    let mixed = CovarianceModel::new(basis.clone(), m)?;

    let rot = LinearMap::per_beam_rotation(&basis, |b| match b {
        Beam::C => imp.angle_error_c,
        _ => imp.angle_error_d,
    })?;
    let rotated = propagate(&rot, &mixed)?;

    let eta = |i: usize| match beam_of(i) {
        Beam::C => imp.efficiency_c,
        _ => imp.efficiency_d,
    };
    let mut m = rotated.matrix().clone();
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] *= (eta(i) * eta(j)).sqrt();
        }
        m[(i, i)] += 1.0 - eta(i);
    }
    CovarianceModel::new(basis, m)
}

/// Variance seen at an output port when the other input is blocked (vacuum):
/// `t V_in + (1 - t)`.
pub fn forward_blocked(v_in: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!("transmittance {t} is outside (0, 1]")));
    }
    Ok(t * v_in + (1.0 - t))
}

/// Input variance inferred from a blocked-arm measurement; inverse of
/// [`forward_blocked`].
pub fn blocked_arm_inference(measured: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!("transmittance {t} is outside (0, 1]")));
    }
    if measured <= 1.0 - t {
        return Err(Error::Domain(format!(
            "measured variance {measured} is at or below the vacuum contribution {}",
            1.0 - t
        )));
    }
    Ok((measured - (1.0 - t)) / t)
}

/// Weights of `S_C(asq) - S_D(asq)` on the squeezed-direction output basis.
pub const ASQ_DIFFERENCE: [f64; 4] = [0.0, 1.0, 0.0, -1.0];
/// Weights of `S_C(sq) + S_D(sq)` on the squeezed-direction output basis.
pub const SQ_SUM: [f64; 4] = [1.0, 0.0, 1.0, 0.0];

/// Closed form of the normalised anti-squeezed difference correlation,
/// `[(T - R)^2 (V_A,asq + V_B,asq) + 4RT (V_A,sq + V_B,sq)] / 2`.
pub fn asq_difference_closed_form(t: f64, a: &PolSqueezedSource, b: &PolSqueezedSource) -> f64 {
    let r = 1.0 - t;
    ((t - r).powi(2) * (a.v_asq() + b.v_asq()) + 4.0 * r * t * (a.v_sq() + b.v_sq())) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplittingRatio {
    pub t: f64,
    pub r: f64,
}

impl SplittingRatio {
    pub fn imbalance(&self) -> f64 {
        (self.t - self.r).abs()
    }
}

/// Solves the anti-squeezed difference correlation for the splitting ratio,
/// returning the root with `t >= 1/2`.
pub fn infer_splitting_from_asq_correlation(
    measured_norm: f64,
    a: &PolSqueezedSource,
    b: &PolSqueezedSource,
) -> Result<SplittingRatio> {
    let sum_sq = a.v_sq() + b.v_sq();
    let sum_asq = a.v_asq() + b.v_asq();
    let floor = sum_sq / 2.0;
    if measured_norm < floor {
        return Err(Error::Inconsistency {
            measured: measured_norm,
            floor,
        });
    }
    if sum_asq - sum_sq <= 0.0 {
        return Err(Error::NotApplicable(
            "inputs carry no anti-squeezing, so the correlation does not depend on the splitting".into(),
        ));
    }
    // measured = [x sum_asq + (1 - x) sum_sq] / 2 with x = (T - R)^2, 4RT = 1 - x.
    let x = (2.0 * measured_norm - sum_sq) / (sum_asq - sum_sq);
    if x >= 1.0 {
        return Err(Error::Domain(format!(
            "measured {measured_norm} implies a fully unbalanced splitter with no correlation"
        )));
    }
    let t = (1.0 + x.sqrt()) / 2.0;
    Ok(SplittingRatio { t, r: 1.0 - t })
}

/// Forward model for [`infer_splitting_from_asq_correlation`], evaluated by
/// propagating the input covariance rather than by the closed form.
pub fn simulate_asq_difference(t: f64, a: &PolSqueezedSource, b: &PolSqueezedSource) -> Result<f64> {
    let out = output_covariance(a, b, &BeamSplitterSpec::new(t)?)?;
    normalized_combo_variance(&out, &ASQ_DIFFERENCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{Axis, Coord};
    use proptest::prelude::*;

    fn paper_sources() -> (PolSqueezedSource, PolSqueezedSource) {
        let theta = DarkPlaneAngle::from_degrees(4.5);
        (
            PolSqueezedSource::from_db(-4.2, 19.7, theta, 1.0).unwrap(),
            PolSqueezedSource::from_db(-4.0, 19.6, theta, 1.0).unwrap(),
        )
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.abs().max()
    }

    #[test]
    fn coherent_inputs_give_identity() {
        let c = PolSqueezedSource::coherent();
        let cov = input_covariance(&c, &c);
        assert_eq!(cov.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn paper_input_covariance() {
        let (a, b) = paper_sources();
        let cov = input_covariance(&a, &b);
        let d = cov.matrix().diagonal();
        for (got, want) in d.iter().zip([0.380, 93.3, 0.398, 91.2]) {
            assert!((got - want).abs() / want < 1e-3, "{got} vs {want}");
        }
        assert_eq!(cov.matrix()[(0, 2)], 0.0);
    }

    #[test]
    fn swapping_sources_permutes_entries() {
        let (a, b) = paper_sources();
        let ab = input_covariance(&a, &b);
        let ba = input_covariance(&b, &a);
        assert_eq!(ab.variance(Coord::new(Beam::A, Axis::Sq)).unwrap(), ba.variance(Coord::new(Beam::B, Axis::Sq)).unwrap());
        assert_eq!(ab.variance(Coord::new(Beam::B, Axis::Asq)).unwrap(), ba.variance(Coord::new(Beam::A, Axis::Asq)).unwrap());
    }

    #[test]
    fn half_splitter_rows() {
        let m = entangling_bs_map(&BeamSplitterSpec::symmetric()).unwrap();
        let row: Vec<f64> = m.matrix().row(0).iter().copied().collect();
        assert_eq!(row, vec![0.5, 0.5, 0.5, -0.5]);
    }

    #[test]
    fn full_transmission_routes_straight_through() {
        let bs = BeamSplitterSpec::new(1.0).unwrap();
        assert_eq!(entangling_bs_map(&bs).unwrap().matrix(), &DMatrix::identity(4, 4));
        assert_eq!(optimized_direction_map(&bs).unwrap().matrix(), &DMatrix::identity(4, 4));
        assert_eq!(bs.gamma(), 0.0);
    }

    #[test]
    fn gamma_values() {
        assert!((BeamSplitterSpec::symmetric().gamma() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let g = BeamSplitterSpec::new(0.521).unwrap().gamma().to_degrees();
        assert!((g - 43.80).abs() < 0.01, "{g}");
    }

    #[test]
    fn other_phases_rejected() {
        let bs = BeamSplitterSpec::symmetric().with_relative_phase(0.3);
        assert!(matches!(entangling_bs_map(&bs), Err(Error::UnsupportedConfiguration(_))));
        assert!(matches!(optimized_direction_map(&bs), Err(Error::UnsupportedConfiguration(_))));
        assert!(BeamSplitterSpec::new(1.2).is_err());
    }

    #[test]
    fn ideal_detection_is_identity() {
        let (a, b) = paper_sources();
        let out = output_covariance(&a, &b, &BeamSplitterSpec::new(0.521).unwrap()).unwrap();
        let det = apply_detection(&out, &DetectionImperfections::ideal()).unwrap();
        assert!(max_abs(&(det.matrix() - out.matrix())) < 1e-12);
    }

    #[test]
    fn total_loss_gives_vacuum() {
        let (a, b) = paper_sources();
        let out = output_covariance(&a, &b, &BeamSplitterSpec::symmetric()).unwrap();
        let imp = DetectionImperfections {
            efficiency_c: 0.0,
            efficiency_d: 0.0,
            ..DetectionImperfections::ideal()
        };
        let det = apply_detection(&out, &imp).unwrap();
        assert!(max_abs(&(det.matrix() - DMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn angle_error_raises_optimised_correlation() {
        let (a, b) = paper_sources();
        let out = optimized_output_covariance(&a, &b, &BeamSplitterSpec::new(0.521).unwrap()).unwrap();
        let imp = DetectionImperfections {
            angle_error_c: 1.2f64.to_radians(),
            angle_error_d: 1.2f64.to_radians(),
            ..DetectionImperfections::ideal()
        };
        let det = apply_detection(&out, &imp).unwrap();
        // g S_C(opt) + S_D(opt_perp)/g near the balancing gain (T/R)^(1/4).
        let g = (0.521f64 / 0.479).powf(0.25);
        let ideal = normalized_combo_variance(&out, &[g, 0.0, 0.0, 1.0 / g]).unwrap();
        let v = normalized_combo_variance(&det, &[g, 0.0, 0.0, 1.0 / g]).unwrap();
        assert!((ideal - a.v_sq()).abs() < 1e-12);
        assert!((0.42..=0.48).contains(&v), "{v}");
        // Leakage estimate: sin^2(delta) * V_asq on top of the ideal floor.
        let leak = 1.2f64.to_radians().sin().powi(2) * a.v_asq();
        assert!((v - ideal - leak).abs() < 0.01, "{v} vs {}", ideal + leak);
    }

    #[test]
    fn visibility_only_touches_cross_terms() {
        let (a, b) = paper_sources();
        let out = output_covariance(&a, &b, &BeamSplitterSpec::symmetric()).unwrap();
        let imp = DetectionImperfections {
            visibility: 0.98,
            ..DetectionImperfections::ideal()
        };
        let det = apply_detection(&out, &imp).unwrap();
        assert_eq!(det.matrix()[(0, 0)], out.matrix()[(0, 0)]);
        assert!((det.matrix()[(0, 2)] - 0.98 * 0.98 * out.matrix()[(0, 2)]).abs() < 1e-12);
        assert!(apply_detection(&out, &DetectionImperfections { visibility: 1.5, ..imp }).is_err());
    }

    #[test]
    fn blocked_arm_round_trip() {
        let m = forward_blocked(0.380, 0.5).unwrap();
        assert!((m - 0.690).abs() < 1e-12);
        assert!((10.0 * m.log10() + 1.61).abs() < 0.01);
        assert_eq!(blocked_arm_inference(1.0, 0.37).unwrap(), 1.0);
        assert!(matches!(blocked_arm_inference(0.4, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn asymmetry_from_measured_correlation() {
        let (a, b) = paper_sources();
        let ratio = infer_splitting_from_asq_correlation(0.55, &a, &b).unwrap();
        assert!((ratio.imbalance() - 0.042).abs() < 0.003, "{ratio:?}");
        assert!((ratio.t - 0.521).abs() < 0.001);
        let back = simulate_asq_difference(ratio.t, &a, &b).unwrap();
        assert!((back - 0.55).abs() < 1e-9, "{back}");

        let floor = (a.v_sq() + b.v_sq()) / 2.0;
        assert_eq!(infer_splitting_from_asq_correlation(floor, &a, &b).unwrap().t, 0.5);
        assert!(matches!(
            infer_splitting_from_asq_correlation(floor - 0.01, &a, &b),
            Err(Error::Inconsistency { .. })
        ));
        assert!(infer_splitting_from_asq_correlation(200.0, &a, &b).is_err());
    }

    proptest! {
        #[test]
        fn splitter_is_orthogonal(t in 0.0..=1.0f64) {
            let m = entangling_bs_map(&BeamSplitterSpec::new(t).unwrap()).unwrap();
            prop_assert!(m.orthogonality_residual() < 1e-12);
        }

        #[test]
        fn optimised_map_is_rotated_splitter(t in 0.0..=1.0f64) {
            // Construction itself asserts the identity; failure surfaces as an error.
            prop_assert!(optimized_direction_map(&BeamSplitterSpec::new(t).unwrap()).is_ok());
        }

        #[test]
        fn sq_sum_ignores_splitting(t in 0.01..0.99f64) {
            let (a, b) = paper_sources();
            let out = output_covariance(&a, &b, &BeamSplitterSpec::new(t).unwrap()).unwrap();
            let v = normalized_combo_variance(&out, &SQ_SUM).unwrap();
            prop_assert!((v - (a.v_sq() + b.v_sq()) / 2.0).abs() < 1e-12);
        }

        #[test]
        fn asq_difference_matches_closed_form(t in 0.01..0.99f64) {
            let (a, b) = paper_sources();
            let sim = simulate_asq_difference(t, &a, &b).unwrap();
            prop_assert!((sim - asq_difference_closed_form(t, &a, &b)).abs() < 1e-10);
        }

        #[test]
        fn asq_difference_grows_with_imbalance(t1 in 0.5..1.0f64, dt in 0.0..0.5f64) {
            let (a, b) = paper_sources();
            let t2 = (t1 + dt).min(1.0);
            prop_assert!(asq_difference_closed_form(t2, &a, &b) >= asq_difference_closed_form(t1, &a, &b) - 1e-12);
        }

        #[test]
        fn blocked_inverse(v in 0.05..100.0f64, t in 0.05..1.0f64) {
            let back = blocked_arm_inference(forward_blocked(v, t).unwrap(), t).unwrap();
            prop_assert!((back - v).abs() < 1e-9 * v.max(1.0));
        }

        #[test]
        fn loss_keeps_coherent_at_shot_noise(eta_c in 0.0..=1.0f64, eta_d in 0.0..=1.0f64, vis in 0.5..=1.0f64) {
            let out = CovarianceModel::identity(FluctuationBasis::output_sq());
            let imp = DetectionImperfections { efficiency_c: eta_c, efficiency_d: eta_d, visibility: vis, ..DetectionImperfections::ideal() };
            let det = apply_detection(&out, &imp).unwrap();
            for i in 0..4 {
                prop_assert!(det.matrix()[(i, i)] >= 1.0 - 1e-12);
            }
        }
    }
}
