//! Stokes-parameter domain model for circularly polarised beams.
//!
//! For a beam with a bright `S3` component the two remaining Stokes
//! parameters span the *dark plane*. Any direction in it is
//! `S(theta) = cos(theta) S1 + sin(theta) S2` and has zero mean; `S(theta)`
//! and `S(theta + pi/2)` are a maximally conjugate pair.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction in the S1-S2 plane, in radians. Stored reduced to `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DarkPlaneAngle(f64);

impl DarkPlaneAngle {
    pub fn from_radians(theta: f64) -> Self {
        Self(theta.rem_euclid(TAU))
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::from_radians(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// The maximally conjugate direction `theta + pi/2`.
    pub fn conjugate(self) -> Self {
        Self::from_radians(self.0 + FRAC_PI_2)
    }

    /// Unit vector `(cos theta, sin theta)` in (S1, S2) coordinates.
    pub fn direction(self) -> (f64, f64) {
        (self.0.cos(), self.0.sin())
    }
}

impl Default for DarkPlaneAngle {
    fn default() -> Self {
        Self(0.0)
    }
}

/// Mean Stokes vector, in photons per detection interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesMean {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesMean {
    /// Fully circular polarisation with intensity `s3.abs()`.
    pub fn circular(s3: f64) -> Self {
        Self {
            s0: s3.abs(),
            s1: 0.0,
            s2: 0.0,
            s3,
        }
    }

    pub fn is_circular(&self, tol: f64) -> bool {
        self.s1.abs() <= tol && self.s2.abs() <= tol && (self.s3.abs() - self.s0).abs() <= tol
    }
}

/// A polarisation-squeezed input beam.
///
/// `v_sq` and `v_asq` are the variances along `theta_sq` and its conjugate, in
/// shot-noise units. `s3_mean` is carried along as metadata; the normalised
/// model never multiplies by it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolSqueezedSource {
    v_sq: f64,
    v_asq: f64,
    theta_sq: DarkPlaneAngle,
    s3_mean: f64,
}

impl PolSqueezedSource {
    pub fn new(v_sq: f64, v_asq: f64, theta_sq: DarkPlaneAngle, s3_mean: f64) -> Result<Self> {
        if !(v_sq > 0.0 && v_asq > 0.0) || !v_sq.is_finite() || !v_asq.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "source variances must be positive and finite, got ({v_sq}, {v_asq})"
            )));
        }
        // Allow a few ulps so that exact minimum-uncertainty states such as
        // (0.9, 1/0.9) are not rejected by rounding.
        if v_sq * v_asq < 1.0 - 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "uncertainty relation violated: {v_sq} * {v_asq} = {} < 1",
                v_sq * v_asq
            )));
        }
        Ok(Self {
            v_sq,
            v_asq,
            theta_sq,
            s3_mean,
        })
    }

    /// Source from squeezing and anti-squeezing levels in dB relative to shot noise.
    pub fn from_db(sq_db: f64, asq_db: f64, theta_sq: DarkPlaneAngle, s3_mean: f64) -> Result<Self> {
        Self::new(
            10f64.powf(sq_db / 10.0),
            10f64.powf(asq_db / 10.0),
            theta_sq,
            s3_mean,
        )
    }

    pub fn coherent() -> Self {
        Self {
            v_sq: 1.0,
            v_asq: 1.0,
            theta_sq: DarkPlaneAngle::default(),
            s3_mean: 1.0,
        }
    }

    pub fn v_sq(&self) -> f64 {
        self.v_sq
    }

    pub fn v_asq(&self) -> f64 {
        self.v_asq
    }

    pub fn theta_sq(&self) -> DarkPlaneAngle {
        self.theta_sq
    }

    pub fn s3_mean(&self) -> f64 {
        self.s3_mean
    }

    /// Anti-squeezing in excess of a minimum-uncertainty state, as a ratio.
    pub fn excess_noise(&self) -> f64 {
        self.v_asq * self.v_sq
    }
}

/// 2x2 map taking coordinates `(S(theta), S(theta + pi/2))` to
/// `(S(theta + delta), S(theta + delta + pi/2))`.
pub fn dark_plane_rotation_map(delta: f64) -> Matrix2<f64> {
    let (s, c) = delta.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Product of two conjugate variances. Compare against 1 for the dark-plane
/// relation in normalised units, or use [`uncertainty_product_with_bound`].
pub fn uncertainty_product(v_a: f64, v_b: f64) -> Result<f64> {
    if !(v_a > 0.0 && v_b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variances must be positive, got ({v_a}, {v_b})"
        )));
    }
    Ok(v_a * v_b)
}

/// Outcome of checking a variance pair against a state-dependent bound
/// `|<S_l>|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyCheck {
    pub product: f64,
    pub bound: f64,
}

impl UncertaintyCheck {
    pub fn satisfied(&self) -> bool {
        self.product >= self.bound
    }
}

/// General form for any of the three Stokes uncertainty relations, with the
/// caller supplying the squared mean of the third component as `bound`.
pub fn uncertainty_product_with_bound(v_a: f64, v_b: f64, bound: f64) -> Result<UncertaintyCheck> {
    if !(bound >= 0.0) {
        return Err(Error::InvalidArgument(format!("bound must be non-negative, got {bound}")));
    }
    Ok(UncertaintyCheck {
        product: uncertainty_product(v_a, v_b)?,
        bound,
    })
}

/// Squeezed below shot noise in `theta_sq`, anti-squeezed above it in the
/// conjugate direction.
pub fn is_polarisation_squeezed(src: &PolSqueezedSource) -> bool {
    src.v_sq < 1.0 && src.v_asq > 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn max_abs(m: Matrix2<f64>) -> f64 {
        m.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    #[test]
    fn zero_rotation_is_identity() {
        assert_eq!(dark_plane_rotation_map(0.0), Matrix2::identity());
    }

    #[test]
    fn quarter_rotation_maps_to_conjugate() {
        let m = dark_plane_rotation_map(FRAC_PI_2);
        // (S(theta), S(theta+pi/2)) = (1, 0) goes to (S(theta+pi/2), -S(theta)) = (0, -1)
        let out = m * nalgebra::Vector2::new(1.0, 0.0);
        assert!((out[0]).abs() < 1e-15 && (out[1] + 1.0).abs() < 1e-15);
        let out = m * nalgebra::Vector2::new(0.0, 1.0);
        assert!((out[0] - 1.0).abs() < 1e-15 && out[1].abs() < 1e-15);
    }

    #[test]
    fn rotation_onto_squeezing_angle() {
        // A measurement axis at theta = 0 rotated by 4.5 deg lands on theta_sq = 4.5 deg.
        let theta_sq = DarkPlaneAngle::from_degrees(4.5);
        let m = dark_plane_rotation_map(theta_sq.radians());
        let (c, s) = theta_sq.direction();
        // First row gives S(theta_sq) in terms of (S1, S2).
        assert!((m[(0, 0)] - c).abs() < 1e-15);
        assert!((m[(0, 1)] - s).abs() < 1e-15);
        assert!((theta_sq.degrees() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn half_turn_flips_sign() {
        let m = dark_plane_rotation_map(PI);
        assert!(max_abs(m + Matrix2::identity()) < 1e-15);
    }

    #[test]
    fn angle_is_reduced() {
        let a = DarkPlaneAngle::from_radians(-FRAC_PI_2);
        assert!((a.radians() - 1.5 * PI).abs() < 1e-12);
        assert!((a.conjugate().radians()).abs() < 1e-12);
    }

    #[test]
    fn uncertainty_products() {
        assert_eq!(uncertainty_product(1.0, 1.0).unwrap(), 1.0);
        let p = uncertainty_product(10f64.powf(-0.42), 10f64.powf(1.97)).unwrap();
        assert!((p - 35.48).abs() < 0.01, "{p}");
        let forbidden = uncertainty_product_with_bound(0.5, 0.5, 1.0).unwrap();
        assert_eq!(forbidden.product, 0.25);
        assert!(!forbidden.satisfied());
        assert!(uncertainty_product(0.0, 1.0).is_err());
        assert!(uncertainty_product(1.0, -2.0).is_err());
    }

    #[test]
    fn squeezing_classification() {
        let paper = PolSqueezedSource::from_db(-4.2, 19.7, DarkPlaneAngle::default(), 1.0).unwrap();
        assert!((paper.v_sq() - 0.380).abs() < 1e-3);
        assert!((paper.v_asq() - 93.3).abs() < 0.05);
        assert!(is_polarisation_squeezed(&paper));
        assert!(!is_polarisation_squeezed(&PolSqueezedSource::coherent()));
        let min_unc = PolSqueezedSource::new(0.9, 1.0 / 0.9, DarkPlaneAngle::default(), 1.0).unwrap();
        assert!(is_polarisation_squeezed(&min_unc));
    }

    #[test]
    fn constructor_rejects_uncertainty_violation() {
        assert!(PolSqueezedSource::new(0.5, 0.5, DarkPlaneAngle::default(), 1.0).is_err());
        assert!(PolSqueezedSource::new(-0.5, 4.0, DarkPlaneAngle::default(), 1.0).is_err());
        assert!(PolSqueezedSource::new(f64::NAN, 4.0, DarkPlaneAngle::default(), 1.0).is_err());
    }

    proptest! {
        #[test]
        fn rotations_compose(a in -10.0..10.0f64, b in -10.0..10.0f64) {
            let lhs = dark_plane_rotation_map(a) * dark_plane_rotation_map(b);
            let rhs = dark_plane_rotation_map(a + b);
            prop_assert!(max_abs(lhs - rhs) < 1e-12);
        }

        #[test]
        fn rotations_are_orthogonal(a in -10.0..10.0f64) {
            let m = dark_plane_rotation_map(a);
            prop_assert!(max_abs(m * m.transpose() - Matrix2::identity()) < 1e-12);
            prop_assert!((m.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn product_is_symmetric(a in 1e-3..1e3f64, b in 1e-3..1e3f64) {
            prop_assert_eq!(uncertainty_product(a, b).unwrap(), uncertainty_product(b, a).unwrap());
        }

        #[test]
        fn accepted_sources_obey_bound(a in 1e-3..10.0f64, b in 1e-3..1e3f64) {
            if let Ok(src) = PolSqueezedSource::new(a, b, DarkPlaneAngle::default(), 1.0) {
                prop_assert!(src.v_sq() * src.v_asq() >= 1.0 - 1e-12);
            }
        }
    }
}
