//! Entanglement witnesses and electronic-gain optimisation.
//!
//! A [`CorrelationCombo`] is the weighted sum or difference of two measured
//! Stokes signals, `s1 g^p1 X + s2 g^p2 Y`, where `g` is a single electronic
//! gain and the exponents select which arm it scales. Variances are
//! normalised by the shot reference of the combination, the sum of squared
//! weights.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{normalized_combo_variance, propagate, Axis, Beam, Coord, CovarianceModel, LinearMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComboTerm {
    pub coord: Coord,
    /// +1 or -1.
    pub sign: f64,
    /// The weight of this term is `sign * gain^gain_power`.
    pub gain_power: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationCombo {
    pub terms: [ComboTerm; 2],
    pub gain: f64,
}

impl CorrelationCombo {
    fn new(a: Coord, sa: f64, pa: i32, b: Coord, sb: f64, pb: i32) -> Self {
        Self {
            terms: [
                ComboTerm { coord: a, sign: sa, gain_power: pa },
                ComboTerm { coord: b, sign: sb, gain_power: pb },
            ],
            gain: 1.0,
        }
    }

    /// `X + g Y`.
    pub fn sum(x: Coord, y: Coord) -> Self {
        Self::new(x, 1.0, 0, y, 1.0, 1)
    }

    /// `X - g Y`.
    pub fn difference(x: Coord, y: Coord) -> Self {
        Self::new(x, 1.0, 0, y, -1.0, 1)
    }

    /// `g X + Y / g`.
    pub fn balanced(x: Coord, y: Coord) -> Self {
        Self::new(x, 1.0, 1, y, 1.0, -1)
    }

    pub fn with_gain(mut self, gain: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::InvalidArgument(format!("gain must be positive, got {gain}")));
        }
        self.gain = gain;
        Ok(self)
    }

    /// Weight vector over `cov`'s basis.
    pub fn weights(&self, cov: &CovarianceModel) -> Result<Vec<f64>> {
        let mut w = vec![0.0; cov.dim()];
        for term in &self.terms {
            let i = cov.basis().index_of(term.coord)?;
            w[i] += term.sign * self.gain.powi(term.gain_power);
        }
        Ok(w)
    }

    pub fn normalized_variance(&self, cov: &CovarianceModel) -> Result<f64> {
        normalized_combo_variance(cov, &self.weights(cov)?)
    }

    /// Same combination with beams C and D exchanged.
    pub fn swap_outputs(mut self) -> Self {
        for term in &mut self.terms {
            term.coord.beam = match term.coord.beam {
                Beam::C => Beam::D,
                Beam::D => Beam::C,
                other => other,
            };
        }
        self
    }

    pub fn label(&self) -> String {
        let part = |t: &ComboTerm| {
            let sign = if t.sign < 0.0 { "-" } else { "+" };
            let gain = match t.gain_power {
                0 => String::new(),
                1 => "g*".into(),
                -1 => "(1/g)*".into(),
                p => format!("g^{p}*"),
            };
            (sign, format!("{gain}S_{}", t.coord))
        };
        let (s0, a) = part(&self.terms[0]);
        let (s1, b) = part(&self.terms[1]);
        let lead = if s0 == "-" { "-" } else { "" };
        format!("{lead}{a} {s1} {b}")
    }
}

/// `S_C(sq) + g S_D(sq)`.
pub fn sq_sum() -> CorrelationCombo {
    CorrelationCombo::sum(Coord::new(Beam::C, Axis::Sq), Coord::new(Beam::D, Axis::Sq))
}

/// `S_C(asq) - h S_D(asq)`, i.e. `S_C(theta_sq + pi/2) + h S_D(theta_sq - pi/2)`.
pub fn asq_difference() -> CorrelationCombo {
    CorrelationCombo::difference(Coord::new(Beam::C, Axis::Asq), Coord::new(Beam::D, Axis::Asq))
}

/// `k S_C(opt) + S_D(opt_perp) / k`.
pub fn opt_combo() -> CorrelationCombo {
    CorrelationCombo::balanced(Coord::new(Beam::C, Axis::Opt), Coord::new(Beam::D, Axis::OptPerp))
}

/// `S_C(opt_perp) / l + l S_D(opt)`.
pub fn opt_perp_combo() -> CorrelationCombo {
    CorrelationCombo::balanced(Coord::new(Beam::D, Axis::Opt), Coord::new(Beam::C, Axis::OptPerp))
}

/// Closed form used for symmetric two-mode Gaussian states; see [`eof_symmetric`].
pub const EOF_FORMULA: &str = "symmetric two-mode Gaussian closed form (cited result)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub combo_variances: [f64; 2],
    pub product_root: f64,
    pub epr_product: Option<f64>,
    pub eof_ebits: Option<f64>,
    pub eof_formula: Option<&'static str>,
    pub verdict_nonseparable: bool,
    pub verdict_epr: Option<bool>,
}

impl WitnessReport {
    /// Report from two already-normalised correlation variances.
    pub fn from_pair(v1: f64, v2: f64) -> Result<Self> {
        if !(v1 >= 0.0 && v2 >= 0.0) {
            return Err(Error::InvalidArgument(format!("variances must be non-negative, got ({v1}, {v2})")));
        }
        let product_root = (v1 * v2).sqrt();
        Ok(Self {
            combo_variances: [v1, v2],
            product_root,
            epr_product: None,
            eof_ebits: None,
            eof_formula: None,
            verdict_nonseparable: product_root < 1.0,
            verdict_epr: None,
        })
    }

    pub fn with_epr(mut self, epr: &EprReport) -> Self {
        self.epr_product = Some(epr.product);
        self.verdict_epr = Some(epr.product < 1.0);
        self
    }

    /// Attaches the entanglement of formation computed from this report's
    /// product. The caller is responsible for the state being symmetric.
    pub fn with_eof(mut self) -> Self {
        self.eof_ebits = eof_symmetric(self.combo_variances[0], self.combo_variances[1]);
        self.eof_formula = Some(EOF_FORMULA);
        self
    }
}

/// Product-form non-separability check on two normalised combination
/// variances. The state is inseparable when `sqrt(v1 v2) < 1`.
pub fn nonseparability_product(
    cov: &CovarianceModel,
    combo1: &CorrelationCombo,
    combo2: &CorrelationCombo,
) -> Result<WitnessReport> {
    WitnessReport::from_pair(combo1.normalized_variance(cov)?, combo2.normalized_variance(cov)?)
}

/// How the two conjugate correlations are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// `S_C(theta) + S_D(theta)` with `S_C(theta + pi/2) - S_D(theta + pi/2)`.
    SumDifference,
    /// `S_C(theta) + S_D(theta + pi/2)` with `S_C(theta + pi/2) + S_D(theta)`.
    Cross,
}

/// Unit-gain witness along `axis` and its conjugate.
///
/// The cross pairing is evaluated by rotating beam D a quarter turn in the
/// dark plane (a half-wave plate at 45 degrees), which turns it into the
/// sum/difference pairing on the rotated channels.
pub fn pairing_witness(cov: &CovarianceModel, axis: Axis, pairing: Pairing) -> Result<WitnessReport> {
    let c = |a: Axis| Coord::new(Beam::C, a);
    let d = |a: Axis| Coord::new(Beam::D, a);
    let perp = axis.conjugate();
    let sum = CorrelationCombo::sum(c(axis), d(axis));
    let diff = CorrelationCombo::difference(c(perp), d(perp));
    match pairing {
        Pairing::SumDifference => nonseparability_product(cov, &sum, &diff),
        Pairing::Cross => {
            let basis = cov.basis();
            let (i, j) = basis.beam_pair(Beam::D)?;
            // Quarter turn must act on (D(axis), D(perp)) in that order.
            let angle = if basis.coords()[i].axis == axis && basis.coords()[j].axis == perp {
                FRAC_PI_2
            } else {
                -FRAC_PI_2
            };
            let rot = LinearMap::per_beam_rotation(basis, |b| if b == Beam::D { angle } else { 0.0 })?;
            nonseparability_product(&propagate(&rot, cov)?, &sum, &diff)
        }
    }
}

pub const GAIN_MIN: f64 = 1e-3;
pub const GAIN_MAX: f64 = 1e3;
const PROFILE_SAMPLES: usize = 241;
const LOG_G_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainOptimum {
    pub g_opt: f64,
    pub v_min: f64,
}

/// Minimises the normalised variance of `template` over `g` in
/// `[1e-3, 1e3]`. The profile is sampled on a log grid, checked to be
/// unimodal, then refined by golden-section search on `ln g`.
pub fn optimize_gain(cov: &CovarianceModel, template: &CorrelationCombo) -> Result<GainOptimum> {
    let eval = |x: f64| -> Result<f64> { template.with_gain(x.exp())?.normalized_variance(cov) };
    let (lo, hi) = (GAIN_MIN.ln(), GAIN_MAX.ln());
    let step = (hi - lo) / (PROFILE_SAMPLES - 1) as f64;
    let xs: Vec<f64> = (0..PROFILE_SAMPLES).map(|i| lo + step * i as f64).collect();
    let ys = xs.iter().map(|&x| eval(x)).collect::<Result<Vec<f64>>>()?;

    let (ymin, ymax) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let tol = 1e-12 * ymax.abs().max(1.0);
    if ymax - ymin <= tol {
        return Ok(GainOptimum { g_opt: 1.0, v_min: eval(0.0)? });
    }

    let mut rising = false;
    for w in ys.windows(2) {
        let d = w[1] - w[0];
        if d > tol {
            rising = true;
        } else if d < -tol && rising {
            return Err(Error::OptimizerAmbiguity {
                samples: xs.iter().map(|x| x.exp()).zip(ys.iter().copied()).collect(),
            });
        }
    }

    let best = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(PROFILE_SAMPLES - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > LOG_G_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let mut v = eval(x)?;
    let mut g = x.exp();
    // The sampled end points can beat the interior bracket when the minimum
    // sits on the search boundary.
    if ys[best] < v {
        v = ys[best];
        g = xs[best].exp();
    }
    Ok(GainOptimum { g_opt: g, v_min: v })
}

/// `((T V_sq + R V_asq) / (T V_asq + R V_sq))^(1/4)`, reported next to the
/// numerical optimum for comparison.
pub fn closed_form_gain(t: f64, r: f64, v_sq: f64, v_asq: f64) -> Result<f64> {
    if !(t > 0.0 && r > 0.0 && v_sq > 0.0 && v_asq > 0.0) {
        return Err(Error::InvalidArgument("closed-form gain needs positive arguments".into()));
    }
    Ok(((t * v_sq + r * v_asq) / (t * v_asq + r * v_sq)).powf(0.25))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EprReport {
    pub conditional_x: f64,
    pub conditional_p: f64,
    pub product: f64,
}

impl EprReport {
    pub fn demonstrated(&self) -> bool {
        self.product < 1.0
    }
}

/// `V_u - Cov(u, w)^2 / V_w`: the variance left in `u` after the best linear
/// inference from `w`.
pub fn conditional_variance(cov: &CovarianceModel, u: Coord, w: Coord) -> Result<f64> {
    let vw = cov.variance(w)?;
    if vw <= 0.0 {
        return Err(Error::DegenerateConditioning(w.to_string()));
    }
    let c = cov.covariance(u, w)?;
    Ok(cov.variance(u)? - c * c / vw)
}

/// Product of the two inferred variances; EPR correlations when below 1.
/// Each pair is `(inferred, conditioning)`.
pub fn epr_reid(cov: &CovarianceModel, pair_x: (Coord, Coord), pair_p: (Coord, Coord)) -> Result<EprReport> {
    let conditional_x = conditional_variance(cov, pair_x.0, pair_x.1)?;
    let conditional_p = conditional_variance(cov, pair_p.0, pair_p.1)?;
    Ok(EprReport {
        conditional_x,
        conditional_p,
        product: conditional_x * conditional_p,
    })
}

/// Entanglement of formation in ebits for a symmetric two-mode Gaussian
/// state whose correlation variances have geometric mean `delta`:
/// `c+ log2 c+ - c- log2 c-` with `c± = (delta^-1/2 ± delta^1/2)^2 / 4`.
///
/// Returns `None` when `delta > 1` (this witness certifies nothing there);
/// `delta = 1` gives exactly zero.
pub fn eof_symmetric(v1: f64, v2: f64) -> Option<f64> {
    let delta = (v1 * v2).sqrt();
    if delta.is_nan() || delta > 1.0 {
        return None;
    }
    if delta == 0.0 {
        return Some(f64::INFINITY);
    }
    let a = delta.powf(-0.5);
    let b = delta.sqrt();
    let cp = (a + b).powi(2) / 4.0;
    let cm = (a - b).powi(2) / 4.0;
    let xlogx = |c: f64| if c > 0.0 { c * c.log2() } else { 0.0 };
    Some(xlogx(cp) - xlogx(cm))
}

/// Relative tolerance on the C/D auto-variances for [`eof_for_state`].
pub const SYMMETRY_TOL: f64 = 0.01;

/// [`eof_symmetric`] on a simulated state, after checking that beams C and D
/// have matching auto-variances.
pub fn eof_for_state(cov: &CovarianceModel, combo1: &CorrelationCombo, combo2: &CorrelationCombo) -> Result<Option<f64>> {
    let basis = cov.basis();
    let (c0, c1) = basis.beam_pair(Beam::C)?;
    let (d0, d1) = basis.beam_pair(Beam::D)?;
    let m = cov.matrix();
    for (i, j) in [(c0, d0), (c1, d1)] {
        let (vc, vd) = (m[(i, i)], m[(j, j)]);
        if (vc - vd).abs() > SYMMETRY_TOL * vc.max(vd) {
            return Err(Error::NotApplicable(format!(
                "state is not symmetric: auto-variances {vc} and {vd} differ by more than 1%"
            )));
        }
    }
    let report = nonseparability_product(cov, combo1, combo2)?;
    Ok(eof_symmetric(report.combo_variances[0], report.combo_variances[1]))
}
