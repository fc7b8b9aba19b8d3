//! Scenario evaluation shared by `run`, `sweep`, `oracle` and `verify`.

use polent::criteria::{asq_difference, closed_form_gain, opt_combo, opt_perp_combo, optimize_gain, sq_sum, CorrelationCombo};
use polent::entangle::{
    apply_detection, entangling_bs_map, optimized_direction_map, optimized_output_covariance, output_covariance,
    symmetrised_source, BeamSplitterSpec, DetectionImperfections,
};
use polent::gaussian::{CovarianceModel, LinearMap};
use polent::stokes::PolSqueezedSource;
use serde::Serialize;

use crate::config::{GainConfig, GainStrategy, Resolved};
use crate::error::HarnessResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComboValue {
    pub gain: f64,
    pub variance: f64,
}

/// Output covariance in one measurement basis and its two witness combinations.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub cov: CovarianceModel,
    pub first: ComboValue,
    pub second: ComboValue,
}

impl BasisEval {
    pub fn product_root(&self) -> f64 {
        (self.first.variance * self.second.variance).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Setup {
    pub a: PolSqueezedSource,
    pub b: PolSqueezedSource,
    pub splitter: BeamSplitterSpec,
    pub detection: DetectionImperfections,
    pub gain: GainStrategy,
    pub fixed_gain: f64,
}

impl Setup {
    pub fn new(r: &Resolved, gain: &GainConfig) -> Self {
        Self {
            a: r.a,
            b: r.b,
            splitter: r.splitter,
            detection: r.detection,
            gain: gain.strategy,
            fixed_gain: gain.value,
        }
    }

    fn detect(&self, cov: CovarianceModel) -> HarnessResult<CovarianceModel> {
        if self.detection.is_ideal() {
            Ok(cov)
        } else {
            Ok(apply_detection(&cov, &self.detection)?)
        }
    }

    /// `k` from the closed-form expression, evaluated on the averaged source.
    pub fn paper_gain(&self) -> HarnessResult<f64> {
        let s = symmetrised_source(&self.a, &self.b);
        Ok(closed_form_gain(self.splitter.t(), self.splitter.r(), s.v_sq(), s.v_asq())?)
    }

    fn evaluate(&self, cov: &CovarianceModel, template: CorrelationCombo, formula: Option<f64>) -> HarnessResult<ComboValue> {
        let gain = match self.gain {
            GainStrategy::Fixed => self.fixed_gain,
            GainStrategy::PaperFormula => formula.unwrap_or(1.0),
            GainStrategy::BruteForce => {
                let opt = optimize_gain(cov, &template)?;
                return Ok(ComboValue {
                    gain: opt.g_opt,
                    variance: opt.v_min,
                });
            }
        };
        Ok(ComboValue {
            gain,
            variance: template.with_gain(gain)?.normalized_variance(cov)?,
        })
    }

    /// Sum along the squeezed direction and difference along the anti-squeezed one.
    /// The closed-form gain is stated for the optimised directions only, so
    /// the `paper_formula` strategy uses unit gain here.
    pub fn sq_basis(&self) -> HarnessResult<BasisEval> {
        let cov = self.detect(output_covariance(&self.a, &self.b, &self.splitter)?)?;
        let first = self.evaluate(&cov, sq_sum(), None)?;
        let second = self.evaluate(&cov, asq_difference(), None)?;
        Ok(BasisEval { cov, first, second })
    }

    /// The `k` and `l` combinations along the optimised directions.
    pub fn opt_basis(&self) -> HarnessResult<BasisEval> {
        let cov = self.detect(optimized_output_covariance(&self.a, &self.b, &self.splitter)?)?;
        let formula = match self.gain {
            GainStrategy::PaperFormula => Some(self.paper_gain()?),
            _ => None,
        };
        let first = self.evaluate(&cov, opt_combo(), formula)?;
        let second = self.evaluate(&cov, opt_perp_combo(), formula)?;
        Ok(BasisEval { cov, first, second })
    }
}

/// Ideal-detection maps from the input basis, with the combos they feed, for
/// Monte Carlo cross-checks. Gains follow `setup`'s strategy.
pub fn tracked_combos(setup: &Setup) -> HarnessResult<Vec<(String, LinearMap, Vec<f64>)>> {
    let ideal = Setup {
        detection: DetectionImperfections::ideal(),
        ..*setup
    };
    let sq = ideal.sq_basis()?;
    let opt = ideal.opt_basis()?;
    let sq_map = entangling_bs_map(&setup.splitter)?;
    let opt_map = optimized_direction_map(&setup.splitter)?;
    let mut out = Vec::new();
    for (combo, value, cov, map) in [
        (sq_sum(), sq.first, &sq.cov, &sq_map),
        (asq_difference(), sq.second, &sq.cov, &sq_map),
        (opt_combo(), opt.first, &opt.cov, &opt_map),
        (opt_perp_combo(), opt.second, &opt.cov, &opt_map),
    ] {
        let c = combo.with_gain(value.gain)?;
        out.push((c.label(), map.clone(), c.weights(cov)?));
    }
    Ok(out)
}
