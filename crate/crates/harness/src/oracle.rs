//! Independent checks: truncated-Fock commutators and coherent-state noise,
//! plus Monte Carlo sampling of every tracked combination.

use num_complex::Complex64;
use polent::fock::{build_stokes_matrices, coherent_dark_plane_variance, TruncatedTwoModeSpace};
use polent::gaussian::mc_validate;
use polent::entangle::input_covariance;
use polent::stokes::DarkPlaneAngle;

use crate::config::LoadedConfig;
use crate::error::HarnessResult;
use crate::model::{tracked_combos, Setup};
use crate::table::{Metadata, Provenance, ResultRow, ResultTable};

pub const COMMUTATOR_TOL: f64 = 1e-12;
pub const COHERENT_TOL: f64 = 0.01;
pub const Z_LIMIT: f64 = 4.0;
pub const MC_REL_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraResidual {
    pub commutator: f64,
    pub s0_commutator: f64,
    pub hermiticity: f64,
}

impl AlgebraResidual {
    pub fn worst(&self) -> f64 {
        self.commutator.max(self.s0_commutator).max(self.hermiticity)
    }
}

/// Largest residual of the SU(2) relations on the protected subspace.
pub fn algebra_residual(n_max: usize) -> HarnessResult<AlgebraResidual> {
    let s = build_stokes_matrices(TruncatedTwoModeSpace::new(n_max)?);
    let mut commutator = 0.0f64;
    for (k, l, m) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
        commutator = commutator.max(s.commutator_residual(k, l, m)?);
    }
    let mut s0_commutator = 0.0f64;
    for k in 1..=3 {
        s0_commutator = s0_commutator.max(s.s0_commutator_residual(k)?);
    }
    Ok(AlgebraResidual {
        commutator,
        s0_commutator,
        hermiticity: s.hermiticity_residual(),
    })
}

/// Dark-plane variance of a circular coherent state in units of `|<S3>|`.
pub fn coherent_normalized_variance(mean_photons: f64, n_max: usize) -> HarnessResult<f64> {
    let s = build_stokes_matrices(TruncatedTwoModeSpace::new(n_max)?);
    let v = coherent_dark_plane_variance(Complex64::new(mean_photons.sqrt(), 0.0), DarkPlaneAngle::default(), &s)?;
    Ok(v.normalized()?)
}

/// Runs every oracle; returns the table and the names of failed checks.
pub fn run_oracles(loaded: &LoadedConfig) -> HarnessResult<(ResultTable, Vec<String>)> {
    let cfg = &loaded.config;
    let mc = cfg.mc()?;
    let mut meta = Metadata::new("oracle", &loaded.sha256);
    meta.seed = Some(mc.seed());
    let mut table = ResultTable::new(meta);
    let mut failed = Vec::new();
    let p = Provenance::Derived;

    for n_max in [3, 8] {
        let r = algebra_residual(n_max)?;
        table.push(ResultRow::scalar(format!("commutator residual n_max={n_max}"), r.commutator, p));
        table.push(ResultRow::scalar(format!("S0 commutator residual n_max={n_max}"), r.s0_commutator, p));
        table.push(ResultRow::scalar(format!("hermiticity residual n_max={n_max}"), r.hermiticity, p));
        if r.worst() > COMMUTATOR_TOL {
            failed.push(format!("Stokes algebra at n_max={n_max}: residual {:e}", r.worst()));
        }
    }

    let v = coherent_normalized_variance(2.0, 16)?;
    table.push(ResultRow::variance("coherent dark-plane variance |alpha|^2=2 n_max=16", v, p));
    if (v - 1.0).abs() > COHERENT_TOL {
        failed.push(format!("coherent variance {v} is not within 1% of shot noise"));
    }

    let r = cfg.resolve()?;
    let setup = Setup::new(&r, &cfg.gain);
    let cov = input_covariance(&r.a, &r.b);
    for (label, map, weights) in tracked_combos(&setup)? {
        let rep = mc_validate(&cov, &map, &weights, mc)?;
        table.push(ResultRow::variance(format!("analytic {label}"), rep.analytic, p));
        table.push(ResultRow::variance(format!("Monte Carlo {label}"), rep.empirical, p));
        table.push(ResultRow::scalar(format!("z-score {label}"), rep.z_score, p));
        if rep.z_score.abs() >= Z_LIMIT || rep.relative_error() > MC_REL_TOL {
            failed.push(format!(
                "Monte Carlo {label}: empirical {} vs analytic {} (z = {:.2})",
                rep.empirical, rep.analytic, rep.z_score
            ));
        }
    }
    Ok((table, failed))
}
