//! One-parameter sweeps. Grid points are evaluated in parallel when the
//! `parallel` feature is on; rows are always assembled in grid order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use polent::stokes::PolSqueezedSource;

use crate::config::{GainStrategy, LoadedConfig};
use crate::error::{HarnessError, HarnessResult};
use crate::model::Setup;
use crate::table::{Metadata, Provenance, ResultRow, ResultTable};

pub const AXES: [&str; 6] = ["t", "v_asq", "angle_error", "efficiency", "visibility", "gain"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Splitter transmittance.
    T,
    /// Anti-squeezed variance of both sources, linear units.
    VAsq,
    /// Wave-plate misset on both beams, degrees.
    AngleError,
    /// Detection efficiency of both beams.
    Efficiency,
    Visibility,
    /// Fixed electronic gain for every combination.
    Gain,
}

impl SweepAxis {
    pub fn parse(s: &str) -> HarnessResult<Self> {
        Ok(match s {
            "t" => Self::T,
            "v_asq" => Self::VAsq,
            "angle_error" => Self::AngleError,
            "efficiency" => Self::Efficiency,
            "visibility" => Self::Visibility,
            "gain" => Self::Gain,
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown sweep axis `{other}` (expected one of {})",
                    AXES.join(", ")
                )))
            }
        })
    }

    /// `base` with this axis set to `x`.
    pub fn apply(self, base: &Setup, x: f64) -> HarnessResult<Setup> {
        let mut s = *base;
        match self {
            Self::T => {
                s.splitter = polent::entangle::BeamSplitterSpec::new(x)?.with_relative_phase(base.splitter.relative_phase())
            }
            Self::VAsq => {
                let with = |src: &PolSqueezedSource| {
                    PolSqueezedSource::new(src.v_sq(), x, src.theta_sq(), src.s3_mean())
                };
                s.a = with(&base.a)?;
                s.b = with(&base.b)?;
            }
            Self::AngleError => {
                s.detection.angle_error_c = x.to_radians();
                s.detection.angle_error_d = x.to_radians();
            }
            Self::Efficiency => {
                s.detection.efficiency_c = x;
                s.detection.efficiency_d = x;
            }
            Self::Visibility => s.detection.visibility = x,
            Self::Gain => {
                s.gain = GainStrategy::Fixed;
                s.fixed_gain = x;
            }
        }
        s.detection.validate()?;
        Ok(s)
    }
}

/// Rows for one grid point: both correlations in each basis, their gains
/// and the two witness products.
pub fn point_rows(setup: &Setup, x: f64) -> HarnessResult<Vec<ResultRow>> {
    let sq = setup.sq_basis()?;
    let opt = setup.opt_basis()?;
    let p = Provenance::ModelExtension;
    Ok(vec![
        ResultRow::variance("sum correlation (sq)", sq.first.variance, p).at(x),
        ResultRow::variance("difference correlation (asq)", sq.second.variance, p).at(x),
        ResultRow::variance("opt correlation (k)", opt.first.variance, p).at(x),
        ResultRow::variance("opt-perp correlation (l)", opt.second.variance, p).at(x),
        ResultRow::scalar("product (sq pairing)", sq.product_root(), p).at(x),
        ResultRow::scalar("product (opt pairing)", opt.product_root(), p).at(x),
        ResultRow::scalar("gain g (sq sum)", sq.first.gain, p).at(x),
        ResultRow::scalar("gain k (opt)", opt.first.gain, p).at(x),
    ])
}

fn evaluate_grid<F>(grid: &[f64], f: F) -> Vec<HarnessResult<Vec<ResultRow>>>
where
    F: Fn(f64) -> HarnessResult<Vec<ResultRow>> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        grid.par_iter().map(|&x| f(x)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(|&x| f(x)).collect()
    }
}

pub fn run_sweep(loaded: &LoadedConfig, axis: &str, grid: &[f64]) -> HarnessResult<ResultTable> {
    let parsed = SweepAxis::parse(axis)?;
    if grid.is_empty() {
        return Err(HarnessError::Config("sweep grid is empty".into()));
    }
    let cfg = &loaded.config;
    let base = Setup::new(&cfg.resolve()?, &cfg.gain);
    let mut meta = Metadata::new("sweep", &loaded.sha256);
    meta.axis = Some(axis.to_string());
    let mut table = ResultTable::new(meta);
    for rows in evaluate_grid(grid, |x| point_rows(&parsed.apply(&base, x)?, x)) {
        table.rows.extend(rows?);
    }
    Ok(table)
}
