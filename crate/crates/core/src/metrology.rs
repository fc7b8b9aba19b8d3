//! Spectrum-analyser arithmetic: dB conversions, electronic-noise
//! subtraction and the ±dB error-bar convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `10 log10(v)`.
pub fn lin_to_db(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("cannot express {v} in dB")));
    }
    Ok(10.0 * v.log10())
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_lin(dbm)
}

/// A single spectrum-analyser reading. Bandwidths and frequency are metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReading {
    pub dbm: f64,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub frequency_hz: f64,
}

impl PowerReading {
    pub fn new(dbm: f64, rbw_hz: f64, vbw_hz: f64, frequency_hz: f64) -> Result<Self> {
        if !(rbw_hz > 0.0 && vbw_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bandwidths must be positive, got RBW {rbw_hz} Hz, VBW {vbw_hz} Hz"
            )));
        }
        Ok(Self {
            dbm,
            rbw_hz,
            vbw_hz,
            frequency_hz,
        })
    }

    pub fn with_dbm(self, dbm: f64) -> Self {
        Self { dbm, ..self }
    }

    pub fn milliwatts(&self) -> f64 {
        dbm_to_mw(self.dbm)
    }
}

/// Which traces the electronic floor is removed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorCorrection {
    /// Subtract from both signal and shot reference.
    #[default]
    Both,
    /// Subtract from the signal only; the shot trace is used as recorded.
    SignalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedTrace {
    pub signal: PowerReading,
    pub shot_reference: PowerReading,
    /// Use `f64::NEG_INFINITY` dBm to disable the correction.
    pub electronic_floor: PowerReading,
}

/// Shot-noise-normalised variance after removing the electronic floor:
/// `(P_sig - P_el) / (P_shot - P_el)` in linear power.
pub fn subtract_electronic_noise(trace: &CalibratedTrace, mode: FloorCorrection) -> Result<f64> {
    let floor = trace.electronic_floor.dbm;
    for (name, r) in [("signal", trace.signal), ("shot reference", trace.shot_reference)] {
        if !(r.dbm > floor) {
            return Err(Error::CorrectionUndefined(format!(
                "{name} at {:.2} dBm is not above the electronic floor at {floor:.2} dBm",
                r.dbm
            )));
        }
    }
    let p_el = trace.electronic_floor.milliwatts();
    let sig = trace.signal.milliwatts() - p_el;
    let shot = match mode {
        FloorCorrection::Both => trace.shot_reference.milliwatts() - p_el,
        FloorCorrection::SignalOnly => trace.shot_reference.milliwatts(),
    };
    Ok(sig / shot)
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A symmetric ±`sigma_db` band around `v`, mapped to linear units.
pub fn error_bar_propagation(v: f64, sigma_db: f64) -> Result<Interval> {
    if !(sigma_db >= 0.0) {
        return Err(Error::InvalidArgument(format!("dB uncertainty must be non-negative, got {sigma_db}")));
    }
    Ok(Interval {
        lo: v * db_to_lin(-sigma_db),
        hi: v * db_to_lin(sigma_db),
    })
}
