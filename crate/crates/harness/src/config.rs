//! Versioned TOML experiment configuration.
//!
//! Parsing is strict: unknown keys are rejected, and every source gives each
//! variance either in linear shot-noise units (`v_sq`, `v_asq`) or in dB
//! (`v_sq_db`, `v_asq_db`), never both.

use std::path::{Path, PathBuf};

use polent::entangle::{infer_splitting_from_asq_correlation, BeamSplitterSpec, DetectionImperfections};
use polent::gaussian::MCConfig;
use polent::metrology::{CalibratedTrace, FloorCorrection, PowerReading};
use polent::stokes::{DarkPlaneAngle, PolSqueezedSource};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, HarnessResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    CharacterizeSqueezing,
    EntangleSqBasis,
    EntangleOptBasis,
    Witnesses,
    Sweep,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CharacterizeSqueezing => "characterize_squeezing",
            Self::EntangleSqBasis => "entangle_sq_basis",
            Self::EntangleOptBasis => "entangle_opt_basis",
            Self::Witnesses => "witnesses",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub v_sq: Option<f64>,
    pub v_sq_db: Option<f64>,
    pub v_asq: Option<f64>,
    pub v_asq_db: Option<f64>,
    #[serde(default)]
    pub theta_sq_deg: f64,
    #[serde(default = "one")]
    pub s3_mean: f64,
}

fn one() -> f64 {
    1.0
}

fn pick(field: &str, lin: Option<f64>, db: Option<f64>) -> HarnessResult<f64> {
    match (lin, db) {
        (Some(v), None) => Ok(v),
        (None, Some(d)) => Ok(10f64.powf(d / 10.0)),
        (Some(_), Some(_)) => Err(HarnessError::Config(format!(
            "{field} and {field}_db are mutually exclusive"
        ))),
        (None, None) => Err(HarnessError::Config(format!("one of {field} or {field}_db is required"))),
    }
}

impl SourceConfig {
    pub fn resolve(&self, name: &str) -> HarnessResult<PolSqueezedSource> {
        let v_sq = pick(&format!("{name}.v_sq"), self.v_sq, self.v_sq_db)?;
        let v_asq = pick(&format!("{name}.v_asq"), self.v_asq, self.v_asq_db)?;
        PolSqueezedSource::new(v_sq, v_asq, DarkPlaneAngle::from_degrees(self.theta_sq_deg), self.s3_mean)
            .map_err(|e| HarnessError::Config(format!("{name}: {e}")))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterConfig {
    /// Intensity transmittance.
    pub t: Option<f64>,
    /// Infer `t` from a measured anti-squeezed difference correlation instead.
    pub infer_from_asq_difference: Option<f64>,
    pub relative_phase_deg: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    #[serde(default = "one")]
    pub efficiency_c: f64,
    #[serde(default = "one")]
    pub efficiency_d: f64,
    #[serde(default = "one")]
    pub visibility: f64,
    #[serde(default)]
    pub angle_error_c_deg: f64,
    #[serde(default)]
    pub angle_error_d_deg: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            efficiency_c: 1.0,
            efficiency_d: 1.0,
            visibility: 1.0,
            angle_error_c_deg: 0.0,
            angle_error_d_deg: 0.0,
        }
    }
}

impl DetectionConfig {
    pub fn resolve(&self) -> HarnessResult<DetectionImperfections> {
        let imp = DetectionImperfections {
            efficiency_c: self.efficiency_c,
            efficiency_d: self.efficiency_d,
            visibility: self.visibility,
            angle_error_c: self.angle_error_c_deg.to_radians(),
            angle_error_d: self.angle_error_d_deg.to_radians(),
        };
        imp.validate().map_err(|e| HarnessError::Config(format!("detection: {e}")))?;
        Ok(imp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainStrategy {
    #[default]
    Fixed,
    PaperFormula,
    BruteForce,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainConfig {
    #[serde(default)]
    pub strategy: GainStrategy,
    /// Used by the `fixed` strategy.
    #[serde(default = "one")]
    pub value: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            strategy: GainStrategy::Fixed,
            value: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    1_000_000
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredPair {
    pub v1: f64,
    pub v2: f64,
    #[serde(default)]
    pub reference: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    #[serde(default)]
    pub pairs: Vec<MeasuredPair>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronicNoiseConfig {
    pub signal_dbm: f64,
    pub shot_dbm: f64,
    pub floor_dbm: f64,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub correction: FloorCorrection,
    #[serde(default)]
    pub reference: String,
}

impl ElectronicNoiseConfig {
    pub fn trace(&self) -> HarnessResult<CalibratedTrace> {
        let r = |dbm| {
            PowerReading::new(dbm, self.rbw_hz, self.vbw_hz, self.frequency_hz)
                .map_err(|e| HarnessError::Config(format!("electronic_noise: {e}")))
        };
        Ok(CalibratedTrace {
            signal: r(self.signal_dbm)?,
            shot_reference: r(self.shot_dbm)?,
            electronic_floor: r(self.floor_dbm)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: String,
    pub grid: GridSpec,
}

/// Either an explicit list or `{ start, stop, points }` (inclusive, evenly spaced).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }

    /// `start:stop:points` or a comma-separated list.
    pub fn parse(s: &str) -> HarnessResult<Self> {
        let bad = |what: &str| HarnessError::Config(format!("grid `{s}`: {what}"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            let start = parts[0].trim().parse().map_err(|_| bad("bad start"))?;
            let stop = parts[1].trim().parse().map_err(|_| bad("bad stop"))?;
            let points = parts[2].trim().parse().map_err(|_| bad("bad point count"))?;
            return Ok(Self::Range { start, stop, points });
        }
        if parts.len() != 1 {
            return Err(bad("expected start:stop:points or a comma-separated list"));
        }
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad(&format!("`{p}` is not a number"))))
            .collect::<HarnessResult<Vec<f64>>>()
            .map(Self::List)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_stem")]
    pub stem: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_stem() -> String {
    "results".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            stem: default_stem(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: ScenarioKind,
    pub source_a: SourceConfig,
    pub source_b: SourceConfig,
    #[serde(default)]
    pub splitter: SplitterConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub gain: GainConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub witnesses: WitnessConfig,
    pub electronic_noise: Option<ElectronicNoiseConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A parsed configuration plus the SHA-256 of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

/// Physical inputs resolved from a configuration.
#[derive(Debug, Clone, Copy)]
pub struct Resolved {
    pub a: PolSqueezedSource,
    pub b: PolSqueezedSource,
    pub splitter: BeamSplitterSpec,
    pub detection: DetectionImperfections,
    /// Set when `t` was inferred rather than given.
    pub inferred_from: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> HarnessResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn resolve(&self) -> HarnessResult<Resolved> {
        let a = self.source_a.resolve("source_a")?;
        let b = self.source_b.resolve("source_b")?;
        let (t, inferred_from) = match (self.splitter.t, self.splitter.infer_from_asq_difference) {
            (Some(t), None) => (t, None),
            (None, None) => (0.5, None),
            (None, Some(m)) => {
                let s = infer_splitting_from_asq_correlation(m, &a, &b)
                    .map_err(|e| HarnessError::Config(format!("splitter.infer_from_asq_difference: {e}")))?;
                (s.t, Some(m))
            }
            (Some(_), Some(_)) => {
                return Err(HarnessError::Config(
                    "splitter.t and splitter.infer_from_asq_difference are mutually exclusive".into(),
                ))
            }
        };
        let mut splitter = BeamSplitterSpec::new(t).map_err(|e| HarnessError::Config(format!("splitter.t: {e}")))?;
        if let Some(p) = self.splitter.relative_phase_deg {
            splitter = splitter.with_relative_phase(p.to_radians());
        }
        Ok(Resolved {
            a,
            b,
            splitter,
            detection: self.detection.resolve()?,
            inferred_from,
        })
    }

    pub fn mc(&self) -> HarnessResult<MCConfig> {
        MCConfig::new(self.monte_carlo.samples, self.monte_carlo.seed)
            .map_err(|e| HarnessError::Config(format!("monte_carlo: {e}")))
    }
}

pub fn load(path: &Path) -> HarnessResult<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let config = ExperimentConfig::from_toml(&text).map_err(|e| match e {
        HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(LoadedConfig {
        config,
        sha256: sha256_hex(text.as_bytes()),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
