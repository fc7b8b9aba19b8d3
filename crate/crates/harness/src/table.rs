//! Result tables and their CSV/JSON serialisation.
//!
//! CSV layout (frozen):
//!
//! ```text
//! # tool_version=<semver>
//! # scenario=<name>
//! # config_sha256=<hex>
//! # seed=<u64 or empty>
//! # axis=<sweep axis or empty>
//! quantity,x,linear,db,db_unit,provenance,reference
//! ```
//!
//! Floats use the shortest representation that round-trips; dBm readings use
//! two decimals. Empty cells mean "not applicable".

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use polent::metrology::{dbm_to_mw, lin_to_db};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_HEADER: [&str; 7] = ["quantity", "x", "linear", "db", "db_unit", "provenance", "reference"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PaperReproduction,
    Derived,
    ModelExtension,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PaperReproduction => "paper-reproduction",
            Self::Derived => "derived",
            Self::ModelExtension => "model-extension",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DbUnit {
    #[serde(rename = "dB")]
    Db,
    #[serde(rename = "dBm")]
    Dbm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub quantity: String,
    pub x: Option<f64>,
    pub linear: f64,
    pub db: Option<f64>,
    pub db_unit: Option<DbUnit>,
    pub provenance: Provenance,
    /// Reported experimental value this row is compared with, if any.
    pub reference: String,
}

impl ResultRow {
    /// A variance in shot-noise units; the dB column is filled when positive.
    pub fn variance(quantity: impl Into<String>, linear: f64, provenance: Provenance) -> Self {
        let db = lin_to_db(linear).ok();
        Self {
            quantity: quantity.into(),
            x: None,
            linear,
            db,
            db_unit: db.map(|_| DbUnit::Db),
            provenance,
            reference: String::new(),
        }
    }

    /// A dimensionless or non-power quantity (ratio, angle, gain, ebits).
    pub fn scalar(quantity: impl Into<String>, value: f64, provenance: Provenance) -> Self {
        Self {
            quantity: quantity.into(),
            x: None,
            linear: value,
            db: None,
            db_unit: None,
            provenance,
            reference: String::new(),
        }
    }

    /// An analyser reading: milliwatts in the linear column, dBm alongside.
    pub fn reading(quantity: impl Into<String>, dbm: f64, provenance: Provenance) -> Self {
        Self {
            quantity: quantity.into(),
            x: None,
            linear: dbm_to_mw(dbm),
            db: Some(dbm),
            db_unit: Some(DbUnit::Dbm),
            provenance,
            reference: String::new(),
        }
    }

    pub fn at(mut self, x: f64) -> Self {
        self.x = Some(x);
        self
    }

    pub fn reference(mut self, r: impl Into<String>) -> Self {
        self.reference = r.into();
        self
    }

    fn csv_record(&self) -> [String; 7] {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let db = match (self.db, self.db_unit) {
            (Some(d), Some(DbUnit::Dbm)) => format!("{d:.2}"),
            (d, _) => opt(d),
        };
        let unit = match self.db_unit {
            Some(DbUnit::Db) => "dB",
            Some(DbUnit::Dbm) => "dBm",
            None => "",
        };
        [
            self.quantity.clone(),
            opt(self.x),
            fmt_f64(self.linear),
            db,
            unit.into(),
            self.provenance.as_str().into(),
            self.reference.clone(),
        ]
    }
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    pub scenario: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub axis: Option<String>,
}

impl Metadata {
    pub fn new(scenario: impl Into<String>, config_sha256: impl Into<String>) -> Self {
        Self {
            tool_version: TOOL_VERSION.into(),
            scenario: scenario.into(),
            config_sha256: config_sha256.into(),
            seed: None,
            axis: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(metadata: Metadata) -> Self {
        Self {
            metadata,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn find(&self, quantity: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    pub fn to_csv(&self) -> HarnessResult<String> {
        let m = &self.metadata;
        let mut out = Vec::new();
        writeln!(out, "# tool_version={}", m.tool_version).ok();
        writeln!(out, "# scenario={}", m.scenario).ok();
        writeln!(out, "# config_sha256={}", m.config_sha256).ok();
        writeln!(out, "# seed={}", m.seed.map(|s| s.to_string()).unwrap_or_default()).ok();
        writeln!(out, "# axis={}", m.axis.clone().unwrap_or_default()).ok();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            let fail = |e: csv::Error| HarnessError::Format(format!("csv: {e}"));
            w.write_record(CSV_HEADER).map_err(fail)?;
            for row in &self.rows {
                w.write_record(row.csv_record()).map_err(fail)?;
            }
            w.flush().map_err(|e| HarnessError::Format(format!("csv: {e}")))?;
        }
        String::from_utf8(out).map_err(|e| HarnessError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> HarnessResult<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| HarnessError::Format(format!("json: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> HarnessResult<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Format(format!("json: {e}")))
    }

    /// Writes `<stem>.csv` and `<stem>.json` under `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> HarnessResult<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&csv_path, self.to_csv()?).map_err(|e| HarnessError::io(&csv_path, e))?;
        fs::write(&json_path, self.to_json()?).map_err(|e| HarnessError::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new(Metadata::new("unit", "abc"));
        t.push(ResultRow::variance("sum correlation (sq)", 0.38915, Provenance::PaperReproduction).reference("0.39"));
        t.push(ResultRow::scalar("gain g", 1.0, Provenance::Derived));
        t.push(ResultRow::reading("electronic floor", -85.5, Provenance::PaperReproduction));
        t.push(ResultRow::variance("x, with comma", 0.1, Provenance::ModelExtension).at(0.25));
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], format!("# tool_version={TOOL_VERSION}"));
        assert_eq!(lines[3], "# seed=");
        assert_eq!(lines[5], "quantity,x,linear,db,db_unit,provenance,reference");
        assert!(lines[6].starts_with("sum correlation (sq),,0.38915,-4.09"), "{}", lines[6]);
        assert_eq!(lines[7], "gain g,,1,,,derived,");
        assert!(lines[8].ends_with(",-85.50,dBm,paper-reproduction,"), "{}", lines[8]);
        assert!(lines[9].starts_with("\"x, with comma\",0.25,0.1,-10,dB,model-extension"), "{}", lines[9]);
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let back = ResultTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn shortest_floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-7, 92.2571, -4.0999999999999996] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }
}
