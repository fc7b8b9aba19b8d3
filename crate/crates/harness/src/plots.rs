//! Plot data: one two-column text file per series.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, HarnessResult};
use crate::table::{fmt_f64, ResultTable};

/// File-name-safe form of a series label.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for ch in label.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// Writes `<slug>.dat` for every quantity that carries an `x` value, in order
/// of first appearance. Returns the written paths.
pub fn emit_plots(table: &ResultTable, outdir: &Path) -> HarnessResult<Vec<PathBuf>> {
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in &table.rows {
        let Some(x) = row.x else { continue };
        match series.iter_mut().find(|(q, _)| *q == row.quantity) {
            Some((_, pts)) => pts.push((x, row.linear)),
            None => series.push((row.quantity.clone(), vec![(x, row.linear)])),
        }
    }
    if series.is_empty() {
        return Err(HarnessError::Format("results contain no swept rows to plot".into()));
    }
    fs::create_dir_all(outdir).map_err(|e| HarnessError::io(outdir, e))?;
    let axis = table.metadata.axis.clone().unwrap_or_else(|| "x".into());
    let mut paths = Vec::new();
    for (label, pts) in series {
        let path = outdir.join(format!("{}.dat", slug(&label)));
        let mut text = format!("# series: {label}\n# {axis} linear\n");
        for (x, y) in pts {
            text.push_str(&format!("{} {}\n", fmt_f64(x), fmt_f64(y)));
        }
        fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn emit_plots_from_file(results: &Path, outdir: &Path) -> HarnessResult<Vec<PathBuf>> {
    let text = fs::read_to_string(results).map_err(|e| HarnessError::io(results, e))?;
    emit_plots(&ResultTable::from_json(&text)?, outdir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("sum correlation (sq)"), "sum_correlation_sq");
        assert_eq!(slug("opt-perp correlation (l)"), "opt_perp_correlation_l");
    }
}
