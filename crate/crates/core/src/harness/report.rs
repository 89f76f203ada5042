use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError};
use crate::oracle::{HitReport, ViolationReport};

/// Exact CSV header of the error table.
pub const CSV_HEADER: &str = "N,replication,j,probe_index,error,scaled_error,seed";

/// One error measurement. `probe_index = -1` marks the 1D Hausdorff error,
/// which also carries `scaled_error = N * error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub replication: usize,
    pub j: usize,
    pub probe_index: i64,
    pub error: f64,
    pub scaled_error: Option<f64>,
    pub seed: u64,
}

/// Quantiles of the errors at one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub scaled_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub residual: f64,
    /// `N` values left out because their median error was zero.
    pub excluded: Vec<usize>,
    pub warning: bool,
}

/// Error quantiles across the N grid for one `(j, probe)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub j: usize,
    pub probe_index: i64,
    pub probe: Option<Vec<f64>>,
    pub cells: Vec<CellSummary>,
    pub fit: Option<RateFit>,
    /// Set when the fit could not be computed.
    pub fit_error: Option<String>,
}

impl SeriesSummary {
    pub fn medians(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.median).collect()
    }

    pub fn scaled_medians(&self) -> Option<Vec<f64>> {
        self.cells.iter().map(|c| c.scaled_median).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub j: usize,
    pub probe_index: usize,
    pub probe: Vec<f64>,
    pub radius: f64,
    pub report: HitReport,
}

/// Checks run on the diagnostic ensemble of `diagnostic_copies` copies.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub step1: Option<ViolationReport>,
    pub hits: Vec<HitRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub master_seed: u64,
    pub version: String,
    pub started_unix_ms: u128,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ErrorRow>,
    pub series: Vec<SeriesSummary>,
    pub diagnostics: Diagnostics,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Both,
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of no data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Least-squares slope of `log(error)` against `log(N)` with the residual sum
/// of squares. Zero errors are left out and flagged.
pub fn rate_fit(n_values: &[usize], errors: &[f64]) -> Result<RateFit, HarnessError> {
    if n_values.len() != errors.len() || n_values.len() < 3 {
        return Err(HarnessError::Invalid(format!(
            "rate fit needs at least 3 matching points, got {} N values and {} errors",
            n_values.len(),
            errors.len()
        )));
    }
    if errors.iter().any(|e| !(e.is_finite() && *e >= 0.0)) || n_values.contains(&0) {
        return Err(HarnessError::Invalid("rate fit needs positive N and nonnegative errors".into()));
    }
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&n, &e) in n_values.iter().zip(errors) {
        if e == 0.0 {
            excluded.push(n);
        } else {
            xs.push((n as f64).ln());
            ys.push(e.ln());
        }
    }
    if xs.len() < 2 {
        return Err(HarnessError::Invalid(format!(
            "rate fit left with {} positive errors after excluding zeros",
            xs.len()
        )));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        residual,
        warning: !excluded.is_empty(),
        excluded,
    })
}

/// Whether every entry is strictly below its predecessor.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes the error table to `path`.
pub fn write_csv(rows: &[ErrorRow], path: &Path) -> Result<(), HarnessError> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io_error(path, e))?;
    writer
        .write_record(CSV_HEADER.split(','))
        .map_err(|e| io_error(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| io_error(path, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))
}

pub fn write_json(report: &ConvergenceReport, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| io_error(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

pub fn read_json(path: &Path) -> Result<ConvergenceReport, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_error(path, e))
}

/// Writes `<dir>/<name>.csv` and/or `<dir>/<name>.json`; returns the paths.
pub fn emit_report(report: &ConvergenceReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        let path = dir.join(format!("{}.csv", report.config.name));
        write_csv(&report.rows, &path)?;
        written.push(path);
    }
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        let path = dir.join(format!("{}.json", report.config.name));
        write_json(report, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_laws_are_fitted_exactly() {
        let ns = [100, 1000, 10000];
        let fit = rate_fit(&ns, &ns.map(|n| 3.0 / n as f64)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12 && fit.residual < 1e-20);
        let fit = rate_fit(&ns, &ns.map(|n| 3.0 / (n as f64).sqrt())).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        let fit = rate_fit(&ns, &[0.2, 0.2, 0.2]).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn zero_medians_are_flagged() {
        let fit = rate_fit(&[10, 100, 1000], &[0.1, 0.01, 0.0]).unwrap();
        assert_eq!(fit.excluded, vec![1000]);
        assert!(fit.warning);
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(rate_fit(&[10, 100, 1000], &[0.1, 0.0, 0.0]).is_err());
        assert!(rate_fit(&[10, 100], &[0.1, 0.01]).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let data: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(quantile(&data, 0.5), 5.0);
        assert_eq!(quantile(&data, 0.1), 1.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0, 1.0]));
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_render_with_empty_scaled_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = [
            ErrorRow { n: 10, replication: 0, j: 1, probe_index: -1, error: 0.25, scaled_error: Some(2.5), seed: 7 },
            ErrorRow { n: 10, replication: 1, j: 1, probe_index: 0, error: 0.5, scaled_error: None, seed: 8 },
        ];
        write_csv(&rows, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n10,0,1,-1,0.25,2.5,7\n10,1,1,0,0.5,,8\n"));
    }
}
