//! File formats: dataset CSV (`x1..xd,y` with header), a JSON metadata
//! sidecar carrying `M`, the dimension and (when generated synthetically)
//! the target description, and the fitted-model JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{CoefficientModel, Dataset, KernelParams};
use crate::solvers::{FitResult, SolverConfig};
use crate::synth::{NoiseSpec, TargetSpec};

pub const DATA_SCHEMA_VERSION: u32 = 1;
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Columns parsed from a dataset CSV; `y` is optional so prediction inputs
/// can reuse the same format.
#[derive(Debug, Clone)]
pub struct CsvData {
    pub x: Vec<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub d: usize,
}

/// Sidecar describing a dataset file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub schema_version: u32,
    pub m: usize,
    pub d: usize,
    #[serde(rename = "M")]
    pub m_bound: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Present when the data came from a known synthetic target; needed by
    /// the decomposition instrument.
    pub target: Option<TargetSpec>,
}

/// `data.csv` -> `data.meta.json`.
pub fn meta_path_for(csv_path: &Path) -> PathBuf {
    let mut p = csv_path.to_path_buf();
    p.set_extension("meta.json");
    p
}

pub fn write_dataset_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=data.d).map(|i| format!("x{i}")).collect();
    header.push("y".to_string());
    w.write_record(&header)?;
    for (xi, yi) in data.x.iter().zip(&data.y) {
        let mut rec: Vec<String> = xi.iter().map(|v| v.to_string()).collect();
        rec.push(yi.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a CSV with `x1..xd` columns and an optional trailing `y` column.
pub fn read_csv(path: &Path) -> Result<CsvData> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let has_y = cols.last() == Some(&"y");
    let d = if has_y { cols.len() - 1 } else { cols.len() };
    if d == 0 {
        return Err(Error::config("csv has no feature columns".to_string()));
    }
    for (i, c) in cols.iter().take(d).enumerate() {
        let expect = format!("x{}", i + 1);
        if *c != expect {
            return Err(Error::config(format!("unexpected column '{c}' (expected '{expect}')")));
        }
    }
    let mut x = Vec::new();
    let mut y = if has_y { Some(Vec::new()) } else { None };
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::config(format!("bad number '{s}': {e}")))
        };
        let mut row = Vec::with_capacity(d);
        for i in 0..d {
            row.push(parse(&rec[i])?);
        }
        x.push(row);
        if let Some(ys) = y.as_mut() {
            ys.push(parse(&rec[d])?);
        }
    }
    Ok(CsvData { x, y, d })
}

/// Assemble a validated dataset from CSV contents plus the output bound.
pub fn dataset_from_csv(csv: CsvData, m_bound: f64, validate_domain: bool) -> Result<Dataset> {
    let y = csv.y.ok_or_else(|| Error::config("csv has no y column".to_string()))?;
    if validate_domain {
        Dataset::new(csv.x, y, m_bound, csv.d)
    } else {
        Dataset::new_unvalidated_domain(csv.x, y, m_bound, csv.d)
    }
}

pub fn write_metadata(meta: &DatasetMetadata, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(meta)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<DatasetMetadata> {
    let s = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&s)?)
}

/// Serialized fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub sigma: f64,
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub q: f64,
    pub lambda: f64,
    pub solver: SolverConfig,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_residual: Option<f64>,
}

impl ModelFile {
    pub fn from_fit(
        params: KernelParams,
        centers: Vec<Vec<f64>>,
        fit: &FitResult,
        q: f64,
        lambda: f64,
        solver: SolverConfig,
    ) -> Self {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            sigma: params.sigma(),
            centers,
            coeffs: fit.coeffs.iter().cloned().collect(),
            q,
            lambda,
            solver,
            converged: fit.converged,
            iterations: fit.iterations,
            kkt_residual: fit.kkt_residual,
        }
    }

    pub fn to_model(&self) -> Result<CoefficientModel> {
        CoefficientModel::new(KernelParams::new(self.sigma)?, self.centers.clone(), self.coeffs.clone())
    }
}

pub fn write_model(model: &ModelFile, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(model)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let s = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&s)?)
}

/// Predictions CSV: input columns echoed, prediction appended.
pub fn write_predictions_csv(x: &[Vec<f64>], preds: &[f64], path: &Path) -> Result<()> {
    if x.len() != preds.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: preds.len() });
    }
    let d = x.first().map(|r| r.len()).unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("y_pred".to_string());
    w.write_record(&header)?;
    for (xi, p) in x.iter().zip(preds) {
        let mut rec: Vec<String> = xi.iter().map(|v| v.to_string()).collect();
        rec.push(p.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
