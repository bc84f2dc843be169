//! CSV ingestion, preprocessing replay and model persistence.
//!
//! A fitted model is saved as a JSON [`ModelArtifact`] holding the
//! converged parameters together with the full preprocessing recipe
//! (column selection, optional pairwise interaction expansion, the
//! standardization transform and the intercept flag), so prediction can
//! apply bit-identical transforms to new rows. Floats survive the JSON
//! round trip exactly: serialization uses shortest-roundtrip formatting and
//! parsing is full-precision.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, PriorSpec, Standardization};
use crate::error::VbError;

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

/// Errors from CSV ingestion.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("non-binary response '{value}' on line {line}")]
    NonBinaryResponse { line: usize, value: String },

    #[error("constant predictor column '{0}' cannot be standardized")]
    ConstantPredictor(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Model(#[from] VbError),
}

/// How raw CSV columns are turned into a design matrix. Stored in the
/// artifact so prediction replays the identical pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Preprocess {
    pub response_column: String,
    /// Non-response columns used, in file order.
    pub raw_columns: Vec<String>,
    /// Append products of all distinct column pairs before standardizing.
    pub pairwise_interactions: bool,
    pub add_intercept: bool,
    /// Fitted transform for the (expanded) non-intercept columns.
    pub standardization: Option<Standardization>,
}

/// Options for [`ingest_csv`].
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub response_column: String,
    pub standardize: bool,
    pub add_intercept: bool,
    pub pairwise_interactions: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            response_column: "y".into(),
            standardize: true,
            add_intercept: true,
            pairwise_interactions: false,
        }
    }
}

/// A parsed dataset together with its preprocessing recipe.
#[derive(Debug, Clone)]
pub struct IngestedData {
    pub dataset: Dataset,
    pub preprocess: Preprocess,
}

fn read_raw_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>, usize), IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() {
        return Err(IngestError::Empty("no header row".into()));
    }
    let mut rows = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let record = record?;
        let line = ri + 2; // 1-based, after the header
        if record.len() != headers.len() {
            return Err(IngestError::Parse {
                line,
                msg: format!("expected {} fields, got {}", headers.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        for (ci, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| IngestError::Parse {
                line,
                msg: format!("column '{}': cannot parse '{}'", headers[ci], field),
            })?;
            if !v.is_finite() {
                return Err(IngestError::Parse {
                    line,
                    msg: format!("column '{}': non-finite value", headers[ci]),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IngestError::Empty("no data rows".into()));
    }
    let n = rows.len();
    Ok((headers, rows, n))
}

/// Expand raw predictor rows with all distinct pairwise products.
fn expand_interactions(names: &mut Vec<String>, rows: &mut [Vec<f64>]) {
    let base = names.len();
    for a in 0..base {
        for b in (a + 1)..base {
            names.push(format!("{}:{}", names[a], names[b]));
        }
    }
    for row in rows.iter_mut() {
        for a in 0..base {
            for b in (a + 1)..base {
                row.push(row[a] * row[b]);
            }
        }
    }
}

/// Read a header-ed CSV with a binary response column into a [`Dataset`].
///
/// Standardization maps every non-intercept column to mean 0 and standard
/// deviation 0.5 and records the per-column transform; the intercept is
/// prepended afterwards; interaction expansion happens before either.
pub fn ingest_csv(path: impl AsRef<Path>, opts: &IngestOptions) -> Result<IngestedData, IngestError> {
    let (headers, rows, n) = read_raw_csv(path.as_ref())?;
    let resp_idx = headers
        .iter()
        .position(|h| *h == opts.response_column)
        .ok_or_else(|| IngestError::MissingColumn(opts.response_column.clone()))?;

    let mut y = Vec::with_capacity(n);
    for (ri, row) in rows.iter().enumerate() {
        let v = row[resp_idx];
        if v == 0.0 {
            y.push(0u8);
        } else if v == 1.0 {
            y.push(1u8);
        } else {
            return Err(IngestError::NonBinaryResponse {
                line: ri + 2,
                value: format!("{v}"),
            });
        }
    }

    let mut raw_columns: Vec<String> = Vec::new();
    let mut pred_rows: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (ci, name) in headers.iter().enumerate() {
        if ci == resp_idx {
            continue;
        }
        raw_columns.push(name.clone());
        for (ri, row) in rows.iter().enumerate() {
            pred_rows[ri].push(row[ci]);
        }
    }
    if raw_columns.is_empty() && !opts.add_intercept {
        return Err(IngestError::Empty("no predictor columns".into()));
    }

    let mut expanded_names = raw_columns.clone();
    if opts.pairwise_interactions {
        expand_interactions(&mut expanded_names, &mut pred_rows);
    }

    let standardization = if opts.standardize {
        let k = expanded_names.len();
        let mut transforms = Vec::with_capacity(k);
        for j in 0..k {
            let mean = pred_rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let sd = (pred_rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64)
                .sqrt();
            if sd == 0.0 {
                return Err(IngestError::ConstantPredictor(expanded_names[j].clone()));
            }
            let scale = 0.5 / sd;
            transforms.push((mean, scale));
            for row in pred_rows.iter_mut() {
                row[j] = (row[j] - mean) * scale;
            }
        }
        Some(Standardization {
            intercept: opts.add_intercept,
            transforms,
        })
    } else {
        None
    };

    let offset = usize::from(opts.add_intercept);
    let p = expanded_names.len() + offset;
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        if opts.add_intercept {
            x[(i, 0)] = 1.0;
        }
        for j in 0..expanded_names.len() {
            x[(i, j + offset)] = pred_rows[i][j];
        }
    }

    let mut dataset = Dataset::new(x, y)?;
    if let Some(s) = &standardization {
        dataset = dataset.with_standardization(s.clone());
    }

    Ok(IngestedData {
        dataset,
        preprocess: Preprocess {
            response_column: opts.response_column.clone(),
            raw_columns,
            pairwise_interactions: opts.pairwise_interactions,
            add_intercept: opts.add_intercept,
            standardization,
        },
    })
}

/// Apply a stored preprocessing recipe to new rows: select the training
/// columns by name, expand interactions, replay the standardization and
/// prepend the intercept. The response column may be absent; when present
/// it is returned alongside the design rows.
pub fn apply_preprocess(
    path: impl AsRef<Path>,
    pre: &Preprocess,
) -> Result<(DMatrix<f64>, Option<Vec<u8>>), IngestError> {
    let (headers, rows, n) = read_raw_csv(path.as_ref())?;

    let y = match headers.iter().position(|h| *h == pre.response_column) {
        Some(resp_idx) => {
            let mut y = Vec::with_capacity(n);
            for (ri, row) in rows.iter().enumerate() {
                let v = row[resp_idx];
                if v == 0.0 {
                    y.push(0u8);
                } else if v == 1.0 {
                    y.push(1u8);
                } else {
                    return Err(IngestError::NonBinaryResponse {
                        line: ri + 2,
                        value: format!("{v}"),
                    });
                }
            }
            Some(y)
        }
        None => None,
    };

    let mut col_idx = Vec::with_capacity(pre.raw_columns.len());
    for name in &pre.raw_columns {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.clone()))?;
        col_idx.push(idx);
    }

    let mut pred_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| col_idx.iter().map(|&c| row[c]).collect())
        .collect();
    let mut names = pre.raw_columns.clone();
    if pre.pairwise_interactions {
        expand_interactions(&mut names, &mut pred_rows);
    }

    let offset = usize::from(pre.add_intercept);
    let p = names.len() + offset;
    let mut x = DMatrix::zeros(n, p);
    for (i, row) in pred_rows.iter().enumerate() {
        if pre.add_intercept {
            x[(i, 0)] = 1.0;
        }
        let transformed = match &pre.standardization {
            Some(s) => s.apply_row(row)?,
            None => row.clone(),
        };
        for (j, v) in transformed.iter().enumerate() {
            x[(i, j + offset)] = *v;
        }
    }
    Ok((x, y))
}

/// Write a dataset back to CSV with full-precision floats (shortest
/// round-trip formatting, so re-ingestion reproduces identical bits).
pub fn write_dataset_csv(
    path: impl AsRef<Path>,
    data: &Dataset,
    feature_names: &[String],
    response_name: &str,
) -> Result<(), IngestError> {
    if feature_names.len() != data.p() {
        return Err(IngestError::Model(VbError::dims(format!(
            "{} feature names for p = {}",
            feature_names.len(),
            data.p()
        ))));
    }
    let mut out = String::new();
    out.push_str(response_name);
    for name in feature_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..data.n() {
        out.push_str(&format!("{}", data.y()[i]));
        for j in 0..data.p() {
            out.push_str(&format!(",{}", data.x()[(i, j)]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Converged parameters by method.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelParams {
    Mf {
        beta_bar: Vec<f64>,
        z_bar: Vec<f64>,
    },
    Pfm {
        mu_star: Vec<f64>,
        sigma_star: Vec<f64>,
        z_bar_star: Vec<f64>,
    },
    Gibbs {
        mean: Vec<f64>,
        sd: Vec<f64>,
        /// Retained draws, row-major `draws × p`.
        draws: Vec<Vec<f64>>,
    },
}

impl ModelParams {
    pub fn method_name(&self) -> &'static str {
        match self {
            ModelParams::Mf { .. } => "mf",
            ModelParams::Pfm { .. } => "pfm",
            ModelParams::Gibbs { .. } => "gibbs",
        }
    }
}

/// Everything needed to reload and use a fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub method: String,
    pub prior: PriorSpec,
    pub preprocess: Preprocess,
    pub n: usize,
    pub p: usize,
    pub params: ModelParams,
    /// Log-posterior (MF) or ELBO (PFM) trace; empty for Gibbs.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub timing_ms: f64,
    /// Seed used by stochastic fits; None for the deterministic ones.
    pub seed: Option<u64>,
}

pub fn save_artifact(path: impl AsRef<Path>, artifact: &ModelArtifact) -> Result<(), IngestError> {
    let json = serde_json::to_string_pretty(artifact)
        .map_err(|e| IngestError::Parse { line: 0, msg: e.to_string() })?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_artifact(path: impl AsRef<Path>) -> Result<ModelArtifact, IngestError> {
    let raw = fs::read_to_string(path)?;
    let artifact: ModelArtifact =
        serde_json::from_str(&raw).map_err(|e| IngestError::Parse { line: 0, msg: e.to_string() })?;
    if artifact.schema_version != ARTIFACT_SCHEMA_VERSION {
        return Err(IngestError::Parse {
            line: 0,
            msg: format!(
                "artifact schema version {} is not supported (expected {})",
                artifact.schema_version, ARTIFACT_SCHEMA_VERSION
            ),
        });
    }
    Ok(artifact)
}

/// Rebuild the vector form used by the fitters from stored parameters.
pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
