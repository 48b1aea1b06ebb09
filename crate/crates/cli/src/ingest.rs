//! CSV ingestion with per-column stationarity transforms.

use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use bvar_core::varcore::VarDataset;

use crate::error::{CliError, CliResult};

/// Per-column transform. The differencing family (diff/logdiff/pct) shortens
/// the series by one; when any column differences, every column drops its
/// first row so the panel stays aligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    None,
    Diff,
    Log,
    LogDiff,
    Pct,
}

impl Transform {
    fn shortens(self) -> bool {
        matches!(self, Transform::Diff | Transform::LogDiff | Transform::Pct)
    }
}

impl FromStr for Transform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" => Ok(Transform::None),
            "diff" => Ok(Transform::Diff),
            "log" => Ok(Transform::Log),
            "logdiff" => Ok(Transform::LogDiff),
            "pct" => Ok(Transform::Pct),
            other => Err(format!(
                "unknown transform `{other}` (expected none|diff|log|logdiff|pct)"
            )),
        }
    }
}

/// Either one transform for every column, or a comma list with one entry per
/// data column.
#[derive(Debug, Clone)]
pub struct TransformSpec {
    parsed: Vec<Transform>,
}

impl TransformSpec {
    pub fn parse(spec: &str) -> CliResult<Self> {
        let parsed: Result<Vec<Transform>, String> =
            spec.split(',').map(Transform::from_str).collect();
        Ok(TransformSpec {
            parsed: parsed.map_err(CliError::Config)?,
        })
    }

    fn for_columns(&self, m: usize) -> CliResult<Vec<Transform>> {
        if self.parsed.len() == 1 {
            return Ok(vec![self.parsed[0]; m]);
        }
        if self.parsed.len() != m {
            return Err(CliError::config(format!(
                "transform list has {} entries for {m} data columns",
                self.parsed.len()
            )));
        }
        Ok(self.parsed.clone())
    }
}

impl Default for TransformSpec {
    fn default() -> Self {
        TransformSpec {
            parsed: vec![Transform::None],
        }
    }
}

/// Read a rectangular numeric CSV (header row required) into a dataset,
/// applying the transforms. An optional date column, named, is carried only
/// as labels and excluded from the numeric panel. Error coordinates are
/// 1-based data rows and 1-based file columns.
pub fn ingest_csv(
    path: &Path,
    transforms: &TransformSpec,
    date_column: Option<&str>,
) -> CliResult<VarDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(CliError::config(format!(
            "{}: empty header row",
            path.display()
        )));
    }
    let date_idx = match date_column {
        None => None,
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| {
                    CliError::config(format!("date column `{name}` not found in header"))
                })?,
        ),
    };
    let n_cols = headers.len();
    let data_cols: Vec<usize> = (0..n_cols).filter(|c| Some(*c) != date_idx).collect();
    if data_cols.is_empty() {
        return Err(CliError::config("no numeric columns after removing the date column"));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); data_cols.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record =
            record.map_err(|e| CliError::config(format!("{}: row {row}: {e}", path.display())))?;
        if record.len() != n_cols {
            let col = record.len() + 1;
            return Err(CliError::config(format!(
                "row {row}, column {col}: expected {n_cols} cells, found {}",
                record.len()
            )));
        }
        for (slot, &c) in data_cols.iter().enumerate() {
            let cell = record.get(c).unwrap_or("").trim();
            if cell.is_empty() {
                return Err(CliError::config(format!(
                    "row {row}, column {}: empty cell",
                    c + 1
                )));
            }
            let value: f64 = cell.parse().map_err(|_| {
                CliError::config(format!(
                    "row {row}, column {}: `{cell}` is not numeric",
                    c + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::config(format!(
                    "row {row}, column {}: non-finite value",
                    c + 1
                )));
            }
            columns[slot].push(value);
        }
    }
    let t_raw = columns[0].len();
    if t_raw < 2 {
        return Err(CliError::config(format!(
            "{}: need at least 2 data rows, found {t_raw}",
            path.display()
        )));
    }

    let per_column = transforms.for_columns(columns.len())?;
    let any_shortens = per_column.iter().any(|t| t.shortens());
    let t_out = if any_shortens { t_raw - 1 } else { t_raw };
    let mut out = DMatrix::zeros(t_out, columns.len());
    for (slot, (&c, transform)) in data_cols.iter().zip(&per_column).enumerate() {
        let file_col = c + 1;
        let raw = &columns[slot];
        let transformed: Vec<f64> = match transform {
            Transform::None => raw.clone(),
            Transform::Log => raw
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if v <= 0.0 {
                        Err(CliError::config(format!(
                            "row {}, column {file_col}: log transform needs positive values, got {v}",
                            i + 1
                        )))
                    } else {
                        Ok(v.ln())
                    }
                })
                .collect::<CliResult<_>>()?,
            Transform::Diff => raw.windows(2).map(|w| w[1] - w[0]).collect(),
            Transform::LogDiff => raw
                .windows(2)
                .enumerate()
                .map(|(i, w)| {
                    if w[0] <= 0.0 || w[1] <= 0.0 {
                        Err(CliError::config(format!(
                            "row {}, column {file_col}: logdiff transform needs positive values",
                            i + 1
                        )))
                    } else {
                        Ok(w[1].ln() - w[0].ln())
                    }
                })
                .collect::<CliResult<_>>()?,
            Transform::Pct => raw
                .windows(2)
                .enumerate()
                .map(|(i, w)| {
                    if w[0] == 0.0 {
                        Err(CliError::config(format!(
                            "row {}, column {file_col}: pct transform divides by zero",
                            i + 1
                        )))
                    } else {
                        Ok((w[1] - w[0]) / w[0])
                    }
                })
                .collect::<CliResult<_>>()?,
        };
        // align: level-preserving columns drop their first row when any
        // column differenced
        let offset = transformed.len() - t_out;
        for (r, &v) in transformed[offset..].iter().enumerate() {
            out[(r, slot)] = v;
        }
    }
    let names: Vec<String> = data_cols.iter().map(|&c| headers[c].clone()).collect();
    VarDataset::new(out, names, None).map_err(|e| CliError::config(e.to_string()))
}
