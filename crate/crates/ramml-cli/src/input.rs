//! CSV ingestion with located error reporting.

use std::path::Path;

use ramml::{Matrix, RegressionData};

/// Failure classes mapped to distinct exit codes by the front end.
#[derive(Debug)]
pub enum InputError {
    FileNotFound(String),
    Parse(String),
    NonNumeric(String),
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InputError::FileNotFound(msg) | InputError::Parse(msg) | InputError::NonNumeric(msg) => {
                write!(f, "{msg}")
            }
        }
    }
}

pub struct Dataset {
    pub data: RegressionData,
    pub predictors: Vec<String>,
}

/// Reads a headered CSV and assembles the regression dataset. Selected
/// cells must be numeric and present; violations are reported with their
/// row and column.
pub fn read_csv(
    path: &Path,
    response: &str,
    predictors: Option<&[String]>,
) -> Result<Dataset, InputError> {
    if !path.exists() {
        return Err(InputError::FileNotFound(format!(
            "input file not found: {}",
            path.display()
        )));
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| InputError::Parse(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| InputError::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();

    let find = |name: &str| -> Result<usize, InputError> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            InputError::Parse(format!(
                "{}: column `{name}` not found (available: {})",
                path.display(),
                headers.join(", ")
            ))
        })
    };

    let y_idx = find(response)?;
    let x_idx: Vec<usize> = match predictors {
        Some(names) => names
            .iter()
            .map(|n| find(n))
            .collect::<Result<Vec<_>, _>>()?,
        None => (0..headers.len()).filter(|&i| i != y_idx).collect(),
    };
    if x_idx.is_empty() {
        return Err(InputError::Parse(format!(
            "{}: need at least one predictor column",
            path.display()
        )));
    }

    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            InputError::Parse(format!("{}: data row {}: {e}", path.display(), line + 1))
        })?;
        let numeric = |idx: usize| -> Result<f64, InputError> {
            let cell = record.get(idx).unwrap_or("");
            cell.trim().parse::<f64>().map_err(|_| {
                InputError::NonNumeric(format!(
                    "{}: data row {}, column `{}`: non-numeric cell `{cell}`",
                    path.display(),
                    line + 1,
                    headers[idx]
                ))
            })
        };
        y.push(numeric(y_idx)?);
        let mut row = Vec::with_capacity(x_idx.len());
        for &idx in &x_idx {
            row.push(numeric(idx)?);
        }
        rows.push(row);
    }

    let x = Matrix::from_rows(&rows)
        .map_err(|e| InputError::Parse(format!("{}: {e}", path.display())))?;
    let data = RegressionData::new(y, x)
        .map_err(|e| InputError::Parse(format!("{}: {e}", path.display())))?;
    Ok(Dataset {
        data,
        predictors: x_idx.iter().map(|&i| headers[i].clone()).collect(),
    })
}
