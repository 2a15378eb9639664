//! Symmetric matrices as headerless CSV.

use std::path::Path;

use entcov_core::SymMatrix;

use crate::{CliError, Result};

/// Relative tolerance for the symmetry check on input matrices.
pub const CSV_SYMMETRY_TOL: f64 = 1e-9;

#[allow(clippy::needless_range_loop)]
pub fn parse_matrix_csv(text: &str) -> Result<SymMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("row {}: {e}", r + 1)))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    CliError::Input(format!("row {}, column {}: not a finite number: {f:?}", r + 1, c + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let m = rows.len();
    if m == 0 {
        return Err(CliError::Input("matrix is empty".into()));
    }
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != m) {
        return Err(CliError::Input(format!(
            "matrix must be square: row {} has {} entries, expected {m}",
            r + 1,
            row.len()
        )));
    }
    let scale = rows.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    for i in 0..m {
        for j in i + 1..m {
            let gap = (rows[i][j] - rows[j][i]).abs();
            if gap > CSV_SYMMETRY_TOL * scale {
                return Err(CliError::Input(format!("matrix is not symmetric at ({}, {}): gap {gap:e}", i + 1, j + 1)));
            }
        }
    }
    Ok(SymMatrix::from_upper_fn(m, |i, j| if i == j { rows[i][i] } else { 0.5 * (rows[i][j] + rows[j][i]) }))
}

pub fn read_matrix_csv(path: &Path) -> Result<SymMatrix> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_matrix_csv(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Full square matrix, shortest round-trip formatting.
pub fn format_matrix_csv(x: &SymMatrix) -> String {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in x.to_rows() {
        writer.write_record(row.iter().map(|v| v.to_string())).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}
