//! Matrix file formats.
//!
//! JSON: `{"n": int, "re": [[...]], "im": [[...]]}` with `im` optional on
//! input (zero when absent). Writers always emit both parts. Readers
//! validate Hermiticity and symmetrize.
//!
//! CSV: headerless, real-only, one row per line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &HermitianMatrix) -> Self {
        Self { n: m.n(), re: m.re_rows(), im: Some(m.im_rows()) }
    }

    pub fn to_matrix(&self) -> Result<HermitianMatrix> {
        if self.re.len() != self.n {
            return Err(Error::Dimension(format!(
                "matrix declares n = {} but `re` has {} rows",
                self.n,
                self.re.len()
            )));
        }
        HermitianMatrix::from_parts(&self.re, self.im.as_deref())
    }
}

pub fn parse_matrix_json(text: &str) -> Result<HermitianMatrix> {
    let json: MatrixJson = serde_json::from_str(text)?;
    json.to_matrix()
}

pub fn matrix_to_json(m: &HermitianMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from_matrix(m)).expect("matrix JSON is serializable")
}

pub fn parse_matrix_csv(text: &str) -> Result<HermitianMatrix> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                cell.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("line {}: cannot parse '{cell}': {e}", line_no + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix CSV".into()));
    }
    HermitianMatrix::from_real_rows(&rows)
}

/// Reads a matrix as JSON when the text starts with `{`, otherwise as CSV.
pub fn parse_matrix_auto(text: &str) -> Result<HermitianMatrix> {
    if text.trim_start().starts_with('{') {
        parse_matrix_json(text)
    } else {
        parse_matrix_csv(text)
    }
}
