//! JSON file formats.
//!
//! Density matrices: `{"dimA": m, "dimB": n, "re": [...], "im": [...]}`
//! with `(mn)²` row-major entries in each array. Stiefel points:
//! `{"N": N, "r": r, "re": [...], "im": [...]}` with `N·r` row-major
//! entries. `im` may be omitted for real matrices.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use sepstat_core::ensembles::StiefelPoint;
use sepstat_core::{ComplexMatrix, DensityMatrix, Error as CoreError, C64};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityMatrixJson {
    #[serde(rename = "dimA")]
    pub dim_a: usize,
    #[serde(rename = "dimB")]
    pub dim_b: usize,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StiefelPointJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub r: usize,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

fn split(m: &ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    m.as_slice().iter().map(|c| (c.re, c.im)).unzip()
}

fn assemble(rows: usize, cols: usize, re: &[f64], im: Option<&[f64]>) -> Option<ComplexMatrix> {
    let len = rows.checked_mul(cols)?;
    if re.len() != len || im.is_some_and(|v| v.len() != len) {
        return None;
    }
    let data = (0..len)
        .map(|k| C64::new(re[k], im.map_or(0.0, |v| v[k])))
        .collect();
    ComplexMatrix::from_vec(rows, cols, data).ok()
}

impl DensityMatrixJson {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let (re, im) = split(rho.matrix());
        Self {
            dim_a: rho.dim_a(),
            dim_b: rho.dim_b(),
            re,
            im: Some(im),
        }
    }

    /// Validates shape and the density-matrix conditions.
    pub fn to_state(&self) -> std::result::Result<DensityMatrix, CoreError> {
        let d = self.dim_a.checked_mul(self.dim_b).unwrap_or(0);
        let m = assemble(d, d, &self.re, self.im.as_deref()).ok_or_else(|| {
            CoreError::InvalidDensityMatrix(format!(
                "expected {} entries per array for dimA = {}, dimB = {}",
                d * d,
                self.dim_a,
                self.dim_b
            ))
        })?;
        DensityMatrix::new(self.dim_a, self.dim_b, m)
    }
}

impl StiefelPointJson {
    pub fn from_point(z: &StiefelPoint) -> Self {
        let (re, im) = split(z.matrix());
        Self {
            n: z.len(),
            r: z.rank(),
            re,
            im: Some(im),
        }
    }

    pub fn to_point(&self) -> std::result::Result<StiefelPoint, CoreError> {
        let m = assemble(self.n, self.r, &self.re, self.im.as_deref()).ok_or_else(|| {
            CoreError::InvalidParameter(format!(
                "expected {} entries per array for N = {}, r = {}",
                self.n * self.r,
                self.n,
                self.r
            ))
        })?;
        StiefelPoint::new(m)
    }
}

pub fn parse_density_matrix(text: &str) -> std::result::Result<DensityMatrix, CoreError> {
    let raw: DensityMatrixJson = serde_json::from_str(text)
        .map_err(|e| CoreError::InvalidDensityMatrix(format!("malformed JSON: {e}")))?;
    raw.to_state()
}

pub fn read_density_matrix(path: &Path) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_density_matrix(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn write_density_matrix(path: &Path, rho: &DensityMatrix) -> Result<()> {
    let text = serde_json::to_string_pretty(&DensityMatrixJson::from_state(rho))
        .expect("plain data serialises");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn parse_stiefel_point(text: &str) -> std::result::Result<StiefelPoint, CoreError> {
    let raw: StiefelPointJson = serde_json::from_str(text)
        .map_err(|e| CoreError::InvalidParameter(format!("malformed JSON: {e}")))?;
    raw.to_point()
}
