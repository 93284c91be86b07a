//! Input files and output writers.

use crate::CliError;
use equilib_core::distinguish::MeasurementSet;
use equilib_core::models::ModelSpec;
use equilib_core::{ComplexMatrix, Hamiltonian, Spectrum, State};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e.to_string()))
}

pub fn parse_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(path.to_path_buf(), e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    matrix: ComplexMatrix,
}

/// A Hamiltonian file holds either `{"energies": [...], "multiplicities": [...]}`
/// or `{"matrix": {rows, cols, re, im}}`.
pub fn load_hamiltonian(path: &Path) -> Result<Hamiltonian, CliError> {
    let text = read(path)?;
    let parse_err = |e: serde_json::Error| CliError::Parse(path.to_path_buf(), e.to_string());
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    let h = if value.get("matrix").is_some() {
        let m: MatrixFile = serde_json::from_value(value).map_err(parse_err)?;
        Hamiltonian::from_matrix(&m.matrix)
    } else {
        let s: Spectrum = serde_json::from_value(value).map_err(parse_err)?;
        Hamiltonian::from_spectrum(&s)
    };
    h.map_err(|e| CliError::Input(path.to_path_buf(), e))
}

pub fn load_state(path: &Path) -> Result<State, CliError> {
    parse_json(path)
}

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix, CliError> {
    parse_json(path)
}

pub fn load_measurements(path: &Path) -> Result<MeasurementSet, CliError> {
    parse_json(path)
}

pub fn load_model(path: &Path) -> Result<ModelSpec, CliError> {
    parse_json(path)
}

pub fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    fs::write(&path, text + "\n").map_err(|e| CliError::Io(path.clone(), e.to_string()))?;
    Ok(path)
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Comma-separated table with a header row.
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n", width: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        fs::write(&path, &self.text).map_err(|e| CliError::Io(path.clone(), e.to_string()))?;
        Ok(path)
    }
}
