//! Bundle export: JSON metadata with base64 matrix payloads.
//!
//! A matrix is stored column-major as interleaved `(re, im)` pairs of
//! little-endian `f64`, then base64-encoded (standard alphabet, padded).

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use davies_lab::generators::{GeneratorBundle, StationarityReport};
use davies_lab::models::Model;
use davies_lab::CMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ENCODING: &str = "base64:f64le:complex:column_major";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixPayload {
    pub rows: usize,
    pub cols: usize,
    pub encoding: String,
    pub data: String,
}

pub fn encode_matrix(m: &CMatrix) -> MatrixPayload {
    let mut bytes = Vec::with_capacity(16 * m.len());
    for z in m.iter() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    MatrixPayload {
        rows: m.nrows(),
        cols: m.ncols(),
        encoding: ENCODING.into(),
        data: STANDARD.encode(bytes),
    }
}

pub fn decode_matrix(p: &MatrixPayload) -> Result<CMatrix, CliError> {
    if p.encoding != ENCODING {
        return Err(CliError::Config(format!("unknown matrix encoding {:?}", p.encoding)));
    }
    let bytes = STANDARD
        .decode(&p.data)
        .map_err(|e| CliError::Config(format!("bad base64 payload: {e}")))?;
    if bytes.len() != 16 * p.rows * p.cols {
        return Err(CliError::Config(format!(
            "payload holds {} bytes, expected {}",
            bytes.len(),
            16 * p.rows * p.cols
        )));
    }
    let vals: Vec<Complex64> = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(CMatrix::from_vec(p.rows, p.cols, vals))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Matrices {
    pub p: MatrixPayload,
    pub superoperator: MatrixPayload,
    pub dissipator: MatrixPayload,
    pub coherent_b: MatrixPayload,
    pub k_matrix: MatrixPayload,
    pub hamiltonian: MatrixPayload,
    pub jumps: Vec<MatrixPayload>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BundleExport {
    pub schema_version: u32,
    pub version: String,
    pub model_id: String,
    pub provenance: davies_lab::models::Provenance,
    pub shift: f64,
    pub kind: davies_lab::generators::GeneratorKind,
    pub path: davies_lab::generators::AssemblyPath,
    pub dim: usize,
    pub sigma: Option<f64>,
    pub weight: String,
    pub trace_defect: f64,
    pub stationarity: StationarityReport,
    /// Superoperators act on column-stacked `vec(T)`.
    pub vectorisation: String,
    pub matrices: Matrices,
}

pub fn export_bundle(model: &Model, bundle: &GeneratorBundle) -> BundleExport {
    BundleExport {
        schema_version: crate::config::SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").into(),
        model_id: model.id.clone(),
        provenance: model.provenance.clone(),
        shift: model.shift,
        kind: bundle.kind,
        path: bundle.path,
        dim: bundle.dim,
        sigma: bundle.sigma,
        weight: bundle.weight.label().to_string(),
        trace_defect: bundle.trace_defect,
        stationarity: bundle.stationarity(),
        vectorisation: "column_major".into(),
        matrices: Matrices {
            p: encode_matrix(&model.p),
            superoperator: encode_matrix(&bundle.superoperator),
            dissipator: encode_matrix(&bundle.dissipator),
            coherent_b: encode_matrix(&bundle.coherent_b),
            k_matrix: encode_matrix(&bundle.k_matrix),
            hamiltonian: encode_matrix(&bundle.hamiltonian),
            jumps: model.jumps.operators().iter().map(encode_matrix).collect(),
        },
    }
}
