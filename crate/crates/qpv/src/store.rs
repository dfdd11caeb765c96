//! Append-only JSON-lines store of attack strategies.
//!
//! Matrices are stored as arrays of rows of `[re, im]` pairs. Every record
//! is re-verified when the store is opened.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use qpv_core::errmodel::{error_report, ErrorReport};
use qpv_core::exact::{sum_of_squares, ResidualSystem, SearchMode, VERIFY_DDC, VERIFY_P_ERR};
use qpv_core::qcore::{output_states, AttackStrategy, ComplexMatrix, ProtocolSpec, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Unitarity tolerance applied on load.
pub const STORE_UNITARITY_TOL: f64 = 1e-8;
/// Allowed gap between a stored objective and its recomputation.
pub const STORE_OBJECTIVE_TOL: f64 = 1e-10;

pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_literal(m: &ComplexMatrix) -> MatrixLiteral {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_literal(lit: &MatrixLiteral) -> Result<ComplexMatrix, String> {
    let rows = lit.len();
    let cols = lit.first().map_or(0, Vec::len);
    if rows == 0 || lit.iter().any(|r| r.len() != cols) {
        return Err("ragged or empty matrix".into());
    }
    let data = lit.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    ComplexMatrix::from_vec(rows, cols, data).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    /// Exact attack from the least-squares search.
    Exact,
    /// Best strategy of an error-probability minimization.
    Approx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub id: String,
    pub kind: RecordKind,
    pub d: usize,
    /// Single-angle protocol angle in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_label: Option<String>,
    /// `θ = nπ/k` when the angle is rational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    /// Number of bases of a multi-basis protocol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bases: Option<usize>,
    pub mode: String,
    /// Residual sum of squares (exact records).
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    pub p_err: f64,
    /// `U_1, …, U_{n−1}`.
    #[serde(rename = "U")]
    pub u: Vec<MatrixLiteral>,
    #[serde(rename = "V")]
    pub v: MatrixLiteral,
    pub seed: u64,
    pub config_hash: String,
    pub timestamp: u64,
}

impl SolutionRecord {
    /// Content hash over everything but `id` and `timestamp`.
    pub fn content_id(&self) -> String {
        let mut c = self.clone();
        c.id.clear();
        c.timestamp = 0;
        let body = serde_json::to_string(&c).expect("record serializes");
        hex::encode(&Sha256::digest(body.as_bytes())[..8])
    }

    /// Fills `id` from the content.
    pub fn with_id(mut self) -> Self {
        self.id = self.content_id();
        self
    }

    pub fn protocol(&self) -> Result<ProtocolSpec, String> {
        match (self.theta, self.bases) {
            (Some(t), None) => ProtocolSpec::single(t).map_err(|e| e.to_string()),
            (None, Some(n)) => ProtocolSpec::multibase(n).map_err(|e| e.to_string()),
            _ => Err("record must give exactly one of theta and bases".into()),
        }
    }

    pub fn matrices(&self) -> Result<(Vec<ComplexMatrix>, ComplexMatrix), String> {
        let us = self.u.iter().map(matrix_from_literal).collect::<Result<Vec<_>, _>>()?;
        Ok((us, matrix_from_literal(&self.v)?))
    }
}

/// Outcome of re-verifying one record.
#[derive(Clone, Debug, Serialize)]
pub struct RecordCheck {
    pub id: String,
    pub unitarity: f64,
    pub p_err: f64,
    pub worst_ddc: f64,
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    pub violations: Vec<String>,
}

impl RecordCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn recompute(record: &SolutionRecord) -> Result<(f64, ErrorReport, Option<f64>), String> {
    let protocol = record.protocol()?;
    let (us, v) = record.matrices()?;
    let d = record.d;
    if v.rows() != 2 * d || !v.is_square() || us.len() != protocol.n_free_unitaries() {
        return Err(format!("shape: expected V {0}x{0} and {1} U of size {d}", 2 * d, protocol.n_free_unitaries()));
    }
    if us.iter().any(|u| u.rows() != d || !u.is_square()) {
        return Err(format!("shape: every U must be {d}x{d}"));
    }
    let unitarity = us.iter().chain([&v]).fold(0.0f64, |m, x| m.max(x.unitarity_deviation()));
    let strategy = AttackStrategy::from_matrices(us.clone(), v.clone(), f64::INFINITY).map_err(|e| e.to_string())?;
    let rep = error_report(&output_states(&strategy, &protocol).map_err(|e| e.to_string())?);
    let f = match (record.kind, record.theta) {
        (RecordKind::Exact, Some(theta)) => {
            let mode = match record.mode.as_str() {
                "real" => SearchMode::Real,
                "complex" => SearchMode::Complex,
                m => return Err(format!("unknown mode {m:?}")),
            };
            let sys = ResidualSystem::new(d, theta, mode).map_err(|e| e.to_string())?;
            let x = sys.pack(&us[0], &v).map_err(|e| e.to_string())?;
            Some(sum_of_squares(&sys, &x).map_err(|e| e.to_string())?)
        }
        _ => None,
    };
    Ok((unitarity, rep, f))
}

/// Recomputes unitarity, the error probability, the DDC and (for exact
/// records) the residual, listing every violated invariant.
pub fn verify_record(record: &SolutionRecord) -> RecordCheck {
    let mut check = RecordCheck {
        id: record.id.clone(),
        unitarity: f64::NAN,
        p_err: f64::NAN,
        worst_ddc: f64::NAN,
        f: None,
        violations: Vec::new(),
    };
    let (unitarity, rep, f) = match recompute(record) {
        Ok(x) => x,
        Err(e) => {
            check.violations.push(e);
            return check;
        }
    };
    check.unitarity = unitarity;
    check.p_err = rep.p_err;
    check.worst_ddc = rep.worst_ddc;
    check.f = f;
    let v = &mut check.violations;
    if !(unitarity <= STORE_UNITARITY_TOL) {
        v.push(format!("unitarity: deviation {unitarity:.3e} exceeds {STORE_UNITARITY_TOL:e}"));
    }
    if !((rep.p_err - record.p_err).abs() <= STORE_OBJECTIVE_TOL) {
        v.push(format!("p_err: stored {:.6e}, recomputed {:.6e}", record.p_err, rep.p_err));
    }
    if record.kind == RecordKind::Exact {
        if !(rep.worst_ddc <= VERIFY_DDC) {
            v.push(format!("DDC: worst |amp0*amp1| {:.3e} exceeds {VERIFY_DDC:e}", rep.worst_ddc));
        }
        if !(rep.p_err < VERIFY_P_ERR) {
            v.push(format!("exactness: p_err {:.3e} not below {VERIFY_P_ERR:e}", rep.p_err));
        }
        match (record.f, f) {
            (Some(stored), Some(new)) if (stored - new).abs() <= STORE_OBJECTIVE_TOL => {}
            (stored, new) => v.push(format!("F: stored {stored:?}, recomputed {new:?}")),
        }
    }
    check
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("store {path} line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("store record {id} failed verification: {}", violations.join("; "))]
    Invalid { id: String, violations: Vec<String> },
}

/// Reads every record without verifying.
pub fn read_records(path: &Path) -> Result<Vec<SolutionRecord>, StoreError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug)]
pub struct SolutionStore {
    path: PathBuf,
    records: Vec<SolutionRecord>,
}

impl SolutionStore {
    /// Opens (or starts) a store, failing on the first record that does
    /// not re-verify.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let records = read_records(&path)?;
        for r in &records {
            let check = verify_record(r);
            if !check.passed() {
                return Err(StoreError::Invalid {
                    id: r.id.clone(),
                    violations: check.violations,
                });
            }
        }
        Ok(Self { path, records })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[SolutionRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&SolutionRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Appends one line. The record must verify.
    pub fn append(&mut self, record: SolutionRecord) -> Result<(), StoreError> {
        let check = verify_record(&record);
        if !check.passed() {
            return Err(StoreError::Invalid {
                id: record.id,
                violations: check.violations,
            });
        }
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(f, "{line}").map_err(io)?;
        self.records.push(record);
        Ok(())
    }
}
