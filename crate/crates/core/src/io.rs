//! Serialization of matrices, run artifacts and verification certificates.
//!
//! Matrices travel as JSON with one of three payload representations:
//! `complex` ([re, im] pairs), `butson` (exact integer exponents of a root
//! of unity) and `phase-sixths` (real phases in sixths of a turn). The two
//! exact representations round-trip losslessly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hadamard::ButsonMatrix;
use crate::tensor::Permutation;
use crate::{CMat, Error, RMat, Result, C64};

pub const MATRIX_FORMAT: &str = "chm2u.matrix/1";
pub const CERTIFICATE_FORMAT: &str = "chm2u.certificate/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Complex,
    Butson,
    PhaseSixths,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Representation::Complex => write!(f, "complex"),
            Representation::Butson => write!(f, "butson"),
            Representation::PhaseSixths => write!(f, "phase-sixths"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Payload {
    Integers(Vec<i64>),
    Reals(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MatrixFile {
    format: String,
    n: usize,
    representation: Representation,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<i64>,
    payload: Payload,
}

/// A matrix read back from disk, with whatever exact structure the file
/// carried.
#[derive(Clone, Debug)]
pub struct LoadedMatrix {
    pub matrix: CMat,
    pub representation: Representation,
    pub butson: Option<ButsonMatrix>,
    pub phases_sixths: Option<RMat>,
}

pub fn write_matrix_complex(path: &Path, matrix: &CMat) -> Result<()> {
    let n = square_order(matrix)?;
    let payload = Payload::Complex(
        matrix
            .row_iter()
            .flat_map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
            .collect(),
    );
    write_file(
        path,
        &MatrixFile {
            format: MATRIX_FORMAT.into(),
            n,
            representation: Representation::Complex,
            q: None,
            payload,
        },
    )
}

pub fn write_matrix_butson(path: &Path, butson: &ButsonMatrix) -> Result<()> {
    let exps = butson.exponents();
    let mut payload = Vec::with_capacity(exps.nrows() * exps.ncols());
    for r in 0..exps.nrows() {
        for c in 0..exps.ncols() {
            payload.push(exps[(r, c)]);
        }
    }
    write_file(
        path,
        &MatrixFile {
            format: MATRIX_FORMAT.into(),
            n: butson.order(),
            representation: Representation::Butson,
            q: Some(butson.q()),
            payload: Payload::Integers(payload),
        },
    )
}

/// Writes real phases in sixths of a turn (`entry = exp(iπ·v/3)`).
pub fn write_matrix_phases(path: &Path, phases: &RMat) -> Result<()> {
    let n = phases.nrows();
    if phases.ncols() != n {
        return Err(Error::ShapeMismatch {
            rows: phases.nrows(),
            cols: phases.ncols(),
            n,
        });
    }
    let mut payload = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            payload.push(phases[(r, c)]);
        }
    }
    write_file(
        path,
        &MatrixFile {
            format: MATRIX_FORMAT.into(),
            n,
            representation: Representation::PhaseSixths,
            q: None,
            payload: Payload::Reals(payload),
        },
    )
}

pub fn read_matrix(path: &Path) -> Result<LoadedMatrix> {
    let text = fs::read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text)?;
    if file.format != MATRIX_FORMAT {
        return Err(Error::MalformedHeader(format!(
            "unknown format {:?}",
            file.format
        )));
    }
    let n = file.n;
    if n == 0 {
        return Err(Error::MalformedHeader("order must be positive".into()));
    }
    match (file.representation, file.payload) {
        (Representation::Butson, Payload::Integers(values)) => {
            let q = file
                .q
                .ok_or_else(|| Error::MalformedHeader("butson representation requires q".into()))?;
            check_len(values.len(), n)?;
            let exps = nalgebra::DMatrix::from_row_slice(n, n, &values);
            let butson = ButsonMatrix::new(q, exps)?;
            Ok(LoadedMatrix {
                matrix: butson.realize::<f64>(),
                representation: Representation::Butson,
                butson: Some(butson),
                phases_sixths: None,
            })
        }
        (Representation::PhaseSixths, payload) => {
            let values = match payload {
                Payload::Reals(v) => v,
                Payload::Integers(v) => v.into_iter().map(|x| x as f64).collect(),
                Payload::Complex(_) => {
                    return Err(Error::MalformedHeader(
                        "phase-sixths payload must be real".into(),
                    ))
                }
            };
            check_len(values.len(), n)?;
            let phases = RMat::from_row_slice(n, n, &values);
            let sixth = std::f64::consts::PI / 3.0;
            let matrix = CMat::from_fn(n, n, |r, c| {
                let phi = phases[(r, c)] * sixth;
                C64::new(phi.cos(), phi.sin())
            });
            Ok(LoadedMatrix {
                matrix,
                representation: Representation::PhaseSixths,
                butson: None,
                phases_sixths: Some(phases),
            })
        }
        (Representation::Complex, payload) => {
            let values: Vec<[f64; 2]> = match payload {
                Payload::Complex(v) => v,
                Payload::Integers(v) => v.into_iter().map(|x| [x as f64, 0.0]).collect(),
                Payload::Reals(v) => v.into_iter().map(|x| [x, 0.0]).collect(),
            };
            check_len(values.len(), n)?;
            let matrix = CMat::from_fn(n, n, |r, c| {
                let [re, im] = values[r * n + c];
                C64::new(re, im)
            });
            if let Some((row, col)) = crate::first_non_finite(&matrix) {
                return Err(Error::NonFinite { row, col });
            }
            Ok(LoadedMatrix {
                matrix,
                representation: Representation::Complex,
                butson: None,
                phases_sixths: None,
            })
        }
        (repr, _) => Err(Error::MalformedHeader(format!(
            "payload does not match representation {repr}"
        ))),
    }
}

fn check_len(got: usize, n: usize) -> Result<()> {
    if got != n * n {
        return Err(Error::PayloadLength {
            expected: n * n,
            got,
        });
    }
    Ok(())
}

/// One verification check inside a certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub tolerance: f64,
    /// Worst numeric residual observed by the check.
    pub residual: f64,
    pub pass: bool,
    /// Integer-valued result, where the check produces one (defect).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

/// Verification certificate for one subject file. Certificates are
/// append-only: re-verifying a subject adds checks, never removes them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub format: String,
    pub subject: String,
    pub subject_sha256: String,
    pub checks: Vec<CheckRecord>,
    pub environment: Environment,
    pub timestamp_unix: u64,
}

impl Certificate {
    pub fn new(subject: String, subject_sha256: String, rng_seed: Option<u64>) -> Self {
        Self {
            format: CERTIFICATE_FORMAT.into(),
            subject,
            subject_sha256,
            checks: Vec::new(),
            environment: Environment {
                version: env!("CARGO_PKG_VERSION").into(),
                rng_seed,
            },
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn find(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().rev().find(|c| c.name == name)
    }
}

pub fn sha256_of_file(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes a certificate, merging with an existing one for the same subject
/// (checks are appended, never dropped).
pub fn write_certificate(path: &Path, certificate: &Certificate) -> Result<()> {
    let merged = match read_certificate(path) {
        Ok(mut existing) if existing.subject_sha256 == certificate.subject_sha256 => {
            existing.checks.extend(certificate.checks.iter().cloned());
            existing.timestamp_unix = certificate.timestamp_unix;
            existing
        }
        _ => certificate.clone(),
    };
    write_file(path, &merged)
}

pub fn read_certificate(path: &Path) -> Result<Certificate> {
    let text = fs::read_to_string(path)?;
    let cert: Certificate = serde_json::from_str(&text)?;
    if cert.format != CERTIFICATE_FORMAT {
        return Err(Error::MalformedHeader(format!(
            "unknown certificate format {:?}",
            cert.format
        )));
    }
    Ok(cert)
}

/// Plain-text permutation file: first number is the order, then the
/// 0-based image list.
pub fn read_permutation(path: &Path) -> Result<Permutation> {
    let text = fs::read_to_string(path)?;
    crate::constructions::parse_permutation_text(&text)
}

pub fn write_permutation(path: &Path, p: &Permutation) -> Result<()> {
    let mut text = format!("{}\n", p.len());
    let images: Vec<String> = p.image().iter().map(|v| v.to_string()).collect();
    text.push_str(&images.join(" "));
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn write_file<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Write-to-temp then rename, so concurrent readers never see a torn file.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn square_order(matrix: &CMat) -> Result<usize> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::ShapeMismatch {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
            n: matrix.nrows(),
        });
    }
    Ok(matrix.nrows())
}
