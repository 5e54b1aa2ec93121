//! Problem bundles: a base matrix, an update manifest and an optional
//! right-hand side, all validated before any computation starts.
//!
//! The manifest is JSON: `{ "n": int, "pairs": [ {"u": path, "v": path}, ... ] }`
//! with paths relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smw_core::{BaseSolver, DenseMatrix, UpdateSet};

use crate::error::CliError;
use crate::mtx::read_matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub u: String,
    pub v: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub pairs: Vec<PairEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
    }
}

/// Where the base matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseSource {
    /// The literal `identity` with an explicit dimension.
    Identity(usize),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ProblemBundle {
    pub base: BaseSource,
    pub manifest: Option<PathBuf>,
    pub rhs: Option<PathBuf>,
}

/// A bundle with every file parsed and every dimension checked.
#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub n: usize,
    /// `None` for the identity base.
    pub base_matrix: Option<DenseMatrix>,
    pub updates: UpdateSet,
    pub rhs: Option<DenseMatrix>,
}

impl LoadedBundle {
    pub fn is_identity(&self) -> bool {
        self.base_matrix.is_none()
    }

    /// The base matrix, materializing `Iₙ` for the identity base.
    pub fn base_dense(&self) -> DenseMatrix {
        self.base_matrix
            .clone()
            .unwrap_or_else(|| DenseMatrix::identity(self.n))
    }

    pub fn base_solver(&self) -> Result<BaseSolver, CliError> {
        Ok(match &self.base_matrix {
            Some(a) => BaseSolver::factor_dense(a)?,
            None => BaseSolver::identity(self.n)?,
        })
    }
}

fn expect_rows(path: &Path, m: &DenseMatrix, n: usize, what: &str) -> Result<(), CliError> {
    if m.rows() != n {
        return Err(CliError::parse(
            path,
            format!("{what} has {} rows, expected {n}", m.rows()),
        ));
    }
    Ok(())
}

impl ProblemBundle {
    pub fn load(&self) -> Result<LoadedBundle, CliError> {
        let (n, base_matrix) = match &self.base {
            BaseSource::Identity(0) => {
                return Err(CliError::Usage("identity base needs --n > 0".into()))
            }
            BaseSource::Identity(n) => (*n, None),
            BaseSource::File(path) => {
                let a = read_matrix(path)?;
                if !a.is_square() {
                    return Err(CliError::parse(
                        path,
                        format!("base matrix must be square, got {}x{}", a.rows(), a.cols()),
                    ));
                }
                (a.rows(), Some(a))
            }
        };

        let mut updates = UpdateSet::empty(n);
        if let Some(manifest_path) = &self.manifest {
            let manifest = Manifest::read(manifest_path)?;
            if manifest.n != n {
                return Err(CliError::parse(
                    manifest_path,
                    format!("manifest declares n = {}, base dimension is {n}", manifest.n),
                ));
            }
            let dir = manifest_path.parent().unwrap_or(Path::new("."));
            for (k, entry) in manifest.pairs.iter().enumerate() {
                let u_path = dir.join(&entry.u);
                let v_path = dir.join(&entry.v);
                let u = read_matrix(&u_path)?;
                expect_rows(&u_path, &u, n, &format!("U{}", k + 1))?;
                let v = read_matrix(&v_path)?;
                expect_rows(&v_path, &v, n, &format!("V{}", k + 1))?;
                if u.cols() != v.cols() {
                    return Err(CliError::parse(
                        &v_path,
                        format!(
                            "V{} has {} columns but {} has {}",
                            k + 1,
                            v.cols(),
                            u_path.display(),
                            u.cols()
                        ),
                    ));
                }
                updates.push(u, v)?;
            }
        }

        let rhs = match &self.rhs {
            Some(path) => {
                let b = read_matrix(path)?;
                expect_rows(path, &b, n, "right-hand side")?;
                Some(b)
            }
            None => None,
        };

        Ok(LoadedBundle {
            n,
            base_matrix,
            updates,
            rhs,
        })
    }
}
