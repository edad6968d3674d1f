//! JSON file formats. Subsystem labels in files are 1-based.
//!
//! * state: `{"dims": [..], "re": [..], "im": [..]}` with amplitudes in
//!   row-major digit order, or a named state such as
//!   `{"kind": "ghz", "n": 3, "d": 2}`
//! * neighborhood structure: `{"n": 4, "neighborhoods": [[1, 2], [2, 3, 4]]}`
//! * matrix: `{"rows": r, "cols": c, "re": [..], "im": [..]}`, row-major
//! * support: `{"neighborhood": [1, 2], "basis": <matrix>}`

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{DqlsError, Result};
use crate::linalg::{CMatrix, RankTolerance, Subspace, C64};
use crate::locality::NeighborhoodStructure;
use crate::reconstruction::SupportInput;
use crate::state::{named_state, ring_adjacency, NamedState, PureState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Amplitudes(StateFile),
    Named(NamedState),
}

impl StateFile {
    pub fn from_state(s: &PureState) -> Self {
        StateFile {
            dims: s.dims().to_vec(),
            re: s.amplitudes().iter().map(|z| z.re).collect(),
            im: s.amplitudes().iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_state(&self) -> Result<PureState> {
        let im = if self.im.is_empty() {
            vec![0.0; self.re.len()]
        } else {
            self.im.clone()
        };
        if im.len() != self.re.len() {
            return Err(DqlsError::Format(format!(
                "{} real parts but {} imaginary parts",
                self.re.len(),
                im.len()
            )));
        }
        let amps = self
            .re
            .iter()
            .zip(&im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        PureState::new(self.dims.clone(), amps)
    }
}

impl StateSpec {
    pub fn to_state(&self) -> Result<PureState> {
        match self {
            StateSpec::Amplitudes(f) => f.to_state(),
            StateSpec::Named(n) => named_state(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NsFile {
    pub n: usize,
    pub neighborhoods: Vec<Vec<usize>>,
}

impl NsFile {
    pub fn from_structure(ns: &NeighborhoodStructure) -> Self {
        NsFile {
            n: ns.n(),
            neighborhoods: ns.to_one_based(),
        }
    }

    pub fn to_structure(&self) -> Result<NeighborhoodStructure> {
        let refs: Vec<&[usize]> = self.neighborhoods.iter().map(Vec::as_slice).collect();
        NeighborhoodStructure::from_one_based(self.n, &refs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        MatrixFile { rows, cols, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.rows * self.cols;
        if self.re.len() != n || !(self.im.is_empty() || self.im.len() == n) {
            return Err(DqlsError::Format(format!(
                "{}x{} matrix needs {n} entries per part",
                self.rows, self.cols
            )));
        }
        let m = CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            C64::new(self.re[k], self.im.get(k).copied().unwrap_or(0.0))
        });
        crate::linalg::check_finite(m.as_ref())?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportFile {
    pub neighborhood: Vec<usize>,
    pub basis: MatrixFile,
}

impl SupportFile {
    pub fn from_support(s: &SupportInput) -> Self {
        SupportFile {
            neighborhood: s.neighborhood.iter().map(|i| i + 1).collect(),
            basis: MatrixFile::from_matrix(s.support.basis()),
        }
    }

    /// The basis columns need not be orthonormal; their span is used.
    pub fn to_support(&self, tol: &RankTolerance) -> Result<SupportInput> {
        if self.neighborhood.contains(&0) {
            return Err(DqlsError::InvalidIndexSet("labels are 1-based".into()));
        }
        let mut neighborhood: Vec<usize> = self.neighborhood.iter().map(|i| i - 1).collect();
        neighborhood.sort_unstable();
        let basis = self.basis.to_matrix()?;
        Ok(SupportInput {
            neighborhood,
            support: Subspace::span(basis.as_ref(), *tol)?,
        })
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| DqlsError::Io(format!("{}: {e}", path.as_ref().display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path.as_ref(), text + "\n")
        .map_err(|e| DqlsError::Io(format!("{}: {e}", path.as_ref().display())))
}

pub fn read_state(path: impl AsRef<Path>) -> Result<PureState> {
    read_json::<StateSpec>(path)?.to_state()
}

pub fn read_structure(path: impl AsRef<Path>) -> Result<NeighborhoodStructure> {
    read_json::<NsFile>(path)?.to_structure()
}

/// Parses short names: `ghz:N[:d]`, `w:N`, `dicke:N:k`, `ring:N`.
pub fn parse_named(spec: &str) -> Result<NamedState> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> Result<usize> {
        parts
            .get(i)
            .ok_or_else(|| DqlsError::InvalidName(format!("`{spec}` is missing a parameter")))?
            .parse()
            .map_err(|_| DqlsError::InvalidName(format!("`{spec}` has a non-numeric parameter")))
    };
    let arity = |k: &[usize]| -> Result<()> {
        if k.contains(&parts.len()) {
            Ok(())
        } else {
            Err(DqlsError::InvalidName(format!(
                "`{spec}` has the wrong number of parameters"
            )))
        }
    };
    match parts[0].to_ascii_lowercase().as_str() {
        "ghz" => {
            arity(&[2, 3])?;
            let d = if parts.len() == 3 { num(2)? } else { 2 };
            Ok(NamedState::Ghz { n: num(1)?, d })
        }
        "w" => {
            arity(&[2])?;
            Ok(NamedState::W { n: num(1)? })
        }
        "dicke" => {
            arity(&[3])?;
            Ok(NamedState::Dicke {
                n: num(1)?,
                k: num(2)?,
            })
        }
        "ring" => {
            arity(&[2])?;
            Ok(NamedState::Graph {
                adjacency: ring_adjacency(num(1)?),
            })
        }
        other => Err(DqlsError::InvalidName(format!(
            "unknown state family `{other}`"
        ))),
    }
}

/// Parses `2,2,3`.
pub fn parse_dims(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| DqlsError::Format(format!("bad dimension list `{text}`")))
        })
        .collect()
}
