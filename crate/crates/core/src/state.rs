//! Multipartite pure states and reduced density matrices.
//!
//! Amplitudes are stored row-major over the subsystem digits, subsystem 0
//! being the slowest-varying index. All subsystem indices in this API are
//! 0-based; the JSON formats in [`crate::io`] use 1-based labels.

use serde::{Deserialize, Serialize};

use crate::error::{DqlsError, Result};
use crate::linalg::{is_hermitian, CMatrix, C64, ONE, ZERO};
use crate::rng::{gaussian_c64, seeded};

/// Index bookkeeping for viewing a tensor as a (kept x rest) matrix.
///
/// `index[k * d_rest + r]` is the canonical position of the amplitude whose
/// kept digits encode to `k` and whose remaining digits encode to `r`, both
/// in row-major order of the listed subsystems.
#[derive(Clone, Debug)]
pub struct Split {
    pub keep: Vec<usize>,
    pub rest: Vec<usize>,
    pub d_keep: usize,
    pub d_rest: usize,
    index: Vec<usize>,
}

impl Split {
    pub fn new(dims: &[usize], keep: &[usize]) -> Result<Self> {
        validate_index_set(keep, dims.len())?;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let rest: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
        let d_keep: usize = keep.iter().map(|&i| dims[i]).product();
        let d_rest: usize = rest.iter().map(|&i| dims[i]).product();
        let total = d_keep * d_rest;
        let mut index = vec![0; total];
        let mut digits = vec![0usize; dims.len()];
        for c in 0..total {
            let mut k = 0;
            for &i in &keep {
                k = k * dims[i] + digits[i];
            }
            let mut r = 0;
            for &i in &rest {
                r = r * dims[i] + digits[i];
            }
            index[k * d_rest + r] = c;
            for a in (0..dims.len()).rev() {
                digits[a] += 1;
                if digits[a] < dims[a] {
                    break;
                }
                digits[a] = 0;
            }
        }
        Ok(Split {
            keep,
            rest,
            d_keep,
            d_rest,
            index,
        })
    }

    pub fn canonical(&self, k: usize, r: usize) -> usize {
        self.index[k * self.d_rest + r]
    }

    /// Reshapes a full-space vector into a `d_keep x d_rest` matrix.
    pub fn reshape(&self, v: &[C64]) -> CMatrix {
        CMatrix::from_fn(self.d_keep, self.d_rest, |k, r| v[self.canonical(k, r)])
    }

    /// Reshapes every column of `q` side by side: the result is
    /// `d_keep x (d_rest * q.ncols())`.
    pub fn reshape_columns(&self, q: faer::MatRef<'_, C64>) -> CMatrix {
        let dr = self.d_rest;
        CMatrix::from_fn(self.d_keep, dr * q.ncols(), |k, cr| {
            q[(self.canonical(k, cr % dr), cr / dr)]
        })
    }

    /// Inverse of [`reshape_columns`](Self::reshape_columns).
    pub fn flatten_columns(&self, m: faer::MatRef<'_, C64>, ncols: usize) -> CMatrix {
        let dr = self.d_rest;
        let mut out = CMatrix::zeros(self.d_keep * dr, ncols);
        for c in 0..ncols {
            for r in 0..dr {
                for k in 0..self.d_keep {
                    out[(self.canonical(k, r), c)] = m[(k, c * dr + r)];
                }
            }
        }
        out
    }

    /// `op ⊗ I_rest` written in the canonical ordering.
    pub fn embed_operator(&self, op: faer::MatRef<'_, C64>) -> CMatrix {
        let n = self.d_keep * self.d_rest;
        let mut out = CMatrix::zeros(n, n);
        for r in 0..self.d_rest {
            for k2 in 0..self.d_keep {
                let col = self.canonical(k2, r);
                for k1 in 0..self.d_keep {
                    let z = op[(k1, k2)];
                    if z != ZERO {
                        out[(self.canonical(k1, r), col)] = z;
                    }
                }
            }
        }
        out
    }

    /// Applies `op ⊗ I_rest` to the columns of `q` without forming it.
    pub fn apply_operator(&self, op: faer::MatRef<'_, C64>, q: faer::MatRef<'_, C64>) -> CMatrix {
        let m = self.reshape_columns(q);
        self.flatten_columns((op * m).as_ref(), q.ncols())
    }
}

pub(crate) fn validate_index_set(set: &[usize], n: usize) -> Result<()> {
    if set.is_empty() {
        return Err(DqlsError::InvalidIndexSet("empty index set".into()));
    }
    let mut seen = vec![false; n];
    for &i in set {
        if i >= n {
            return Err(DqlsError::InvalidIndexSet(format!(
                "subsystem {i} out of range for {n} subsystems"
            )));
        }
        if seen[i] {
            return Err(DqlsError::InvalidIndexSet(format!(
                "subsystem {i} repeated"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

fn validate_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(DqlsError::DimensionMismatch("no subsystems".into()));
    }
    if let Some(d) = dims.iter().find(|&&d| d < 2) {
        return Err(DqlsError::DimensionMismatch(format!(
            "local dimension {d} is below 2"
        )));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| DqlsError::TooLarge("total dimension overflows".into()))
}

/// Vector in `C^{d_1} ⊗ ... ⊗ C^{d_N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        let total = validate_dims(&dims)?;
        if amplitudes.len() != total {
            return Err(DqlsError::DimensionMismatch(format!(
                "{} amplitudes for total dimension {total}",
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(DqlsError::InvalidState("non-finite amplitude".into()));
        }
        Ok(PureState { dims, amplitudes })
    }

    /// Product basis state `|digits[0] digits[1] ...>`.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        let total = validate_dims(&dims)?;
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(&x, &d)| x >= d) {
            return Err(DqlsError::InvalidParameter(
                "basis digits out of range".into(),
            ));
        }
        let pos = digits
            .iter()
            .zip(&dims)
            .fold(0, |acc, (&x, &d)| acc * d + x);
        let mut amplitudes = vec![ZERO; total];
        amplitudes[pos] = ONE;
        Ok(PureState { dims, amplitudes })
    }

    pub fn from_column(dims: Vec<usize>, col: faer::ColRef<'_, C64>) -> Result<Self> {
        PureState::new(dims, col.iter().copied().collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_normalized(&self, eps: f64) -> bool {
        (self.norm() - 1.0).abs() <= eps
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(DqlsError::InvalidState("zero vector".into()));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, z: C64) -> Self {
        PureState {
            dims: self.dims.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * z).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dims != other.dims {
            return Err(DqlsError::DimensionMismatch(
                "states live in different spaces".into(),
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2 / (<self|self><other|other>)`.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        let ov = self.inner(other)?.norm_sqr();
        Ok(ov / (self.norm().powi(2) * other.norm().powi(2)))
    }

    pub fn to_column(&self) -> CMatrix {
        CMatrix::from_fn(self.total_dim(), 1, |i, _| self.amplitudes[i])
    }

    /// Amplitudes reshaped to (subsystems in `keep`) x (all others).
    pub fn bipartition_matrix(&self, keep: &[usize]) -> Result<CMatrix> {
        Ok(Split::new(&self.dims, keep)?.reshape(&self.amplitudes))
    }

    /// Reorders the subsystems so that group 0 comes first, then group 1, and
    /// so on, and merges each group into a single subsystem.
    pub fn regroup(&self, groups: &[Vec<usize>]) -> Result<PureState> {
        let order: Vec<usize> = groups.iter().flatten().copied().collect();
        if order.len() != self.dims.len() || groups.iter().any(|g| g.is_empty()) {
            return Err(DqlsError::InvalidIndexSet(
                "groups must partition the subsystems into non-empty blocks".into(),
            ));
        }
        validate_index_set(&order, self.dims.len())?;
        let new_dims: Vec<usize> = groups
            .iter()
            .map(|g| g.iter().map(|&i| self.dims[i]).product())
            .collect();
        Ok(PureState {
            dims: new_dims,
            amplitudes: permute_amplitudes(&self.dims, &self.amplitudes, &order),
        })
    }

    /// Reorders subsystems: new subsystem `k` is old subsystem `order[k]`.
    pub fn permute(&self, order: &[usize]) -> Result<PureState> {
        if order.len() != self.dims.len() {
            return Err(DqlsError::InvalidIndexSet(
                "permutation has the wrong length".into(),
            ));
        }
        validate_index_set(order, self.dims.len())?;
        Ok(PureState {
            dims: order.iter().map(|&i| self.dims[i]).collect(),
            amplitudes: permute_amplitudes(&self.dims, &self.amplitudes, order),
        })
    }

    /// Applies `op` (a `d_k x d_k` matrix) to subsystem `k`.
    pub fn apply_local(&self, k: usize, op: faer::MatRef<'_, C64>) -> Result<PureState> {
        if k >= self.dims.len() {
            return Err(DqlsError::InvalidIndexSet(format!(
                "subsystem {k} out of range"
            )));
        }
        let d = self.dims[k];
        if op.nrows() != d || op.ncols() != d {
            return Err(DqlsError::DimensionMismatch(format!(
                "operator is {}x{}, subsystem has dimension {d}",
                op.nrows(),
                op.ncols()
            )));
        }
        let inner: usize = self.dims[k + 1..].iter().product();
        let outer = self.total_dim() / (d * inner);
        let mut out = vec![ZERO; self.total_dim()];
        for o in 0..outer {
            for x in 0..d {
                for y in 0..d {
                    let z = op[(x, y)];
                    if z == ZERO {
                        continue;
                    }
                    let dst = (o * d + x) * inner;
                    let src = (o * d + y) * inner;
                    for i in 0..inner {
                        out[dst + i] += z * self.amplitudes[src + i];
                    }
                }
            }
        }
        Ok(PureState {
            dims: self.dims.clone(),
            amplitudes: out,
        })
    }
}

fn permute_amplitudes(dims: &[usize], amps: &[C64], order: &[usize]) -> Vec<C64> {
    let new_dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let mut out = Vec::with_capacity(amps.len());
    let mut digits = vec![0usize; dims.len()];
    for _ in 0..amps.len() {
        let src: usize = digits
            .iter()
            .zip(order)
            .map(|(&x, &o)| x * strides[o])
            .sum();
        out.push(amps[src]);
        for a in (0..new_dims.len()).rev() {
            digits[a] += 1;
            if digits[a] < new_dims[a] {
                break;
            }
            digits[a] = 0;
        }
    }
    out
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn random_state(dims: &[usize], seed: u64) -> Result<PureState> {
    let total = validate_dims(dims)?;
    let mut rng = seeded(seed);
    let amps: Vec<C64> = (0..total).map(|_| gaussian_c64(&mut rng)).collect();
    PureState::new(dims.to_vec(), amps)?.normalized()
}

/// Positive semidefinite, unit-trace operator on a multipartite space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let total = validate_dims(&dims)?;
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(DqlsError::DimensionMismatch(
                "matrix size does not match dims".into(),
            ));
        }
        if !is_hermitian(matrix.as_ref(), 1e-10) {
            return Err(DqlsError::InvalidState(
                "density matrix is not Hermitian".into(),
            ));
        }
        let tr: f64 = (0..total).map(|i| matrix[(i, i)].re).sum();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(DqlsError::InvalidState(format!(
                "trace is {tr}, expected 1"
            )));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let total = validate_dims(&dims)?;
        let matrix = CMatrix::from_fn(total, total, |i, j| {
            if i == j {
                C64::new(1.0 / total as f64, 0.0)
            } else {
                ZERO
            }
        });
        Ok(DensityMatrix { dims, matrix })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        let m = &self.matrix;
        let mut s = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                s += m[(i, j)].norm_sqr();
            }
        }
        s
    }
}

/// Reduced state on `keep` of the normalized `s`.
pub fn partial_trace(s: &PureState, keep: &[usize]) -> Result<DensityMatrix> {
    let split = Split::new(s.dims(), keep)?;
    let n2 = s.norm().powi(2);
    if n2 == 0.0 {
        return Err(DqlsError::InvalidState("zero vector".into()));
    }
    let m = split.reshape(s.amplitudes());
    let rho = &m * m.adjoint();
    let rho = CMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| rho[(i, j)] / n2);
    Ok(DensityMatrix {
        dims: split.keep.iter().map(|&i| s.dims()[i]).collect(),
        matrix: rho,
    })
}

/// `(<index|_subsystem ⊗ I) s`, an unnormalized state on the other subsystems.
pub fn partial_inner(s: &PureState, subsystem: usize, index: usize) -> Result<PureState> {
    if s.n_subsystems() < 2 {
        return Err(DqlsError::InvalidIndexSet(
            "contracting the only subsystem leaves nothing".into(),
        ));
    }
    let split = Split::new(s.dims(), &[subsystem])?;
    if index >= split.d_keep {
        return Err(DqlsError::InvalidParameter(format!(
            "basis index {index} out of range"
        )));
    }
    let amps = (0..split.d_rest)
        .map(|r| s.amplitudes()[split.canonical(index, r)])
        .collect();
    let dims = split.rest.iter().map(|&i| s.dims()[i]).collect();
    PureState::new(dims, amps)
}

/// Standard named families of states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NamedState {
    /// `sum_k |k...k> / sqrt(d)` on `n` qudits.
    Ghz { n: usize, d: usize },
    /// Uniform superposition of single excitations on `n` qubits.
    W { n: usize },
    /// Uniform superposition of weight-`k` strings on `n` qubits.
    Dicke { n: usize, k: usize },
    /// Qubit graph state for a symmetric adjacency matrix.
    Graph { adjacency: Vec<Vec<bool>> },
}

/// Adjacency matrix of the `n`-cycle.
pub fn ring_adjacency(n: usize) -> Vec<Vec<bool>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && ((i + 1) % n == j || (j + 1) % n == i))
                .collect()
        })
        .collect()
}

pub fn named_state(spec: &NamedState) -> Result<PureState> {
    match spec {
        NamedState::Ghz { n, d } => {
            if *n < 2 || *d < 2 {
                return Err(DqlsError::InvalidName("GHZ needs n >= 2 and d >= 2".into()));
            }
            let dims = vec![*d; *n];
            let total = validate_dims(&dims)?;
            let mut amps = vec![ZERO; total];
            let step: usize = (0..*n).fold(0, |acc, _| acc * d + 1);
            for k in 0..*d {
                amps[k * step] = C64::new(1.0 / (*d as f64).sqrt(), 0.0);
            }
            PureState::new(dims, amps)
        }
        NamedState::W { n } => {
            if *n < 2 {
                return Err(DqlsError::InvalidName("W needs n >= 2".into()));
            }
            dicke(*n, 1)
        }
        NamedState::Dicke { n, k } => {
            if *n < 2 || *k > *n {
                return Err(DqlsError::InvalidName(
                    "Dicke needs n >= 2 and k <= n".into(),
                ));
            }
            dicke(*n, *k)
        }
        NamedState::Graph { adjacency } => graph_state(adjacency),
    }
}

fn dicke(n: usize, k: usize) -> Result<PureState> {
    if n > 20 {
        return Err(DqlsError::TooLarge(format!("{n} qubits")));
    }
    let total = 1usize << n;
    let mut amps: Vec<C64> = (0..total)
        .map(|x| {
            if (x as u64).count_ones() as usize == k {
                ONE
            } else {
                ZERO
            }
        })
        .collect();
    let count = amps.iter().filter(|z| **z == ONE).count() as f64;
    for a in &mut amps {
        *a /= count.sqrt();
    }
    PureState::new(vec![2; n], amps)
}

#[allow(clippy::needless_range_loop)]
fn graph_state(adj: &[Vec<bool>]) -> Result<PureState> {
    let n = adj.len();
    if !(2..=8).contains(&n) {
        return Err(DqlsError::InvalidName(format!(
            "graph states are supported for 2 to 8 qubits, got {n}"
        )));
    }
    for i in 0..n {
        if adj[i].len() != n || adj[i][i] {
            return Err(DqlsError::InvalidName(
                "adjacency must be square with an empty diagonal".into(),
            ));
        }
        for j in 0..n {
            if adj[i][j] != adj[j][i] {
                return Err(DqlsError::InvalidName("adjacency must be symmetric".into()));
            }
        }
    }
    let total = 1usize << n;
    let amp = 1.0 / (total as f64).sqrt();
    // Qubit 0 is the most significant bit.
    let bit = |x: usize, i: usize| (x >> (n - 1 - i)) & 1 == 1;
    let amps = (0..total)
        .map(|x| {
            let mut parity = false;
            for i in 0..n {
                for j in i + 1..n {
                    if adj[i][j] && bit(x, i) && bit(x, j) {
                        parity = !parity;
                    }
                }
            }
            C64::new(if parity { -amp } else { amp }, 0.0)
        })
        .collect();
    PureState::new(vec![2; n], amps)
}
