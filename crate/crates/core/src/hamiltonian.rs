//! Quasi-local Hamiltonians and the canonical frustration-free parent.

use serde::Serialize;

use crate::dqls::{h0_of_sets, schmidt_span, MAX_TOTAL_DIM};
use crate::error::{DqlsError, Result};
use crate::linalg::{
    hermitian_eigen, hermitian_eigenvalues, is_hermitian, svd_rank, CMatrix, RankTolerance,
    Subspace,
};
use crate::locality::NeighborhoodStructure;
use crate::state::{validate_index_set, PureState, Split};

/// Hermitian operator acting on the listed subsystems (strictly increasing).
#[derive(Clone, Debug)]
pub struct Term {
    pub neighborhood: Vec<usize>,
    pub matrix: CMatrix,
}

/// `H = Σ_j H_j ⊗ I`, every term shifted so that its smallest eigenvalue is
/// zero.
#[derive(Clone, Debug)]
pub struct QLHamiltonian {
    dims: Vec<usize>,
    terms: Vec<Term>,
}

impl QLHamiltonian {
    pub fn new(dims: Vec<usize>, terms: Vec<Term>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(DqlsError::DimensionMismatch(format!(
                "invalid dimensions {dims:?}"
            )));
        }
        let mut shifted = Vec::with_capacity(terms.len());
        for t in terms {
            validate_index_set(&t.neighborhood, dims.len())?;
            if t.neighborhood.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DqlsError::InvalidIndexSet(format!(
                    "term neighborhood {:?} is not increasing",
                    t.neighborhood
                )));
            }
            let d: usize = t.neighborhood.iter().map(|&i| dims[i]).product();
            if t.matrix.nrows() != d || t.matrix.ncols() != d {
                return Err(DqlsError::DimensionMismatch(format!(
                    "term on {:?} must be {d}x{d}, got {}x{}",
                    t.neighborhood,
                    t.matrix.nrows(),
                    t.matrix.ncols()
                )));
            }
            if !is_hermitian(t.matrix.as_ref(), 1e-10) {
                return Err(DqlsError::InvalidMatrix(format!(
                    "term on {:?} is not Hermitian",
                    t.neighborhood
                )));
            }
            let herm = CMatrix::from_fn(d, d, |i, j| {
                (t.matrix[(i, j)] + t.matrix[(j, i)].conj()) * 0.5
            });
            let lmin = hermitian_eigenvalues(herm.as_ref())?[0];
            let matrix = CMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    herm[(i, j)] - lmin
                } else {
                    herm[(i, j)]
                }
            });
            shifted.push(Term {
                neighborhood: t.neighborhood,
                matrix,
            });
        }
        Ok(QLHamiltonian {
            dims,
            terms: shifted,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn check_size(&self) -> Result<()> {
        if self.total_dim() > MAX_TOTAL_DIM {
            return Err(DqlsError::TooLarge(format!(
                "total dimension {} exceeds {MAX_TOTAL_DIM}",
                self.total_dim()
            )));
        }
        Ok(())
    }

    /// Term `j` as an operator on the full space.
    pub fn embedded_term(&self, j: usize) -> Result<CMatrix> {
        self.check_size()?;
        let t = &self.terms[j];
        Ok(Split::new(&self.dims, &t.neighborhood)?.embed_operator(t.matrix.as_ref()))
    }

    /// The full Hamiltonian as a dense matrix.
    pub fn assembled(&self) -> Result<CMatrix> {
        self.check_size()?;
        let n = self.total_dim();
        let mut h = CMatrix::zeros(n, n);
        for j in 0..self.terms.len() {
            h += self.embedded_term(j)?;
        }
        Ok(h)
    }

    /// Numerical rank of every local term.
    pub fn term_ranks(&self, tol: &RankTolerance) -> Result<Vec<usize>> {
        self.terms
            .iter()
            .map(|t| svd_rank(t.matrix.as_ref(), tol))
            .collect()
    }

    fn spectrum(&self, tol: &RankTolerance) -> Result<(Vec<f64>, CMatrix, f64)> {
        let h = self.assembled()?;
        let (vals, vecs) = hermitian_eigen(h.as_ref())?;
        let n = h.nrows();
        let top = vals.last().copied().unwrap_or(0.0).abs().max(1.0);
        Ok((vals, vecs, tol.threshold(top, n, n)))
    }

    fn eigenspace_below(
        &self,
        level: f64,
        vals: &[f64],
        vecs: &CMatrix,
        tol: &RankTolerance,
    ) -> Result<Subspace> {
        let k = vals.iter().take_while(|&&v| v <= level).count();
        Subspace::from_orthonormal(vecs.subcols(0, k).to_owned(), *tol)
    }

    /// Zero-energy eigenspace.
    pub fn kernel(&self, tol: &RankTolerance) -> Result<Subspace> {
        let (vals, vecs, thr) = self.spectrum(tol)?;
        self.eigenspace_below(thr, &vals, &vecs, tol)
    }

    /// Lowest eigenspace of the assembled Hamiltonian.
    pub fn ground_space(&self, tol: &RankTolerance) -> Result<(f64, Subspace)> {
        let (vals, vecs, thr) = self.spectrum(tol)?;
        let e0 = vals.first().copied().unwrap_or(0.0);
        Ok((e0, self.eigenspace_below(e0 + thr, &vals, &vecs, tol)?))
    }
}

/// Canonical parent: `H_j = I - Π_j` where `Π_j` projects onto the Schmidt
/// span of `ψ` on neighborhood `j`.
pub fn parent_hamiltonian(
    s: &PureState,
    ns: &NeighborhoodStructure,
    tol: &RankTolerance,
) -> Result<QLHamiltonian> {
    if s.total_dim() > MAX_TOTAL_DIM {
        return Err(DqlsError::TooLarge(format!(
            "total dimension {} exceeds {MAX_TOTAL_DIM}",
            s.total_dim()
        )));
    }
    if ns.n() != s.n_subsystems() {
        return Err(DqlsError::DimensionMismatch(format!(
            "structure on {} subsystems, state has {}",
            ns.n(),
            s.n_subsystems()
        )));
    }
    let terms = ns
        .neighborhoods()
        .iter()
        .map(|nb| {
            let span = schmidt_span(s, nb, tol)?;
            let d = span.ambient_dim();
            let matrix = CMatrix::identity(d, d) - span.projector();
            Ok(Term {
                neighborhood: nb.clone(),
                matrix,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QLHamiltonian::new(s.dims().to_vec(), terms)
}

/// Every ground state of `H` is a ground state (zero-energy state) of every
/// term.
pub fn frustration_free_check(h: &QLHamiltonian, tol: &RankTolerance) -> Result<bool> {
    let (vals, vecs, thr) = h.spectrum(tol)?;
    let e0 = vals.first().copied().unwrap_or(0.0);
    let ground = h.eigenspace_below(e0 + thr, &vals, &vecs, tol)?;
    for j in 0..h.terms().len() {
        let hj = h.embedded_term(j)?;
        let r = &hj * ground.basis();
        if r.ncols() > 0 && r.norm_max() > thr.max(1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks that `H₀(ψ)`, taken relative to the neighborhoods of the terms,
/// lies in the kernel of `H`. `ψ` itself must be annihilated by `H`.
pub fn ground_containment_check(
    h: &QLHamiltonian,
    s: &PureState,
    tol: &RankTolerance,
) -> Result<bool> {
    if s.dims() != h.dims() {
        return Err(DqlsError::DimensionMismatch(
            "state and Hamiltonian dimensions differ".into(),
        ));
    }
    let hm = h.assembled()?;
    let n = hm.nrows();
    let top = hermitian_eigenvalues(hm.as_ref())?
        .last()
        .copied()
        .unwrap_or(0.0)
        .abs()
        .max(1.0);
    let thr = tol.threshold(top, n, n);
    let psi = s.normalized()?.to_column();
    let e = (&hm * &psi).norm_l2();
    if e > thr.max(1e-12) {
        return Err(DqlsError::PreconditionFailed(format!(
            "state is not a zero-energy state (|H psi| = {e:.3e})"
        )));
    }
    if h.terms().is_empty() {
        return Ok(true);
    }
    let sets: Vec<Vec<usize>> = h.terms().iter().map(|t| t.neighborhood.clone()).collect();
    let (h0, _) = h0_of_sets(s, &sets, tol)?;
    let r = &hm * h0.basis();
    Ok(r.ncols() == 0 || r.norm_max() <= thr.max(1e-12))
}

#[derive(Clone, Debug, Serialize)]
pub struct ParentReport {
    pub term_ranks: Vec<usize>,
    pub kernel_dim: usize,
    pub ff: bool,
}

pub fn parent_report(
    s: &PureState,
    ns: &NeighborhoodStructure,
    tol: &RankTolerance,
) -> Result<ParentReport> {
    let h = parent_hamiltonian(s, ns, tol)?;
    Ok(ParentReport {
        term_ranks: h.term_ranks(tol)?,
        kernel_dim: h.kernel(tol)?.dim(),
        ff: frustration_free_check(&h, tol)?,
    })
}
