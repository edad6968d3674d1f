//! Dense complex linear algebra on top of `faer`.
//!
//! Everything rank-related goes through one tolerance policy, [`RankTolerance`],
//! so that every method in the crate agrees on what "numerically zero" means.
//! Subspaces are stored as orthonormal column bases and compared through the
//! spectral norm of the difference of their orthogonal projectors.

use faer::linalg::solvers::Svd;
use faer::{MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{DqlsError, Result};

pub use faer::c64 as C64;

/// Column-major dense complex matrix.
pub type CMatrix = faer::Mat<C64>;
/// Dense complex column vector.
pub type CVector = faer::Col<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceMode {
    /// Threshold is `value * max(rows, cols) * sigma_max`.
    Relative,
    /// Threshold is `value` itself.
    Absolute,
}

/// Decides which singular values count as zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTolerance {
    pub mode: ToleranceMode,
    pub value: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        RankTolerance {
            mode: ToleranceMode::Relative,
            value: 1e-10,
        }
    }
}

impl RankTolerance {
    pub fn relative(value: f64) -> Result<Self> {
        Self::new(ToleranceMode::Relative, value)
    }

    pub fn absolute(value: f64) -> Result<Self> {
        Self::new(ToleranceMode::Absolute, value)
    }

    pub fn new(mode: ToleranceMode, value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(DqlsError::InvalidParameter(format!(
                "tolerance must be positive and finite, got {value}"
            )));
        }
        Ok(RankTolerance { mode, value })
    }

    /// Cut-off below which a singular value is treated as zero.
    pub fn threshold(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        match self.mode {
            ToleranceMode::Relative => self.value * rows.max(cols) as f64 * sigma_max,
            ToleranceMode::Absolute => self.value,
        }
    }
}

/// Outcome of a numerical rank decision, kept around for diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct RankDecision {
    pub rank: usize,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
}

impl RankDecision {
    fn from_values(singular_values: Vec<f64>, threshold: f64) -> Self {
        let rank = singular_values.iter().filter(|&&s| s > threshold).count();
        RankDecision {
            rank,
            threshold,
            singular_values,
        }
    }

    /// True when some singular value sits within two decades of the cut-off,
    /// i.e. the rank is sensitive to the tolerance choice.
    pub fn near_threshold(&self) -> bool {
        self.threshold > 0.0
            && self
                .singular_values
                .iter()
                .any(|&s| s > self.threshold * 1e-2 && s < self.threshold * 1e2)
    }

    /// Ratio between the smallest retained and the largest discarded singular
    /// value; `inf` if nothing was discarded or nothing retained.
    pub fn gap(&self) -> f64 {
        let kept = self.singular_values.get(self.rank.wrapping_sub(1)).copied();
        let dropped = self.singular_values.get(self.rank).copied();
        match (kept, dropped) {
            (Some(k), Some(d)) if d > 0.0 => k / d,
            _ => f64::INFINITY,
        }
    }
}

pub fn check_finite(m: MatRef<'_, C64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(DqlsError::InvalidMatrix(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: MatRef<'_, C64>) -> Result<Vec<f64>> {
    check_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    m.singular_values()
        .map_err(|e| DqlsError::InvalidMatrix(format!("SVD did not converge: {e:?}")))
}

fn decide(
    m: MatRef<'_, C64>,
    sv: Vec<f64>,
    tol: &RankTolerance,
    scale: Option<f64>,
) -> RankDecision {
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = tol.threshold(scale.unwrap_or(smax), m.nrows(), m.ncols());
    RankDecision::from_values(sv, threshold)
}

pub fn rank_decision(m: MatRef<'_, C64>, tol: &RankTolerance) -> Result<RankDecision> {
    let sv = singular_values(m)?;
    Ok(decide(m, sv, tol, None))
}

/// Numerical rank: number of singular values strictly above the threshold.
pub fn svd_rank(m: MatRef<'_, C64>, tol: &RankTolerance) -> Result<usize> {
    Ok(rank_decision(m, tol)?.rank)
}

fn svd_full_right(m: MatRef<'_, C64>) -> Result<Svd<C64>> {
    check_finite(m)?;
    let res = if m.nrows() >= m.ncols() {
        m.thin_svd()
    } else {
        m.svd()
    };
    res.map_err(|e| DqlsError::InvalidMatrix(format!("SVD did not converge: {e:?}")))
}

fn kernel_with_scale(
    m: MatRef<'_, C64>,
    tol: &RankTolerance,
    scale: Option<f64>,
) -> Result<(Subspace, RankDecision)> {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        let dec = RankDecision::from_values(Vec::new(), 0.0);
        return Ok((Subspace::full(n, *tol), dec));
    }
    let svd = svd_full_right(m)?;
    let s = svd.S().column_vector();
    let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    let dec = decide(m, sv, tol, scale);
    let v = svd.V();
    let basis = v.subcols(dec.rank, n - dec.rank).to_owned();
    Ok((Subspace { basis, tol: *tol }, dec))
}

/// Orthonormal basis of `{x : m x = 0}`.
pub fn kernel(m: MatRef<'_, C64>, tol: &RankTolerance) -> Result<Subspace> {
    Ok(kernel_with_scale(m, tol, None)?.0)
}

pub fn kernel_with_decision(
    m: MatRef<'_, C64>,
    tol: &RankTolerance,
) -> Result<(Subspace, RankDecision)> {
    kernel_with_scale(m, tol, None)
}

/// Orthonormal basis of `{y : y^H m = 0}`.
pub fn cokernel(m: MatRef<'_, C64>, tol: &RankTolerance) -> Result<Subspace> {
    kernel(m.adjoint().to_owned().as_ref(), tol)
}

/// Orthonormal basis of the column space together with the rank decision.
pub fn range_with_decision(
    m: MatRef<'_, C64>,
    tol: &RankTolerance,
) -> Result<(Subspace, RankDecision)> {
    check_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        let dec = RankDecision::from_values(Vec::new(), 0.0);
        return Ok((Subspace::zero(m.nrows(), *tol), dec));
    }
    let svd = m
        .thin_svd()
        .map_err(|e| DqlsError::InvalidMatrix(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    let dec = decide(m, sv, tol, None);
    let basis = svd.U().subcols(0, dec.rank).to_owned();
    Ok((Subspace { basis, tol: *tol }, dec))
}

pub fn range(m: MatRef<'_, C64>, tol: &RankTolerance) -> Result<Subspace> {
    Ok(range_with_decision(m, tol)?.0)
}

/// A linear subspace of `C^n` held as an orthonormal basis (`n x k`).
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: CMatrix,
    tol: RankTolerance,
}

impl Subspace {
    /// Wraps a basis that is already orthonormal; rejects it otherwise.
    pub fn from_orthonormal(basis: CMatrix, tol: RankTolerance) -> Result<Self> {
        check_finite(basis.as_ref())?;
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        let slack = (10.0 * tol.value).max(1e-12);
        for j in 0..k {
            for i in 0..k {
                let target = if i == j { ONE } else { ZERO };
                if (gram[(i, j)] - target).norm() > slack {
                    return Err(DqlsError::InvalidMatrix(
                        "basis columns are not orthonormal".into(),
                    ));
                }
            }
        }
        Ok(Subspace { basis, tol })
    }

    /// Span of arbitrary (possibly dependent) columns.
    pub fn span(vectors: MatRef<'_, C64>, tol: RankTolerance) -> Result<Self> {
        range(vectors, &tol)
    }

    pub fn full(n: usize, tol: RankTolerance) -> Self {
        Subspace {
            basis: CMatrix::identity(n, n),
            tol,
        }
    }

    pub fn zero(n: usize, tol: RankTolerance) -> Self {
        Subspace {
            basis: CMatrix::zeros(n, 0),
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn into_basis(self) -> CMatrix {
        self.basis
    }

    pub fn tol(&self) -> RankTolerance {
        self.tol
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Orthogonal projection of the columns of `q` onto the subspace.
    pub fn project(&self, q: MatRef<'_, C64>) -> CMatrix {
        &self.basis * (self.basis.adjoint() * q)
    }

    /// `(I - P) q`.
    pub fn residual(&self, q: MatRef<'_, C64>) -> CMatrix {
        let mut r = q.to_owned();
        if self.dim() > 0 {
            r -= self.project(q);
        }
        r
    }

    /// Orthogonal complement within the ambient space.
    pub fn complement(&self) -> Result<Subspace> {
        let n = self.ambient_dim();
        if self.dim() == 0 {
            return Ok(Subspace::full(n, self.tol));
        }
        let (k, _) = kernel_with_scale(
            self.basis.adjoint().to_owned().as_ref(),
            &self.tol,
            Some(1.0),
        )?;
        Ok(k)
    }

    /// Whether `v` lies in the subspace up to a relative residual `eps`.
    pub fn contains(&self, v: MatRef<'_, C64>, eps: f64) -> bool {
        let norm = v.norm_l2();
        if norm == 0.0 {
            return true;
        }
        self.residual(v).norm_l2() <= eps * norm
    }

    /// Spectral norm of `P_self - P_other`; equals 1 whenever the dimensions
    /// differ and the sine of the largest principal angle otherwise.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(DqlsError::DimensionMismatch(format!(
                "ambient dimensions {} and {}",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        if self.dim() != other.dim() {
            return Ok(1.0);
        }
        if self.dim() == 0 {
            return Ok(0.0);
        }
        let r = other.residual(self.basis.as_ref());
        Ok(singular_values(r.as_ref())?.first().copied().unwrap_or(0.0))
    }

    pub fn approx_eq(&self, other: &Subspace, eps: f64) -> Result<bool> {
        Ok(self.distance(other)? <= eps)
    }
}

/// Anything that behaves like a subspace for the purpose of intersection.
///
/// Implementors that are large but structured (a local span tensored with an
/// identity) can compute `residual` without ever materializing their basis.
pub trait SubspaceLike {
    fn ambient_dim(&self) -> usize;
    fn dim(&self) -> usize;
    fn basis_matrix(&self) -> CMatrix;
    /// `(I - P) q` for the orthogonal projector `P` onto the subspace.
    fn residual_of(&self, q: MatRef<'_, C64>) -> CMatrix;
}

impl SubspaceLike for Subspace {
    fn ambient_dim(&self) -> usize {
        Subspace::ambient_dim(self)
    }
    fn dim(&self) -> usize {
        Subspace::dim(self)
    }
    fn basis_matrix(&self) -> CMatrix {
        self.basis.clone()
    }
    fn residual_of(&self, q: MatRef<'_, C64>) -> CMatrix {
        self.residual(q)
    }
}

/// Intersection of subspaces.
///
/// Starts from an orthonormal basis `Q` of the smallest member and solves for
/// the coefficient vectors `c` with `(I - P_j) Q c = 0` for every other member
/// by taking the kernel of the stacked residual matrices. The result `Q c` is
/// orthonormal because both factors are. Residuals of orthonormal columns are
/// bounded by one, so the rank cut-off is taken at unit scale.
pub fn intersect_all(
    spaces: &[&dyn SubspaceLike],
    tol: &RankTolerance,
) -> Result<(Subspace, Option<RankDecision>)> {
    let Some(first) = spaces.first() else {
        return Err(DqlsError::InvalidParameter(
            "cannot intersect an empty list of subspaces".into(),
        ));
    };
    let n = first.ambient_dim();
    if let Some(bad) = spaces.iter().find(|s| s.ambient_dim() != n) {
        return Err(DqlsError::DimensionMismatch(format!(
            "ambient dimensions {} and {}",
            n,
            bad.ambient_dim()
        )));
    }
    let (base_idx, base) = spaces
        .iter()
        .enumerate()
        .min_by_key(|(_, s)| s.dim())
        .expect("non-empty");
    if base.dim() == 0 {
        return Ok((Subspace::zero(n, *tol), None));
    }
    let q = base.basis_matrix();
    let others: Vec<&&dyn SubspaceLike> = spaces
        .iter()
        .enumerate()
        .filter(|(i, s)| *i != base_idx && s.dim() < n)
        .map(|(_, s)| s)
        .collect();
    if others.is_empty() {
        return Ok((
            Subspace {
                basis: q,
                tol: *tol,
            },
            None,
        ));
    }
    let k = q.ncols();
    let mut stacked = CMatrix::zeros(n * others.len(), k);
    for (b, s) in others.iter().enumerate() {
        let r = s.residual_of(q.as_ref());
        stacked.submatrix_mut(b * n, 0, n, k).copy_from(&r);
    }
    let (c, dec) = kernel_with_scale(stacked.as_ref(), tol, Some(1.0))?;
    let basis = &q * c.basis();
    Ok((Subspace { basis, tol: *tol }, Some(dec)))
}

/// Intersection of explicitly stored subspaces, using the first member's
/// tolerance.
pub fn intersect(subspaces: &[Subspace]) -> Result<Subspace> {
    let tol = subspaces
        .first()
        .map(|s| s.tol)
        .ok_or_else(|| DqlsError::InvalidParameter("empty subspace list".into()))?;
    let refs: Vec<&dyn SubspaceLike> = subspaces.iter().map(|s| s as &dyn SubspaceLike).collect();
    Ok(intersect_all(&refs, &tol)?.0)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMatrix {
    let (mb, nb) = (b.nrows(), b.ncols());
    CMatrix::from_fn(a.nrows() * mb, a.ncols() * nb, |r, c| {
        a[(r / mb, c / nb)] * b[(r % mb, c % nb)]
    })
}

/// Column-stacking vectorization.
pub fn vec(m: MatRef<'_, C64>) -> CVector {
    let rows = m.nrows();
    CVector::from_fn(rows * m.ncols(), |k| m[(k % rows, k / rows)])
}

/// Inverse of [`vec`].
pub fn unvec(v: faer::ColRef<'_, C64>, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.nrows() != rows * cols {
        return Err(DqlsError::DimensionMismatch(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.nrows()
        )));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| v[j * rows + i]))
}

/// Dimension of `{X : X M_i = M_i X for all i}`.
pub fn commutant_dimension(matrices: &[CMatrix], tol: &RankTolerance) -> Result<usize> {
    let Some(first) = matrices.first() else {
        return Err(DqlsError::InvalidParameter("empty matrix list".into()));
    };
    let n = first.nrows();
    for m in matrices {
        if m.nrows() != n || m.ncols() != n {
            return Err(DqlsError::DimensionMismatch(
                "commutant needs square matrices of a common size".into(),
            ));
        }
    }
    let id = CMatrix::identity(n, n);
    let nn = n * n;
    let mut stacked = CMatrix::zeros(nn * matrices.len(), nn);
    for (b, m) in matrices.iter().enumerate() {
        let block = kron(m.transpose(), id.as_ref()) - kron(id.as_ref(), m.as_ref());
        stacked.submatrix_mut(b * nn, 0, nn, nn).copy_from(&block);
    }
    Ok(nn - svd_rank(stacked.as_ref(), tol)?)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: MatRef<'_, C64>) -> Result<(Vec<f64>, CMatrix)> {
    check_finite(m)?;
    if m.nrows() != m.ncols() {
        return Err(DqlsError::DimensionMismatch("matrix is not square".into()));
    }
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| DqlsError::InvalidMatrix(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn hermitian_eigenvalues(m: MatRef<'_, C64>) -> Result<Vec<f64>> {
    check_finite(m)?;
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| DqlsError::InvalidMatrix(format!("eigensolver failed: {e:?}")))
}

pub fn is_hermitian(m: MatRef<'_, C64>, eps: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.norm_max().max(1.0);
    (0..m.nrows()).all(|i| (0..=i).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= eps * scale))
}

/// Largest singular value.
pub fn spectral_norm(m: MatRef<'_, C64>) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Moore-Penrose pseudoinverse with the shared rank cut-off.
pub fn pseudoinverse(m: MatRef<'_, C64>, tol: &RankTolerance) -> Result<CMatrix> {
    check_finite(m)?;
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows == 0 || cols == 0 {
        return Ok(CMatrix::zeros(cols, rows));
    }
    let svd = m
        .thin_svd()
        .map_err(|e| DqlsError::InvalidMatrix(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    let dec = decide(m, sv, tol, None);
    let r = dec.rank;
    let u = svd.U().subcols(0, r);
    let v = svd.V().subcols(0, r);
    let vs = CMatrix::from_fn(cols, r, |i, j| v[(i, j)] / dec.singular_values[j]);
    Ok(vs * u.adjoint())
}

/// Scales every entry of `m` by `z`.
pub fn scale(m: MatRef<'_, C64>, z: C64) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, seeded};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rank_of_identity_and_rank_one() {
        let tol = RankTolerance::default();
        let id = CMatrix::identity(3, 3);
        assert_eq!(svd_rank(id.as_ref(), &tol).unwrap(), 3);
        let r1 = CMatrix::from_fn(2, 2, |_, _| ONE);
        assert_eq!(svd_rank(r1.as_ref(), &tol).unwrap(), 1);
        assert_eq!(svd_rank(CMatrix::zeros(3, 4).as_ref(), &tol).unwrap(), 0);
    }

    #[test]
    fn rank_rejects_nan() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(
            svd_rank(m.as_ref(), &RankTolerance::default()),
            Err(DqlsError::InvalidMatrix(_))
        ));
    }

    #[test]
    fn relative_tolerance_is_scale_invariant() {
        let mut rng = seeded(3);
        let a = gaussian_matrix(&mut rng, 5, 3);
        let b = gaussian_matrix(&mut rng, 3, 6);
        let m = &a * &b;
        let tol = RankTolerance::default();
        for s in [1e-8, 1.0, 1e8] {
            let scaled = scale(m.as_ref(), c(s, 0.0));
            assert_eq!(svd_rank(scaled.as_ref(), &tol).unwrap(), 3);
        }
    }

    #[test]
    fn kernel_of_rank_one_two_by_two() {
        let m = CMatrix::from_fn(2, 2, |_, _| ONE);
        let k = kernel(m.as_ref(), &RankTolerance::default()).unwrap();
        assert_eq!(k.dim(), 1);
        let v = k.basis();
        // Kernel direction is (1, -1)/sqrt(2) up to phase.
        assert!((v[(0, 0)] + v[(1, 0)]).norm() < 1e-12);
        assert!((v[(0, 0)].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn kernel_of_wide_matrix_has_expected_dimension() {
        let mut rng = seeded(11);
        let m = gaussian_matrix(&mut rng, 3, 7);
        let k = kernel(m.as_ref(), &RankTolerance::default()).unwrap();
        assert_eq!(k.dim(), 4);
        assert!((&m * k.basis()).norm_max() < 1e-12);
    }

    #[test]
    fn cokernel_and_range_are_complementary() {
        let mut rng = seeded(5);
        let m = &gaussian_matrix(&mut rng, 6, 2) * &gaussian_matrix(&mut rng, 2, 5);
        let tol = RankTolerance::default();
        let r = range(m.as_ref(), &tol).unwrap();
        let ck = cokernel(m.as_ref(), &tol).unwrap();
        assert_eq!(r.dim() + ck.dim(), 6);
        assert!((r.basis().adjoint() * ck.basis()).norm_max() < 1e-12);
    }

    #[test]
    fn intersection_of_coordinate_planes() {
        let tol = RankTolerance::default();
        let e = CMatrix::identity(3, 3);
        let xy = Subspace::from_orthonormal(e.subcols(0, 2).to_owned(), tol).unwrap();
        let yz = Subspace::from_orthonormal(e.subcols(1, 2).to_owned(), tol).unwrap();
        let i = intersect(&[xy, yz]).unwrap();
        assert_eq!(i.dim(), 1);
        assert!((i.basis()[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn intersection_with_zero_and_full_spaces() {
        let tol = RankTolerance::default();
        let full = Subspace::full(4, tol);
        let zero = Subspace::zero(4, tol);
        let mut rng = seeded(1);
        let s = Subspace::span(gaussian_matrix(&mut rng, 4, 2).as_ref(), tol).unwrap();
        assert_eq!(intersect(&[full.clone(), zero]).unwrap().dim(), 0);
        let i = intersect(&[full, s.clone()]).unwrap();
        assert!(i.approx_eq(&s, 1e-12).unwrap());
    }

    #[test]
    fn intersection_agrees_with_projector_product_oracle() {
        // Oracle: the intersection of ranges of projectors P1, P2 is the
        // eigenvalue-one eigenspace of P1 P2 P1.
        let tol = RankTolerance::default();
        let mut rng = seeded(21);
        let common = gaussian_matrix(&mut rng, 6, 2);
        let mut a = CMatrix::zeros(6, 4);
        a.subcols_mut(0, 2).copy_from(&common);
        a.subcols_mut(2, 2)
            .copy_from(&gaussian_matrix(&mut rng, 6, 2));
        let mut b = CMatrix::zeros(6, 3);
        b.subcols_mut(0, 2).copy_from(&common);
        b.subcols_mut(2, 1)
            .copy_from(&gaussian_matrix(&mut rng, 6, 1));
        let sa = Subspace::span(a.as_ref(), tol).unwrap();
        let sb = Subspace::span(b.as_ref(), tol).unwrap();
        let got = intersect(&[sa.clone(), sb.clone()]).unwrap();

        let pa = sa.projector();
        let pb = sb.projector();
        let t = &pa * &pb * &pa;
        let (vals, vecs) = hermitian_eigen(t.as_ref()).unwrap();
        let ones: Vec<usize> = (0..6).filter(|&i| (vals[i] - 1.0).abs() < 1e-8).collect();
        let oracle = CMatrix::from_fn(6, ones.len(), |i, j| vecs[(i, ones[j])]);
        let oracle = Subspace::from_orthonormal(oracle, tol).unwrap();
        assert_eq!(got.dim(), 2);
        assert!(got.approx_eq(&oracle, 1e-8).unwrap());
    }

    #[test]
    fn distance_between_subspaces() {
        let tol = RankTolerance::default();
        let e = CMatrix::identity(2, 2);
        let x = Subspace::from_orthonormal(e.subcols(0, 1).to_owned(), tol).unwrap();
        let y = Subspace::from_orthonormal(e.subcols(1, 1).to_owned(), tol).unwrap();
        assert!((x.distance(&y).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(x.distance(&x).unwrap(), 0.0);
        let d = CMatrix::from_fn(2, 1, |_, _| c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let diag = Subspace::from_orthonormal(d, tol).unwrap();
        // Angle pi/4 between x and the diagonal.
        assert!((x.distance(&diag).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn complement_is_orthogonal() {
        let tol = RankTolerance::default();
        let mut rng = seeded(2);
        let s = Subspace::span(gaussian_matrix(&mut rng, 5, 2).as_ref(), tol).unwrap();
        let c = s.complement().unwrap();
        assert_eq!(c.dim(), 3);
        assert!((s.basis().adjoint() * c.basis()).norm_max() < 1e-12);
    }

    #[test]
    fn from_orthonormal_rejects_skewed_basis() {
        let m = CMatrix::from_fn(2, 2, |i, j| if i == 0 || i == j { ONE } else { ZERO });
        assert!(Subspace::from_orthonormal(m, RankTolerance::default()).is_err());
    }

    #[test]
    fn kron_small_example() {
        let a = CMatrix::from_fn(2, 2, |i, j| c((2 * i + j + 1) as f64, 0.0));
        let b = CMatrix::identity(2, 2);
        let k = kron(a.as_ref(), b.as_ref());
        assert_eq!(k[(0, 0)], c(1.0, 0.0));
        assert_eq!(k[(1, 1)], c(1.0, 0.0));
        assert_eq!(k[(0, 2)], c(2.0, 0.0));
        assert_eq!(k[(3, 1)], c(3.0, 0.0));
        assert_eq!(k[(3, 3)], c(4.0, 0.0));
        assert_eq!(k[(0, 1)], ZERO);
    }

    #[test]
    fn vec_unvec_roundtrip_and_identity() {
        let mut rng = seeded(9);
        let a = gaussian_matrix(&mut rng, 2, 3);
        let x = gaussian_matrix(&mut rng, 3, 4);
        let b = gaussian_matrix(&mut rng, 4, 2);
        let lhs = vec((&a * &x * &b).as_ref());
        let rhs = kron(b.transpose(), a.as_ref()) * vec(x.as_ref());
        assert!((&lhs - &rhs).norm_max() < 1e-12);
        let back = unvec(vec(x.as_ref()).as_ref(), 3, 4).unwrap();
        assert_eq!(back, x);
        assert!(unvec(vec(x.as_ref()).as_ref(), 5, 2).is_err());
    }

    #[test]
    fn commutant_dimensions() {
        let tol = RankTolerance::default();
        let mut rng = seeded(4);
        let a = gaussian_matrix(&mut rng, 4, 4);
        assert_eq!(commutant_dimension(&[a], &tol).unwrap(), 4);
        let b = gaussian_matrix(&mut rng, 3, 3);
        let b2 = gaussian_matrix(&mut rng, 3, 3);
        assert_eq!(commutant_dimension(&[b, b2], &tol).unwrap(), 1);
        assert_eq!(
            commutant_dimension(&[CMatrix::identity(5, 5)], &tol).unwrap(),
            25
        );
    }

    #[test]
    fn krylov_matrix_of_generic_pair_is_nonsingular() {
        // A generic matrix with a generic vector generates the whole space.
        let tol = RankTolerance::default();
        let mut rng = seeded(8);
        let a = gaussian_matrix(&mut rng, 5, 5);
        let b = gaussian_matrix(&mut rng, 5, 1);
        let mut k = CMatrix::zeros(5, 5);
        let mut v = b.clone();
        for j in 0..5 {
            k.subcols_mut(j, 1).copy_from(&v);
            v = &a * &v;
        }
        assert_eq!(kernel(k.as_ref(), &tol).unwrap().dim(), 0);
    }

    #[test]
    fn pseudoinverse_solves_consistent_system() {
        let tol = RankTolerance::default();
        let mut rng = seeded(12);
        let a = &gaussian_matrix(&mut rng, 5, 2) * &gaussian_matrix(&mut rng, 2, 4);
        let x = gaussian_matrix(&mut rng, 4, 1);
        let b = &a * &x;
        let sol = pseudoinverse(a.as_ref(), &tol).unwrap() * &b;
        assert!((&a * &sol - &b).norm_max() < 1e-10);
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let mut rng = seeded(6);
        let g = gaussian_matrix(&mut rng, 4, 4);
        let h = &g + g.adjoint();
        let (vals, vecs) = hermitian_eigen(h.as_ref()).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_fn(4, 4, |i, j| if i == j { c(vals[i], 0.0) } else { ZERO });
        let rec = &vecs * d * vecs.adjoint();
        assert!((&rec - &h).norm_max() < 1e-12);
        assert!(is_hermitian(h.as_ref(), 1e-14));
    }

    #[test]
    fn near_threshold_flag() {
        let dec = RankDecision::from_values(vec![1.0, 5e-10], 1e-10);
        assert!(dec.near_threshold());
        assert_eq!(dec.rank, 2);
        let dec = RankDecision::from_values(vec![1.0, 1e-17], 1e-10);
        assert!(!dec.near_threshold());
        assert!(dec.gap() > 1e16);
    }
}
