//! Tripartite analysis for the structure `{ab, bc}`.
//!
//! Writing `ψ = Σ_i φ_i ⊗ |i>_b` and reshaping each `φ_i` into a
//! `d_a x d_c` matrix `A_i`, the DQLS subspace is in bijection with the
//! solutions of `X_a A_i = A_i X_cᵀ` (for all `i`) whenever both outer
//! marginals have full rank. The module computes that solution space three
//! ways: as the nullity of a Kronecker coefficient matrix, as the smallest
//! singular value of `ψ` pushed through the local operator space, and via
//! the geometric engine, and adds the closed-form predictions known for
//! these dimensions.

use serde::{Deserialize, Serialize};

use crate::dqls::{dqls_subspace, MAX_TOTAL_DIM};
use crate::error::{DqlsError, Result};
use crate::linalg::{
    kron, rank_decision, singular_values, svd_rank, CMatrix, RankTolerance, C64, ONE, ZERO,
};
use crate::locality::NeighborhoodStructure;
use crate::state::PureState;

fn require_three(s: &PureState) -> Result<(usize, usize, usize)> {
    match s.dims() {
        &[a, b, c] => Ok((a, b, c)),
        d => Err(DqlsError::InvalidState(format!(
            "expected three subsystems, got {}",
            d.len()
        ))),
    }
}

/// Swaps the outer subsystems when `d_a > d_c`; returns whether it did.
pub fn orient(s: &PureState) -> Result<(PureState, bool)> {
    let (a, _, c) = require_three(s)?;
    if a > c {
        Ok((s.permute(&[2, 1, 0])?, true))
    } else {
        Ok((s.clone(), false))
    }
}

/// `A_i[h, j] = ψ[h, i, j]`, one `d_a x d_c` slice per basis state of `b`.
pub fn build_slices(s: &PureState) -> Result<Vec<CMatrix>> {
    let (da, db, dc) = require_three(s)?;
    let amp = s.amplitudes();
    Ok((0..db)
        .map(|i| CMatrix::from_fn(da, dc, |h, j| amp[(h * db + i) * dc + j]))
        .collect())
}

fn slice_dims(slices: &[CMatrix]) -> Result<(usize, usize)> {
    let first = slices
        .first()
        .ok_or_else(|| DqlsError::InvalidParameter("no slices".into()))?;
    let (da, dc) = (first.nrows(), first.ncols());
    if slices.iter().any(|a| a.nrows() != da || a.ncols() != dc) {
        return Err(DqlsError::DimensionMismatch(
            "slices differ in shape".into(),
        ));
    }
    if da > dc {
        return Err(DqlsError::PreconditionFailed(format!(
            "slices are {da}x{dc}; orient the state so that d_a <= d_c"
        )));
    }
    Ok((da, dc))
}

/// Slices after the local change of basis that turns `A_0` into `[I | 0]`.
#[derive(Clone, Debug)]
pub struct SloccCanonical {
    pub slices: Vec<CMatrix>,
    pub m_a: CMatrix,
    pub m_c: CMatrix,
}

/// With `A_0 = U Σ Wᴴ`, takes `M_a = Σ⁻¹ Uᴴ` and `M_c = Wᵀ` so that
/// `M_a A_0 M_cᵀ = [I | 0]`, and maps every slice to `M_a A_i M_cᵀ`.
pub fn slocc_canonical(slices: &[CMatrix], tol: &RankTolerance) -> Result<SloccCanonical> {
    let (da, dc) = slice_dims(slices)?;
    let a0 = &slices[0];
    let svd = a0
        .svd()
        .map_err(|e| DqlsError::InvalidMatrix(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    let thr = tol.threshold(sv[0], da, dc);
    let rank = sv.iter().filter(|&&x| x > thr).count();
    if rank < da {
        return Err(DqlsError::SloccDegenerate(format!(
            "A_0 has rank {rank} < {da}"
        )));
    }
    let u = svd.U();
    let w = svd.V();
    let m_a = CMatrix::from_fn(da, da, |k, h| u[(h, k)].conj() / sv[k]);
    let m_c = w.transpose().to_owned();
    let out = slices.iter().map(|a| &m_a * a * w).collect();
    Ok(SloccCanonical {
        slices: out,
        m_a,
        m_c,
    })
}

/// Stacks `[A_iᵀ ⊗ I_{d_a}, -(I_{d_c} ⊗ A_i)]` over all slices; the kernel
/// holds `(vec X_a, vec X_cᵀ)` with `X_a A_i = A_i X_cᵀ` for every `i`.
pub fn coefficient_matrix(slices: &[CMatrix]) -> Result<CMatrix> {
    let (da, dc) = slice_dims(slices)?;
    let rows = da * dc;
    let (ia, ic) = (CMatrix::identity(da, da), CMatrix::identity(dc, dc));
    let mut out = CMatrix::zeros(rows * slices.len(), da * da + dc * dc);
    for (i, a) in slices.iter().enumerate() {
        let left = kron(a.transpose(), ia.as_ref());
        let right = kron(ic.as_ref(), a.as_ref());
        out.submatrix_mut(i * rows, 0, rows, da * da)
            .copy_from(&left);
        out.submatrix_mut(i * rows, da * da, rows, dc * dc)
            .copy_from(&(-right));
    }
    Ok(out)
}

pub fn coefficient_nullity(slices: &[CMatrix], tol: &RankTolerance) -> Result<usize> {
    let c = coefficient_matrix(slices)?;
    Ok(c.ncols() - svd_rank(c.as_ref(), tol)?)
}

/// Reduced system for a qubit middle subsystem in canonical form.
///
/// With `A_0 = [I | 0]` and `A_1 = [A_00 | A_0d]` the conditions become
/// `X_a A_0d = A_0d Y` and `X_a A_00 - A_00 X_a = A_0d Z` in the unknowns
/// `(vec X_a, vec Y, vec Z)`, with `Y` of size `d̄ x d̄` and `Z` of size
/// `d̄ x d_a`.
pub fn qubit_block_matrix(a1: &CMatrix) -> Result<CMatrix> {
    let (da, dc) = (a1.nrows(), a1.ncols());
    if dc <= da {
        return Err(DqlsError::PreconditionFailed(
            "reduced system needs d_c > d_a".into(),
        ));
    }
    let dbar = dc - da;
    let a00 = a1.subcols(0, da);
    let a0d = a1.subcols(da, dbar);
    let ia = CMatrix::identity(da, da);
    let ib = CMatrix::identity(dbar, dbar);
    let (r1, r2) = (dbar * da, da * da);
    let (c1, c2, c3) = (da * da, dbar * dbar, dbar * da);
    let mut out = CMatrix::zeros(r1 + r2, c1 + c2 + c3);
    out.submatrix_mut(0, 0, r1, c1)
        .copy_from(&kron(a0d.transpose(), ia.as_ref()));
    out.submatrix_mut(0, c1, r1, c2)
        .copy_from(&(-kron(ib.as_ref(), a0d)));
    let comm = kron(a00.transpose(), ia.as_ref()) - kron(ia.as_ref(), a00);
    out.submatrix_mut(r1, 0, r2, c1).copy_from(&comm);
    out.submatrix_mut(r1, c1 + c2, r2, c3)
        .copy_from(&(-kron(ia.as_ref(), a0d)));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoGo {
    pub applies: bool,
    /// `d_a²` when the no-go applies.
    pub predicted_dim: Option<usize>,
}

/// When `d_a d_b <= d_c` a generic state has `dim H₀ = d_a²`.
pub fn nogo_check(da: usize, db: usize, dc: usize) -> NoGo {
    let (da, dc) = (da.min(dc), da.max(dc));
    let applies = da * db <= dc;
    NoGo {
        applies,
        predicted_dim: applies.then_some(da * da),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminantTest {
    /// Smallest singular value of `[t_1 ψ, ..., t_m ψ]` for an orthonormal
    /// basis `t_k` of the local operator space; zero when `m > d`.
    pub sigma_min: f64,
    pub threshold: f64,
    pub is_dqls: bool,
}

/// Orthonormal traceless diagonal matrices (generalized Gell-Mann).
fn traceless_diagonals(d: usize) -> Vec<Vec<f64>> {
    (1..d)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            (0..d)
                .map(|m| {
                    if m < k {
                        1.0 / norm
                    } else if m == k {
                        -(k as f64) / norm
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Tests whether some non-scalar `X_a ⊗ I ⊗ I + I ⊗ I ⊗ X_c` annihilates `ψ`
/// by the smallest singular value of its action on `ψ`. The operator space
/// has dimension `d_a² + d_c² - 1`.
pub fn determinant_test(s: &PureState, tol: &RankTolerance) -> Result<DeterminantTest> {
    let (da, db, dc) = require_three(s)?;
    if da > dc || da * db <= dc {
        return Err(DqlsError::PreconditionFailed(format!(
            "needs d_a <= d_c < d_a d_b, got ({da}, {db}, {dc})"
        )));
    }
    let psi = s.normalized()?;
    let amp = psi.amplitudes();
    let d = amp.len();
    let inner = db * dc;
    let m = da * da + dc * dc - 1;
    let mut g = CMatrix::zeros(d, m);
    let mut col = 0;
    // E_hk ⊗ I ⊗ I / sqrt(d_b d_c): row block h receives block k of ψ.
    let sa = 1.0 / (inner as f64).sqrt();
    for h in 0..da {
        for k in 0..da {
            for r in 0..inner {
                g[(h * inner + r, col)] = amp[k * inner + r] * sa;
            }
            col += 1;
        }
    }
    // I ⊗ I ⊗ X_c / sqrt(d_a d_b) for traceless orthonormal X_c.
    let outer = da * db;
    let sc = 1.0 / (outer as f64).sqrt();
    for j in 0..dc {
        for l in 0..dc {
            if j == l {
                continue;
            }
            for o in 0..outer {
                g[(o * dc + j, col)] = amp[o * dc + l] * sc;
            }
            col += 1;
        }
    }
    for diag in traceless_diagonals(dc) {
        for o in 0..outer {
            for j in 0..dc {
                g[(o * dc + j, col)] = amp[o * dc + j] * (diag[j] * sc);
            }
        }
        col += 1;
    }
    debug_assert_eq!(col, m);
    let sv = singular_values(g.as_ref())?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = tol.threshold(smax, d, m);
    let sigma_min = if d < m {
        0.0
    } else {
        *sv.last().unwrap_or(&0.0)
    };
    Ok(DeterminantTest {
        sigma_min,
        threshold,
        is_dqls: sigma_min > threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Dqls,
    NotDqls,
    Unknown,
}

/// Which known result a prediction rests on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `d_a d_b <= d_c`.
    NoGo,
    /// Qubit middle, `d_c = d_a`: `dim H₀ = d_a`.
    QubitMiddleSquare,
    /// Qubit middle, `d_c = d_a + 1`.
    QubitMiddleAdjacent,
    /// Qubit middle otherwise: `dim H₀ = min(d_a², d̄²)`.
    QubitMiddleOther,
    /// `d_c = d_a`, `d_b > 2`.
    EqualOuter,
    /// `d_c = d_a + 1`, `d_b > 2`.
    AdjacentOuter,
    /// `d_c = n d_a` with `1 < n < d_b`.
    MultipleOuter,
    /// DQLS already for a smaller middle dimension.
    LargerMiddle,
    /// DQLS of `(d_a, d_b - 1, d̄)` lifts to `(d_a, d_b, d_a + d̄)`.
    Lift,
    /// Conjectured rule for `d_a <= d_b`.
    ConjectureSmallOuter,
    /// Conjectured rule for `d_a > d_b`.
    ConjectureLargeOuter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub verdict: Verdict,
    pub rule: Rule,
    pub conjectural: bool,
    /// Closed-form `dim H₀` when one is known.
    pub dim_h0: Option<usize>,
}

impl Prediction {
    fn proven(verdict: Verdict, rule: Rule, dim_h0: Option<usize>) -> Self {
        Prediction {
            verdict,
            rule,
            conjectural: false,
            dim_h0,
        }
    }
}

fn proven(da: usize, db: usize, dc: usize) -> Option<Prediction> {
    let (da, dc) = (da.min(dc), da.max(dc));
    if da * db <= dc {
        return Some(Prediction::proven(
            Verdict::NotDqls,
            Rule::NoGo,
            Some(da * da),
        ));
    }
    if db == 2 {
        let dbar = dc - da;
        return Some(match dbar {
            0 => Prediction::proven(Verdict::NotDqls, Rule::QubitMiddleSquare, Some(da)),
            1 => Prediction::proven(Verdict::Dqls, Rule::QubitMiddleAdjacent, Some(1)),
            _ => Prediction::proven(
                Verdict::NotDqls,
                Rule::QubitMiddleOther,
                Some((da * da).min(dbar * dbar)),
            ),
        });
    }
    let dqls = |rule| Some(Prediction::proven(Verdict::Dqls, rule, Some(1)));
    if dc == da {
        return dqls(Rule::EqualOuter);
    }
    if dc == da + 1 {
        return dqls(Rule::AdjacentOuter);
    }
    if dc % da == 0 && dc / da > 1 && dc / da < db {
        return dqls(Rule::MultipleOuter);
    }
    let is_dqls = |p: Option<Prediction>| p.is_some_and(|p| p.verdict == Verdict::Dqls);
    if (2..db).any(|b| is_dqls(proven(da, b, dc))) {
        return dqls(Rule::LargerMiddle);
    }
    let dbar = dc - da;
    if dbar > 0 && dbar < da * (db - 1) && is_dqls(proven(da, db - 1, dbar)) {
        return dqls(Rule::Lift);
    }
    None
}

/// Generic-state prediction for `(d_a, d_b, d_c)`: a proven result when one
/// applies, otherwise the conjectured boundary (flagged as conjectural).
/// Below the boundary the conjecture predicts DQLS; in the band
/// `d_a d_b - ⌊d_a/d_b⌋ <= d_c < d_a d_b` it predicts failure.
pub fn predict(da: usize, db: usize, dc: usize) -> Prediction {
    let (da, dc) = (da.min(dc), da.max(dc));
    if da == 0 || db < 2 {
        return Prediction {
            verdict: Verdict::Unknown,
            rule: Rule::ConjectureSmallOuter,
            conjectural: true,
            dim_h0: None,
        };
    }
    if let Some(p) = proven(da, db, dc) {
        return p;
    }
    let (verdict, rule) = if da <= db {
        (Verdict::Dqls, Rule::ConjectureSmallOuter)
    } else if dc < da * db - da / db {
        (Verdict::Dqls, Rule::ConjectureLargeOuter)
    } else {
        (Verdict::NotDqls, Rule::ConjectureLargeOuter)
    };
    Prediction {
        verdict,
        rule,
        conjectural: true,
        dim_h0: (verdict == Verdict::Dqls).then_some(1),
    }
}

/// Which of the optional routes [`analyze`] runs.
#[derive(Clone, Copy, Debug)]
pub struct AnalyzeOptions {
    pub geometric: bool,
    pub determinant: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            geometric: true,
            determinant: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TripartiteReport {
    /// Dimensions after orientation, so `d_a <= d_c`.
    pub dims: (usize, usize, usize),
    pub swapped: bool,
    pub d_bar: usize,
    #[serde(skip)]
    pub a_slices: Vec<CMatrix>,
    pub slocc_applied: bool,
    #[serde(skip)]
    pub m_a: Option<CMatrix>,
    #[serde(skip)]
    pub m_c: Option<CMatrix>,
    pub nogo: NoGo,
    /// Both outer marginals have full rank, which makes the coefficient
    /// nullity equal to `dim H₀`.
    pub marginals_full_rank: bool,
    pub coeff_nullity: usize,
    pub dim_h0_algebraic: Option<usize>,
    pub dim_h0_geometric: Option<usize>,
    pub determinant: Option<DeterminantTest>,
    pub predicted: Prediction,
    /// Best available `dim H₀` (algebraic, else geometric).
    pub dim_h0: Option<usize>,
    pub is_dqls: Option<bool>,
    /// Every pair of routes that ran agreed.
    pub methods_agree: bool,
}

/// Runs every applicable route on a three-part state.
pub fn analyze(
    s: &PureState,
    tol: &RankTolerance,
    opts: AnalyzeOptions,
) -> Result<TripartiteReport> {
    let (s, swapped) = orient(s)?;
    let (da, db, dc) = require_three(&s)?;
    if s.norm() == 0.0 {
        return Err(DqlsError::InvalidState("zero vector".into()));
    }
    let slices = build_slices(&s)?;
    let (slocc_applied, m_a, m_c) = match slocc_canonical(&slices, tol) {
        Ok(c) => (true, Some(c.m_a), Some(c.m_c)),
        Err(DqlsError::SloccDegenerate(_)) => (false, None, None),
        Err(e) => return Err(e),
    };
    let rank_a = rank_decision(s.bipartition_matrix(&[0])?.as_ref(), tol)?.rank;
    let rank_c = rank_decision(s.bipartition_matrix(&[2])?.as_ref(), tol)?.rank;
    let marginals_full_rank = rank_a == da && rank_c == dc;
    let coeff_nullity = coefficient_nullity(&slices, tol)?;
    let dim_h0_algebraic = marginals_full_rank.then_some(coeff_nullity);

    let dim_h0_geometric = if opts.geometric && s.total_dim() <= MAX_TOTAL_DIM {
        let ns = NeighborhoodStructure::new(3, vec![vec![0, 1], vec![1, 2]])?;
        Some(dqls_subspace(&s, &ns, tol)?.dim_h0)
    } else {
        None
    };
    let determinant = if opts.determinant && da * db > dc {
        Some(determinant_test(&s, tol)?)
    } else {
        None
    };

    let dim_h0 = dim_h0_algebraic.or(dim_h0_geometric);
    let mut methods_agree = true;
    if let (Some(a), Some(g)) = (dim_h0_algebraic, dim_h0_geometric) {
        methods_agree &= a == g;
    }
    if let (Some(det), Some(dim)) = (determinant, dim_h0) {
        methods_agree &= det.is_dqls == (dim == 1);
    }
    Ok(TripartiteReport {
        dims: (da, db, dc),
        swapped,
        d_bar: dc - da,
        a_slices: slices,
        slocc_applied,
        m_a,
        m_c,
        nogo: nogo_check(da, db, dc),
        marginals_full_rank,
        coeff_nullity,
        dim_h0_algebraic,
        dim_h0_geometric,
        determinant,
        predicted: predict(da, db, dc),
        dim_h0,
        is_dqls: dim_h0.map(|d| d == 1),
        methods_agree,
    })
}

/// `[I | 0]` of size `d_a x d_c`.
pub fn padded_identity(da: usize, dc: usize) -> CMatrix {
    CMatrix::from_fn(da, dc, |i, j| if i == j { ONE } else { ZERO })
}

/// Helper for callers that only hold amplitudes.
pub fn slices_of(dims: (usize, usize, usize), amplitudes: Vec<C64>) -> Result<Vec<CMatrix>> {
    build_slices(&PureState::new(vec![dims.0, dims.1, dims.2], amplitudes)?)
}
