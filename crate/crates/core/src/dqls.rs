//! Geometric DQLS decider.
//!
//! For a state `ψ` and neighborhoods `N_j`, the subspace every quasi-local
//! stabilizer of `ψ` must leave invariant is
//! `H₀ = ∩_j (Σ_{N_j}(ψ) ⊗ H_{N̄_j})`, where `Σ_{N_j}` is the support of the
//! reduced state on `N_j`. `ψ` is stabilizable exactly when `H₀` is the ray
//! through `ψ`.

use serde::{Deserialize, Serialize};

use crate::error::{DqlsError, Result};
use crate::linalg::{
    intersect_all, pseudoinverse, range_with_decision, svd_rank, CMatrix, RankDecision,
    RankTolerance, Subspace, SubspaceLike, C64,
};
use crate::locality::NeighborhoodStructure;
use crate::state::{PureState, Split};

/// Largest total dimension for which `H₀` is formed explicitly.
pub const MAX_TOTAL_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Geometric,
    TripartiteAlgebraic,
    Determinant,
}

/// Schmidt span of `s` on `subset`: the range of the reduced state there.
pub fn schmidt_span(s: &PureState, subset: &[usize], tol: &RankTolerance) -> Result<Subspace> {
    Ok(schmidt_span_with_decision(s, subset, tol)?.0)
}

pub(crate) fn schmidt_span_with_decision(
    s: &PureState,
    subset: &[usize],
    tol: &RankTolerance,
) -> Result<(Subspace, RankDecision)> {
    let m = s.bipartition_matrix(subset)?;
    range_with_decision(m.as_ref(), tol)
}

/// `Σ ⊗ H_rest` for a span `Σ` on a group of subsystems, kept in factored
/// form so that projections never materialize the full basis.
pub struct ExtendedSpan {
    split: Split,
    local: Subspace,
}

impl ExtendedSpan {
    pub fn new(dims: &[usize], subset: &[usize], local: Subspace) -> Result<Self> {
        let split = Split::new(dims, subset)?;
        if local.ambient_dim() != split.d_keep {
            return Err(DqlsError::DimensionMismatch(format!(
                "local span lives in dimension {}, neighborhood has {}",
                local.ambient_dim(),
                split.d_keep
            )));
        }
        Ok(ExtendedSpan { split, local })
    }

    pub fn local(&self) -> &Subspace {
        &self.local
    }
}

impl SubspaceLike for ExtendedSpan {
    fn ambient_dim(&self) -> usize {
        self.split.d_keep * self.split.d_rest
    }

    fn dim(&self) -> usize {
        self.local.dim() * self.split.d_rest
    }

    fn basis_matrix(&self) -> CMatrix {
        let dr = self.split.d_rest;
        let u = self.local.basis();
        let mut out = CMatrix::zeros(self.ambient_dim(), self.dim());
        for s in 0..u.ncols() {
            for r in 0..dr {
                for k in 0..u.nrows() {
                    out[(self.split.canonical(k, r), s * dr + r)] = u[(k, s)];
                }
            }
        }
        out
    }

    fn residual_of(&self, q: faer::MatRef<'_, C64>) -> CMatrix {
        let m = self.split.reshape_columns(q);
        let r = self.local.residual(m.as_ref());
        self.split.flatten_columns(r.as_ref(), q.ncols())
    }
}

#[derive(Clone, Debug)]
pub struct DqlsVerdict {
    pub dim_h0: usize,
    pub h0_basis: Subspace,
    pub is_dqls: bool,
    pub method: Method,
    pub tol_used: RankTolerance,
    /// `<ψ|Π(H₀)|ψ> / <ψ|ψ>`.
    pub target_overlap: f64,
    /// Some rank decision along the way had a singular value close to the
    /// cut-off.
    pub near_threshold: bool,
}

fn check_size(s: &PureState) -> Result<()> {
    if s.total_dim() > MAX_TOTAL_DIM {
        return Err(DqlsError::TooLarge(format!(
            "total dimension {} exceeds {MAX_TOTAL_DIM}",
            s.total_dim()
        )));
    }
    Ok(())
}

/// `H₀` relative to arbitrary (not necessarily proper or complete) sets of
/// subsystems.
pub(crate) fn h0_of_sets(
    s: &PureState,
    sets: &[Vec<usize>],
    tol: &RankTolerance,
) -> Result<(Subspace, bool)> {
    check_size(s)?;
    if s.norm() == 0.0 {
        return Err(DqlsError::InvalidState(
            "zero vector has no Schmidt spans".into(),
        ));
    }
    let mut spans = Vec::with_capacity(sets.len());
    let mut near = false;
    for set in sets {
        let (local, dec) = schmidt_span_with_decision(s, set, tol)?;
        near |= dec.near_threshold();
        spans.push(ExtendedSpan::new(s.dims(), set, local)?);
    }
    let refs: Vec<&dyn SubspaceLike> = spans.iter().map(|e| e as &dyn SubspaceLike).collect();
    let (h0, dec) = intersect_all(&refs, tol)?;
    near |= dec.is_some_and(|d| d.near_threshold());
    Ok((h0, near))
}

fn check_structure(s: &PureState, ns: &NeighborhoodStructure) -> Result<()> {
    if ns.n() != s.n_subsystems() {
        return Err(DqlsError::DimensionMismatch(format!(
            "structure on {} subsystems, state has {}",
            ns.n(),
            s.n_subsystems()
        )));
    }
    Ok(())
}

/// Computes `H₀(ψ)` relative to `ns`.
pub fn dqls_subspace(
    s: &PureState,
    ns: &NeighborhoodStructure,
    tol: &RankTolerance,
) -> Result<DqlsVerdict> {
    check_structure(s, ns)?;
    let (h0, near_threshold) = h0_of_sets(s, ns.neighborhoods(), tol)?;
    let col = s.to_column();
    let proj = h0.project(col.as_ref());
    let target_overlap = proj.squared_norm_l2() / col.squared_norm_l2();
    Ok(DqlsVerdict {
        dim_h0: h0.dim(),
        is_dqls: h0.dim() == 1,
        h0_basis: h0,
        method: Method::Geometric,
        tol_used: *tol,
        target_overlap,
        near_threshold,
    })
}

/// Applies the local operator `ops[k]` to subsystem `k` for every `k`.
pub fn slocc_transform(s: &PureState, ops: &[CMatrix]) -> Result<PureState> {
    if ops.len() != s.n_subsystems() {
        return Err(DqlsError::DimensionMismatch(format!(
            "{} operators for {} subsystems",
            ops.len(),
            s.n_subsystems()
        )));
    }
    let tol = RankTolerance::default();
    let mut out = s.clone();
    for (k, op) in ops.iter().enumerate() {
        let d = s.dims()[k];
        if op.nrows() != d || op.ncols() != d {
            return Err(DqlsError::DimensionMismatch(format!(
                "operator {k} is {}x{}, subsystem has dimension {d}",
                op.nrows(),
                op.ncols()
            )));
        }
        if svd_rank(op.as_ref(), &tol)? < d {
            return Err(DqlsError::SingularSlocc(format!(
                "operator {k} is not invertible"
            )));
        }
        out = out.apply_local(k, op.as_ref())?;
    }
    Ok(out)
}

/// Outcome of [`membership_witnesses`].
#[derive(Clone, Debug)]
pub enum Membership {
    /// One operator per neighborhood, acting on that neighborhood's
    /// complement, with `(I ⊗ X_j) ψ = ψ'`.
    Member {
        witnesses: Vec<CMatrix>,
        max_residual: f64,
    },
    NotMember {
        neighborhood: usize,
        residual: f64,
    },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }
}

/// Looks for operators `X_j` on the complement of each `N_j` with
/// `(I_{N_j} ⊗ X_j) ψ = ψ'`; such operators exist for every `j` exactly
/// when `ψ' ∈ H₀(ψ)`. Each system is solved by minimum-norm least squares
/// and accepted when its relative residual stays below the tolerance's
/// unit-scale cut-off.
pub fn membership_witnesses(
    s: &PureState,
    s_prime: &PureState,
    ns: &NeighborhoodStructure,
    tol: &RankTolerance,
) -> Result<Membership> {
    if s.dims() != s_prime.dims() {
        return Err(DqlsError::DimensionMismatch(
            "states live in different spaces".into(),
        ));
    }
    check_structure(s, ns)?;
    let target_norm = s_prime.norm();
    let mut witnesses = Vec::with_capacity(ns.len());
    let mut max_residual: f64 = 0.0;
    for (j, nb) in ns.neighborhoods().iter().enumerate() {
        let psi = s.bipartition_matrix(nb)?;
        let psi_p = s_prime.bipartition_matrix(nb)?;
        // (I ⊗ X) ψ reshapes to Ψ Xᵀ.
        let y = pseudoinverse(psi.as_ref(), tol)? * &psi_p;
        let diff = &psi * &y - &psi_p;
        let residual = if target_norm > 0.0 {
            diff.norm_l2() / target_norm
        } else {
            diff.norm_l2()
        };
        let cut = tol.threshold(1.0, psi.nrows(), psi.ncols());
        if residual > cut {
            return Ok(Membership::NotMember {
                neighborhood: j,
                residual,
            });
        }
        max_residual = max_residual.max(residual);
        witnesses.push(y.transpose().to_owned());
    }
    Ok(Membership::Member {
        witnesses,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::rng::{gaussian_matrix, seeded};
    use crate::state::{named_state, random_state, NamedState};

    fn tol() -> RankTolerance {
        RankTolerance::default()
    }

    fn chain3() -> NeighborhoodStructure {
        NeighborhoodStructure::from_one_based(3, &[&[1, 2], &[2, 3]]).unwrap()
    }

    fn ghz3() -> PureState {
        named_state(&NamedState::Ghz { n: 3, d: 2 }).unwrap()
    }

    #[test]
    fn schmidt_span_examples() {
        let p = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        let sp = schmidt_span(&p, &[0, 1], &tol()).unwrap();
        assert_eq!(sp.dim(), 1);
        assert!((sp.basis()[(0, 0)].norm() - 1.0).abs() < 1e-15);

        let sp = schmidt_span(&ghz3(), &[0, 1], &tol()).unwrap();
        assert_eq!(sp.dim(), 2);
        let e = CMatrix::identity(4, 4);
        let expected = CMatrix::from_fn(4, 2, |i, j| e[(i, if j == 0 { 0 } else { 3 })]);
        let expected = Subspace::from_orthonormal(expected, tol()).unwrap();
        assert!(sp.approx_eq(&expected, 1e-12).unwrap());

        for seed in 0..20 {
            let r = random_state(&[2, 2, 3], seed).unwrap();
            assert_eq!(schmidt_span(&r, &[0, 1], &tol()).unwrap().dim(), 3);
        }
    }

    #[test]
    fn product_state_is_dqls() {
        let p = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        let v = dqls_subspace(&p, &chain3(), &tol()).unwrap();
        assert_eq!(v.dim_h0, 1);
        assert!(v.is_dqls);
        assert!((v.target_overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_and_w_have_two_dimensional_h0() {
        let v = dqls_subspace(&ghz3(), &chain3(), &tol()).unwrap();
        assert_eq!(v.dim_h0, 2);
        assert!(!v.is_dqls);
        let e = CMatrix::identity(8, 8);
        let expected = CMatrix::from_fn(8, 2, |i, j| e[(i, if j == 0 { 0 } else { 7 })]);
        let expected = Subspace::from_orthonormal(expected, tol()).unwrap();
        assert!(v.h0_basis.approx_eq(&expected, 1e-12).unwrap());

        let w = named_state(&NamedState::W { n: 3 }).unwrap();
        assert_eq!(dqls_subspace(&w, &chain3(), &tol()).unwrap().dim_h0, 2);
    }

    #[test]
    fn dicke_is_dqls_under_two_triples() {
        let d = named_state(&NamedState::Dicke { n: 4, k: 2 }).unwrap();
        let ns = NeighborhoodStructure::from_one_based(4, &[&[1, 2, 3], &[2, 3, 4]]).unwrap();
        let v = dqls_subspace(&d, &ns, &tol()).unwrap();
        assert_eq!(v.dim_h0, 1);
        assert!((v.target_overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extended_span_matches_explicit_kron() {
        // Oracle: build Σ ⊗ I with a plain Kronecker product after moving
        // the neighborhood to the front, then undo the permutation.
        let s = random_state(&[2, 3, 2], 3).unwrap();
        let subset = [0, 2];
        let local = schmidt_span(&s, &subset, &tol()).unwrap();
        let ext = ExtendedSpan::new(s.dims(), &subset, local.clone()).unwrap();
        let kr = crate::linalg::kron(local.basis().as_ref(), CMatrix::identity(3, 3).as_ref());
        // Front-permuted order is (0, 2, 1); map each column back.
        let mut oracle = CMatrix::zeros(12, kr.ncols());
        for c in 0..kr.ncols() {
            let col: Vec<C64> = (0..12).map(|i| kr[(i, c)]).collect();
            let st = PureState::new(vec![2, 2, 3], col)
                .unwrap()
                .permute(&[0, 2, 1])
                .unwrap();
            for i in 0..12 {
                oracle[(i, c)] = st.amplitudes()[i];
            }
        }
        let got = Subspace::from_orthonormal(ext.basis_matrix(), tol()).unwrap();
        let want = Subspace::from_orthonormal(oracle, tol()).unwrap();
        assert!(got.approx_eq(&want, 1e-12).unwrap());
        let mut rng = seeded(1);
        let q = gaussian_matrix(&mut rng, 12, 3);
        assert!((ext.residual_of(q.as_ref()) - want.residual(q.as_ref())).norm_max() < 1e-12);
    }

    #[test]
    fn structure_size_must_match() {
        let s = random_state(&[2, 2, 2, 2], 0).unwrap();
        assert!(matches!(
            dqls_subspace(&s, &chain3(), &tol()),
            Err(DqlsError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn ceiling_is_enforced() {
        let s = random_state(&[2; 13], 0).unwrap();
        let ns = NeighborhoodStructure::all_pairs(13).unwrap();
        assert!(matches!(
            dqls_subspace(&s, &ns, &tol()),
            Err(DqlsError::TooLarge(_))
        ));
    }

    #[test]
    fn slocc_identity_and_singular() {
        let s = random_state(&[2, 2, 3], 1).unwrap();
        let ids: Vec<CMatrix> = s.dims().iter().map(|&d| CMatrix::identity(d, d)).collect();
        assert_eq!(slocc_transform(&s, &ids).unwrap(), s);
        let mut bad = ids.clone();
        bad[1] = CMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 0 { ONE } else { ZERO });
        assert!(matches!(
            slocc_transform(&s, &bad),
            Err(DqlsError::SingularSlocc(_))
        ));
    }

    #[test]
    fn slocc_preserves_ghz_h0_dimension() {
        let mut rng = seeded(17);
        let ops: Vec<CMatrix> = (0..3).map(|_| gaussian_matrix(&mut rng, 2, 2)).collect();
        let t = slocc_transform(&ghz3(), &ops).unwrap();
        assert_eq!(dqls_subspace(&t, &chain3(), &tol()).unwrap().dim_h0, 2);
    }

    #[test]
    fn witnesses_for_members_and_non_members() {
        let g = ghz3();
        match membership_witnesses(&g, &g, &chain3(), &tol()).unwrap() {
            Membership::Member {
                witnesses,
                max_residual,
            } => {
                assert!(max_residual < 1e-14);
                assert_eq!(witnesses.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        let zero = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        let m = membership_witnesses(&g, &zero, &chain3(), &tol()).unwrap();
        match &m {
            Membership::Member {
                witnesses,
                max_residual,
            } => {
                assert!(*max_residual < 1e-10);
                // The witness really maps ψ to ψ'.
                let applied = g.apply_local(2, witnesses[0].as_ref()).unwrap();
                assert!(applied.fidelity(&zero).unwrap() > 1.0 - 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let one = PureState::basis(vec![2, 2, 2], &[0, 0, 1]).unwrap();
        assert!(!membership_witnesses(&g, &one, &chain3(), &tol())
            .unwrap()
            .is_member());
    }
}
