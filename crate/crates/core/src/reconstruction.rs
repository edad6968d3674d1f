//! Recovering a pure state from the supports of its reduced states.
//!
//! The only candidates compatible with the supports `Σ_j` on neighborhoods
//! `N_j` are the vectors of `∩_j (Σ_j ⊗ H_rest)`; when that intersection is
//! a line, the state is determined up to phase.

use serde::Serialize;

use crate::dqls::{dqls_subspace, schmidt_span, ExtendedSpan};
use crate::error::{DqlsError, Result};
use crate::linalg::{intersect_all, RankTolerance, Subspace, SubspaceLike, C64};
use crate::locality::{uncovered, NeighborhoodStructure};
use crate::state::{named_state, random_state, validate_index_set, NamedState, PureState};

/// Support of the reduced state on `neighborhood` (0-based, increasing),
/// as a subspace of that neighborhood's factor space.
#[derive(Clone, Debug)]
pub struct SupportInput {
    pub neighborhood: Vec<usize>,
    pub support: Subspace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Unique,
    NotUnique,
    Inconsistent,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub status: Status,
    /// The reconstructed state when unique, phase-fixed.
    pub state: Option<PureState>,
    pub candidate_space: Subspace,
    /// Filled in by callers that know the true state.
    pub fidelity_to_truth: Option<f64>,
}

/// Supports of `s` on each of `neighborhoods`.
pub fn supports_of(
    s: &PureState,
    neighborhoods: &[Vec<usize>],
    tol: &RankTolerance,
) -> Result<Vec<SupportInput>> {
    neighborhoods
        .iter()
        .map(|nb| {
            Ok(SupportInput {
                neighborhood: nb.clone(),
                support: schmidt_span(s, nb, tol)?,
            })
        })
        .collect()
}

/// Multiplies by a phase so that the largest-magnitude amplitude (first
/// one on ties) is real and positive.
pub fn fix_phase(s: &PureState) -> PureState {
    let amp = s.amplitudes();
    let mut best = 0;
    for (i, z) in amp.iter().enumerate() {
        if z.norm() > amp[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let z = amp[best];
    if z.norm() == 0.0 {
        return s.clone();
    }
    s.scaled(z.conj() / z.norm())
}

pub fn reconstruct(
    dims: &[usize],
    inputs: &[SupportInput],
    tol: &RankTolerance,
) -> Result<ReconstructionResult> {
    let n = dims.len();
    let mut spans = Vec::with_capacity(inputs.len());
    for inp in inputs {
        validate_index_set(&inp.neighborhood, n)?;
        if inp.neighborhood.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DqlsError::InvalidIndexSet(format!(
                "neighborhood {:?} is not increasing",
                inp.neighborhood
            )));
        }
        spans.push(ExtendedSpan::new(
            dims,
            &inp.neighborhood,
            inp.support.clone(),
        )?);
    }
    let sets: Vec<Vec<usize>> = inputs.iter().map(|i| i.neighborhood.clone()).collect();
    let left = uncovered(&sets, n);
    if !left.is_empty() {
        return Err(DqlsError::IncompleteNeighborhoods(format!(
            "subsystems {left:?} are not covered by any support"
        )));
    }
    let refs: Vec<&dyn SubspaceLike> = spans.iter().map(|e| e as &dyn SubspaceLike).collect();
    let (candidate_space, _) = intersect_all(&refs, tol)?;
    let (status, state) = match candidate_space.dim() {
        0 => (Status::Inconsistent, None),
        1 => {
            let s = PureState::from_column(dims.to_vec(), candidate_space.basis().col(0))?;
            (Status::Unique, Some(fix_phase(&s)))
        }
        _ => (Status::NotUnique, None),
    };
    Ok(ReconstructionResult {
        status,
        state,
        candidate_space,
        fidelity_to_truth: None,
    })
}

/// Reconstructs `truth` from its own supports and records the fidelity.
pub fn reconstruct_from_state(
    truth: &PureState,
    neighborhoods: &[Vec<usize>],
    tol: &RankTolerance,
) -> Result<ReconstructionResult> {
    let inputs = supports_of(truth, neighborhoods, tol)?;
    let mut r = reconstruct(truth.dims(), &inputs, tol)?;
    if let Some(s) = &r.state {
        r.fidelity_to_truth = Some(truth.fidelity(s)?);
    }
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryEntry {
    pub name: String,
    pub dims: Vec<usize>,
    /// 1-based.
    pub neighborhoods: Vec<Vec<usize>>,
    pub dqls: bool,
    pub status: Status,
    pub candidate_dim: usize,
    pub fidelity_to_truth: Option<f64>,
    pub note: Option<String>,
}

/// Name, state, 0-based neighborhoods and an optional note.
type Case = (String, PureState, Vec<Vec<usize>>, Option<&'static str>);

/// Reconstruction from supports for a set of reference states.
pub fn uda_battery(tol: &RankTolerance) -> Result<Vec<BatteryEntry>> {
    let mut cases: Vec<Case> = vec![
        (
            "dicke(4,2)".into(),
            named_state(&NamedState::Dicke { n: 4, k: 2 })?,
            vec![vec![0, 1, 2], vec![1, 2, 3]],
            None,
        ),
        (
            "w(3)".into(),
            named_state(&NamedState::W { n: 3 })?,
            vec![vec![0, 1], vec![1, 2]],
            Some("supports alone leave two candidates; recovery from full reduced states is not attempted"),
        ),
        (
            "ghz(3)".into(),
            named_state(&NamedState::Ghz { n: 3, d: 2 })?,
            vec![vec![0, 1], vec![1, 2]],
            None,
        ),
        (
            "random(2,2,2,2)".into(),
            random_state(&[2; 4], 1)?,
            vec![vec![0, 1, 2], vec![1, 2, 3]],
            None,
        ),
        (
            "random(2,2,2,2,2)".into(),
            random_state(&[2; 5], 2)?,
            vec![vec![0, 1, 2], vec![1, 2, 3, 4]],
            None,
        ),
    ];
    cases
        .drain(..)
        .map(|(name, s, nbs, note)| {
            let ns = NeighborhoodStructure::new(s.n_subsystems(), nbs.clone())?;
            let dqls = dqls_subspace(&s, &ns, tol)?.is_dqls;
            let r = reconstruct_from_state(&s, &nbs, tol)?;
            Ok(BatteryEntry {
                name,
                dims: s.dims().to_vec(),
                neighborhoods: ns.to_one_based(),
                dqls,
                status: r.status,
                candidate_dim: r.candidate_space.dim(),
                fidelity_to_truth: r.fidelity_to_truth,
                note: note.map(str::to_string),
            })
        })
        .collect()
}

/// Global phase of `a` relative to `b` when they are parallel.
pub fn relative_phase(a: &PureState, b: &PureState) -> Result<C64> {
    let z = b.inner(a)?;
    Ok(z / z.norm())
}
