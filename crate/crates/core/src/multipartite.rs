//! Deciding DQLS for many parts by reduction to two-neighborhood problems.
//!
//! Every step rests on a containment between DQLS subspaces that holds for
//! any state, so the conclusions never depend on genericity:
//! dropping a neighborhood whose reduced state has full rank leaves `H₀`
//! unchanged, `H₀` for a subset of the neighborhoods contains `H₀` for all
//! of them, and coarse-graining can only shrink `H₀`.

use serde::{Deserialize, Serialize};

use crate::dqls::{dqls_subspace, MAX_TOTAL_DIM};
use crate::error::{DqlsError, Result};
use crate::linalg::{rank_decision, RankTolerance};
use crate::locality::{
    pair_grouping, two_block_coarse_grainings, uncovered, NeighborhoodStructure,
};
use crate::state::PureState;
use crate::tripartite::{analyze, AnalyzeOptions};

fn check(s: &PureState, ns: &NeighborhoodStructure) -> Result<()> {
    if ns.n() != s.n_subsystems() {
        return Err(DqlsError::DimensionMismatch(format!(
            "structure on {} subsystems, state has {}",
            ns.n(),
            s.n_subsystems()
        )));
    }
    if s.norm() == 0.0 {
        return Err(DqlsError::InvalidState("zero vector".into()));
    }
    Ok(())
}

fn block_dim(s: &PureState, set: &[usize]) -> usize {
    set.iter().map(|&i| s.dims()[i]).product()
}

fn full_rank_marginal(s: &PureState, set: &[usize], tol: &RankTolerance) -> Result<bool> {
    let m = s.bipartition_matrix(set)?;
    Ok(rank_decision(m.as_ref(), tol)?.rank == m.nrows())
}

/// True when every neighborhood is no larger than its complement and every
/// neighborhood's reduced state has full rank. Then the Schmidt span of each
/// neighborhood is its whole local space, so `H₀` is the full Hilbert space.
pub fn extended_nogo(
    s: &PureState,
    ns: &NeighborhoodStructure,
    tol: &RankTolerance,
) -> Result<bool> {
    check(s, ns)?;
    let total = s.total_dim();
    for nb in ns.neighborhoods() {
        let d = block_dim(s, nb);
        if d * d > total || !full_rank_marginal(s, nb, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Dqls,
    NotDqls,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Step {
    /// Neighborhoods with full-rank reduced states were dropped.
    DropFullRank,
    /// Every neighborhood was dropped, so `H₀` is the whole space.
    AllDropped,
    /// Two remaining neighborhoods cover everything and certify DQLS.
    CoveringPair,
    /// Some subsystem lies in no remaining neighborhood.
    Leftover,
    /// A two-block coarse-graining certifies failure.
    CoarseGrained,
    /// `H₀` computed directly.
    Direct,
    /// The state is too large for the direct computation.
    TooLarge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reason {
    pub step: Step,
    pub detail: String,
}

/// Record of [`decide`]. Subsystem labels are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub ignored_neighborhoods: Vec<Vec<usize>>,
    pub leftover_subsystems: Vec<usize>,
    pub pair_found: Option<(Vec<usize>, Vec<usize>)>,
    pub coarse_grained_pair: Option<(Vec<usize>, Vec<usize>)>,
    pub outcome: Outcome,
    /// `dim H₀` whenever some step determined it exactly.
    pub dim_h0: Option<usize>,
    pub reasons: Vec<Reason>,
}

fn one_based(set: &[usize]) -> Vec<usize> {
    set.iter().map(|i| i + 1).collect()
}

/// `dim H₀` of `ψ` relative to the two sets `first`, `second` (which cover
/// every subsystem), via the tripartite analysis of the regrouped state.
/// `None` when no route could run.
pub fn pair_dim(
    s: &PureState,
    first: &[usize],
    second: &[usize],
    tol: &RankTolerance,
) -> Result<Option<usize>> {
    let n = s.n_subsystems();
    let g = pair_grouping(first, second, n)?;
    if g.b.is_empty() {
        // Disjoint blocks: H₀ is the product of the two Schmidt spans.
        let r = rank_decision(s.bipartition_matrix(&g.a)?.as_ref(), tol)?.rank;
        return Ok(Some(r * r));
    }
    let regrouped = s.regroup(&g.blocks())?;
    let opts = AnalyzeOptions {
        geometric: s.total_dim() <= MAX_TOTAL_DIM,
        determinant: false,
    };
    Ok(analyze(&regrouped, tol, opts)?.dim_h0)
}

/// Decides whether `ψ` is DQLS relative to `ns`:
/// drop neighborhoods whose reduced state has full rank, look for a covering
/// pair with a one-dimensional `H₀`, look for uncovered subsystems, look for
/// a two-block coarse-graining with `dim H₀ > 1`, and finally compute `H₀`
/// directly if the state is small enough.
pub fn decide(
    s: &PureState,
    ns: &NeighborhoodStructure,
    tol: &RankTolerance,
) -> Result<DecisionTrace> {
    check(s, ns)?;
    let n = ns.n();
    let mut trace = DecisionTrace {
        ignored_neighborhoods: Vec::new(),
        leftover_subsystems: Vec::new(),
        pair_found: None,
        coarse_grained_pair: None,
        outcome: Outcome::Inconclusive,
        dim_h0: None,
        reasons: Vec::new(),
    };

    let mut kept: Vec<Vec<usize>> = Vec::new();
    for nb in ns.neighborhoods() {
        if full_rank_marginal(s, nb, tol)? {
            trace.ignored_neighborhoods.push(one_based(nb));
        } else {
            kept.push(nb.clone());
        }
    }
    if !trace.ignored_neighborhoods.is_empty() {
        trace.reasons.push(Reason {
            step: Step::DropFullRank,
            detail: format!(
                "{} neighborhood(s) have full-rank reduced states",
                trace.ignored_neighborhoods.len()
            ),
        });
    }
    if kept.is_empty() {
        trace.outcome = Outcome::NotDqls;
        trace.dim_h0 = Some(s.total_dim());
        trace.leftover_subsystems = (1..=n).collect();
        trace.reasons.push(Reason {
            step: Step::AllDropped,
            detail: "H0 is the whole Hilbert space".into(),
        });
        return Ok(trace);
    }

    for (i, p) in kept.iter().enumerate() {
        for q in &kept[i + 1..] {
            if uncovered(&[p.clone(), q.clone()], n).is_empty()
                && pair_dim(s, p, q, tol)? == Some(1)
            {
                trace.pair_found = Some((one_based(p), one_based(q)));
                trace.outcome = Outcome::Dqls;
                trace.dim_h0 = Some(1);
                trace.reasons.push(Reason {
                    step: Step::CoveringPair,
                    detail: format!(
                        "{:?} and {:?} alone already give a one-dimensional H0",
                        one_based(p),
                        one_based(q)
                    ),
                });
                return Ok(trace);
            }
        }
    }

    let left = uncovered(&kept, n);
    if !left.is_empty() {
        trace.leftover_subsystems = one_based(&left);
        trace.outcome = Outcome::NotDqls;
        trace.reasons.push(Reason {
            step: Step::Leftover,
            detail: format!(
                "subsystems {:?} are unconstrained, so H0 is invariant under their local unitaries",
                one_based(&left)
            ),
        });
        return Ok(trace);
    }

    for (p, q) in two_block_coarse_grainings(&kept, n) {
        if let Some(d) = pair_dim(s, &p, &q, tol)? {
            if d > 1 {
                trace.coarse_grained_pair = Some((one_based(&p), one_based(&q)));
                trace.outcome = Outcome::NotDqls;
                trace.reasons.push(Reason {
                    step: Step::CoarseGrained,
                    detail: format!(
                        "coarse-grained pair {:?}, {:?} has dim H0 = {d}",
                        one_based(&p),
                        one_based(&q)
                    ),
                });
                return Ok(trace);
            }
        }
    }

    if s.total_dim() <= MAX_TOTAL_DIM {
        let v = dqls_subspace(s, ns, tol)?;
        trace.outcome = if v.is_dqls {
            Outcome::Dqls
        } else {
            Outcome::NotDqls
        };
        trace.dim_h0 = Some(v.dim_h0);
        trace.reasons.push(Reason {
            step: Step::Direct,
            detail: format!("direct computation gives dim H0 = {}", v.dim_h0),
        });
    } else {
        trace.reasons.push(Reason {
            step: Step::TooLarge,
            detail: format!(
                "no certificate found and total dimension {} exceeds {MAX_TOTAL_DIM}",
                s.total_dim()
            ),
        });
    }
    Ok(trace)
}
