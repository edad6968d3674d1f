//! Seeded Monte Carlo sweeps and the self-test suite.

use rayon::prelude::*;
use serde::Serialize;

use crate::dqls::dqls_subspace;
use crate::dqls::MAX_TOTAL_DIM;
use crate::dynamics::{build_stabilizer, evolve, ghz_eps_batch};
use crate::error::{DqlsError, Result};
use crate::hamiltonian::parent_hamiltonian;
use crate::linalg::RankTolerance;
use crate::locality::NeighborhoodStructure;
use crate::multipartite::{decide, Outcome};
use crate::reconstruction::{reconstruct_from_state, Status};
use crate::rng::derive_seed;
use crate::state::{named_state, random_state, DensityMatrix, NamedState};
use crate::tripartite::{analyze, predict, AnalyzeOptions, Prediction, Verdict};

/// Parameters of a table sweep, echoed into reports for replay.
#[derive(Clone, Debug, Serialize)]
pub struct TableConfig {
    pub d_b: usize,
    pub d_a: (usize, usize),
    /// Inclusive range of `d̄ = d_c - d_a`.
    pub d_bar: (usize, usize),
    pub seeds: usize,
    pub base_seed: u64,
    pub tol: RankTolerance,
    /// Cells whose total dimension exceeds this are skipped.
    pub max_total_dim: usize,
}

impl TableConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(DqlsError::InvalidParameter("need at least one seed".into()));
        }
        if self.d_b < 2 || self.d_a.0 < 2 || self.d_a.0 > self.d_a.1 || self.d_bar.0 > self.d_bar.1
        {
            return Err(DqlsError::InvalidParameter(format!(
                "bad ranges: d_b = {}, d_a = {:?}, d_bar = {:?}",
                self.d_b, self.d_a, self.d_bar
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CellVerdict {
    Y,
    N,
    Mixed,
    Skipped,
}

impl CellVerdict {
    fn symbol(self) -> &'static str {
        match self {
            CellVerdict::Y => "Y",
            CellVerdict::N => "N",
            CellVerdict::Mixed => "?",
            CellVerdict::Skipped => "-",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableCell {
    pub d_a: usize,
    pub d_b: usize,
    pub d_bar: usize,
    pub d_c: usize,
    pub verdict: CellVerdict,
    /// Seeds agreeing with the majority verdict.
    pub agreement_count: usize,
    pub seeds: usize,
    /// Distinct values of `dim H₀` seen, ascending.
    pub dims_h0: Vec<usize>,
    pub prediction: Prediction,
    pub matches_prediction: bool,
    /// Seeds on which the available routes disagreed.
    pub method_disagreements: usize,
}

/// Runs every seed of one cell.
pub fn run_cell(
    d_a: usize,
    d_b: usize,
    d_c: usize,
    seeds: usize,
    base_seed: u64,
    tol: &RankTolerance,
    max_total_dim: usize,
) -> Result<TableCell> {
    let prediction = predict(d_a, d_b, d_c);
    let total = d_a * d_b * d_c;
    let mut cell = TableCell {
        d_a,
        d_b,
        d_bar: d_c.saturating_sub(d_a),
        d_c,
        verdict: CellVerdict::Skipped,
        agreement_count: 0,
        seeds,
        dims_h0: Vec::new(),
        prediction,
        matches_prediction: false,
        method_disagreements: 0,
    };
    if total > max_total_dim {
        return Ok(cell);
    }
    let (mut yes, mut no) = (0, 0);
    let opts = AnalyzeOptions {
        geometric: total <= MAX_TOTAL_DIM,
        determinant: true,
    };
    for k in 0..seeds as u64 {
        let seed = derive_seed(base_seed, &[d_a as u64, d_b as u64, d_c as u64, k]);
        let s = random_state(&[d_a, d_b, d_c], seed)?;
        let r = analyze(&s, tol, opts)?;
        let Some(dim) = r.dim_h0 else { continue };
        if !r.methods_agree {
            cell.method_disagreements += 1;
        }
        if !cell.dims_h0.contains(&dim) {
            cell.dims_h0.push(dim);
        }
        if dim == 1 {
            yes += 1;
        } else {
            no += 1;
        }
    }
    cell.dims_h0.sort_unstable();
    cell.agreement_count = yes.max(no);
    cell.verdict = match (yes, no) {
        (0, 0) => CellVerdict::Skipped,
        (_, 0) => CellVerdict::Y,
        (0, _) => CellVerdict::N,
        _ => CellVerdict::Mixed,
    };
    cell.matches_prediction = matches!(
        (cell.verdict, prediction.verdict),
        (CellVerdict::Y, Verdict::Dqls) | (CellVerdict::N, Verdict::NotDqls)
    );
    Ok(cell)
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub config: TableConfig,
    pub cells: Vec<TableCell>,
    pub mixed: usize,
    pub mismatches: usize,
    pub method_disagreements: usize,
}

pub fn run_table(config: &TableConfig) -> Result<TableReport> {
    config.validate()?;
    let coords: Vec<(usize, usize)> = (config.d_a.0..=config.d_a.1)
        .flat_map(|a| (config.d_bar.0..=config.d_bar.1).map(move |b| (a, b)))
        .collect();
    let cells = coords
        .par_iter()
        .map(|&(a, bar)| {
            run_cell(
                a,
                config.d_b,
                a + bar,
                config.seeds,
                config.base_seed,
                &config.tol,
                config.max_total_dim,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |f: &dyn Fn(&TableCell) -> bool| cells.iter().filter(|c| f(c)).count();
    Ok(TableReport {
        mixed: count(&|c| c.verdict == CellVerdict::Mixed),
        mismatches: count(&|c| {
            matches!(c.verdict, CellVerdict::Y | CellVerdict::N) && !c.matches_prediction
        }),
        method_disagreements: cells.iter().map(|c| c.method_disagreements).sum(),
        config: config.clone(),
        cells,
    })
}

impl TableReport {
    /// Grid with rows `d_a` and columns `d̄`. `Y`/`N` are unanimous verdicts,
    /// `?` marks disagreement between seeds, `-` a skipped cell, and a
    /// trailing `!` a verdict that differs from the prediction.
    pub fn to_csv(&self) -> String {
        let (b0, b1) = self.config.d_bar;
        let mut out = String::from("d_a");
        for bar in b0..=b1 {
            out.push_str(&format!(",{bar}"));
        }
        out.push_str("\r\n");
        for a in self.config.d_a.0..=self.config.d_a.1 {
            out.push_str(&a.to_string());
            for c in self.cells.iter().filter(|c| c.d_a == a) {
                let flag = if matches!(c.verdict, CellVerdict::Y | CellVerdict::N)
                    && !c.matches_prediction
                {
                    "!"
                } else {
                    ""
                };
                out.push_str(&format!(",{}{flag}", c.verdict.symbol()));
            }
            out.push_str("\r\n");
        }
        out
    }

    pub fn cell(&self, d_a: usize, d_bar: usize) -> Option<&TableCell> {
        self.cells.iter().find(|c| c.d_a == d_a && c.d_bar == d_bar)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub base_seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check {
            name: name.into(),
            passed,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Quick consistency run over every module.
pub fn run_suite(base_seed: u64, tol: &RankTolerance) -> SuiteReport {
    let chain3 = || NeighborhoodStructure::from_one_based(3, &[&[1, 2], &[2, 3]]);
    let checks = vec![
        check("table-window", || {
            let r = run_table(&TableConfig {
                d_b: 3,
                d_a: (2, 2),
                d_bar: (0, 4),
                seeds: 3,
                base_seed,
                tol: *tol,
                max_total_dim: MAX_TOTAL_DIM,
            })?;
            let row: String = r.cells.iter().map(|c| c.verdict.symbol()).collect();
            Ok((
                row == "YYYYN" && r.method_disagreements == 0,
                format!("row d_a=2: {row}"),
            ))
        }),
        check("ghz-h0", || {
            let g = named_state(&NamedState::Ghz { n: 3, d: 2 })?;
            let v = dqls_subspace(&g, &chain3()?, tol)?;
            Ok((v.dim_h0 == 2, format!("dim H0 = {}", v.dim_h0)))
        }),
        check("qubit-middle-dimensions", || {
            let mut ok = true;
            let mut seen = Vec::new();
            for (dims, want) in [([3, 2, 3], 3), ([3, 2, 4], 1), ([3, 2, 5], 4)] {
                let s = random_state(&dims, derive_seed(base_seed, &[dims[2] as u64]))?;
                let d = analyze(&s, tol, AnalyzeOptions::default())?.dim_h0;
                ok &= d == Some(want);
                seen.push(d);
            }
            Ok((ok, format!("{seen:?}")))
        }),
        check("extended-nogo", || {
            let s = random_state(&[2; 4], base_seed)?;
            let t = decide(&s, &NeighborhoodStructure::all_pairs(4)?, tol)?;
            Ok((
                t.outcome == Outcome::NotDqls && t.dim_h0 == Some(16),
                format!("{:?}", t.outcome),
            ))
        }),
        check("parent-kernel", || {
            let g = named_state(&NamedState::Ghz { n: 3, d: 2 })?;
            let k = parent_hamiltonian(&g, &chain3()?, tol)?.kernel(tol)?.dim();
            Ok((k == 2, format!("kernel dim {k}")))
        }),
        check("stabilizer", || {
            let s = random_state(&[2, 2, 3], base_seed)?;
            let (l, c) = build_stabilizer(&s, &chain3()?, base_seed, tol)?;
            let rho0 = DensityMatrix::maximally_mixed(vec![2, 2, 3])?;
            let t = 20.0 / c.gap;
            let traj = evolve(&l, &rho0, t, t / 20.0)?;
            let f = traj.last().and_then(|p| p.fidelity).unwrap_or(0.0);
            Ok((
                c.passes() && f > 1.0 - 1e-6,
                format!("gap {:.4}, final fidelity {f:.10}", c.gap),
            ))
        }),
        check("ghz-eps", || {
            let r = ghz_eps_batch(0.01, 5, base_seed, tol)?;
            let ok = r.iter().all(|x| x.target_was_dqls && x.bound_satisfied);
            Ok((ok, format!("{} runs", r.len())))
        }),
        check("reconstruction", || {
            let s = random_state(&[2; 4], base_seed)?;
            let r = reconstruct_from_state(&s, &[vec![0, 1, 2], vec![1, 2, 3]], tol)?;
            let f = r.fidelity_to_truth.unwrap_or(0.0);
            Ok((
                r.status == Status::Unique && f > 1.0 - 1e-9,
                format!("fidelity {f:.12}"),
            ))
        }),
    ];
    let passed = checks.iter().all(|c| c.passed);
    SuiteReport {
        base_seed,
        checks,
        passed,
    }
}
