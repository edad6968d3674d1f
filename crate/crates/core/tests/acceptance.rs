//! Acceptance gate. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails. Tolerances are fixed below.

use std::process::ExitCode;
use std::time::Instant;

use dqls_core::dqls::{dqls_subspace, slocc_transform};
use dqls_core::dynamics::{build_stabilizer, evolve, ghz_eps_batch};
use dqls_core::experiments::{run_cell, CellVerdict, TableCell};
use dqls_core::hamiltonian::parent_hamiltonian;
use dqls_core::linalg::{commutant_dimension, kron, vec, CMatrix, RankTolerance, C64};
use dqls_core::locality::{tripartite_grouping, NeighborhoodStructure};
use dqls_core::multipartite::{decide, Outcome};
use dqls_core::reconstruction::{reconstruct_from_state, Status};
use dqls_core::rng::{derive_seed, gaussian_matrix, seeded};
use dqls_core::state::{named_state, random_state, ring_adjacency, DensityMatrix, NamedState};
use dqls_core::tripartite::{analyze, AnalyzeOptions};

const SEEDS: usize = 20;
const BASE_SEED: u64 = 2024;
const RECON_FIDELITY: f64 = 1.0 - 1e-9;
const DYN_FIDELITY: f64 = 1.0 - 1e-6;
const TRACE_DRIFT: f64 = 1e-8;
const ZERO_TERM: f64 = 1e-10;
const VEC_KRON: f64 = 1e-12;

/// Qutrit-middle table, rows `d_a = 2..=5`, columns `d̄ = 0..=9`.
const TABLE_DB3: [(usize, &str); 4] = [
    (2, "YYYYNNNNNN"),
    (3, "YYYYYYNNNN"),
    (4, "YYYYYYYNNN"),
    (5, "YYYYYYYYYN"),
];

/// `(d_a, d̄, expected)` for a ququart middle.
const TABLE_DB4: [(usize, usize, char); 6] = [
    (5, 11, 'Y'),
    (5, 13, 'Y'),
    (5, 14, 'N'),
    (6, 17, 'N'),
    (7, 19, 'Y'),
    (7, 20, 'N'),
];

struct Gate {
    failures: usize,
    /// Cross-method disagreements gathered from the table and law checks.
    disagreements: usize,
    cross_instances: usize,
}

impl Gate {
    fn report(&mut self, id: &str, what: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {what}: {detail}");
        if !pass {
            self.failures += 1;
        }
    }
}

fn tol() -> RankTolerance {
    RankTolerance::default()
}

fn symbol(c: &TableCell) -> char {
    match c.verdict {
        CellVerdict::Y => 'Y',
        CellVerdict::N => 'N',
        CellVerdict::Mixed => '?',
        CellVerdict::Skipped => '-',
    }
}

fn cell(gate: &mut Gate, d_a: usize, d_b: usize, d_c: usize) -> TableCell {
    let c = run_cell(d_a, d_b, d_c, SEEDS, BASE_SEED, &tol(), 4096).expect("cell runs");
    gate.disagreements += c.method_disagreements;
    gate.cross_instances += c.seeds;
    c
}

fn ac1(gate: &mut Gate) {
    let start = Instant::now();
    let mut wrong = Vec::new();
    let mut mixed = 0;
    let mut rows = Vec::new();
    for (d_a, expected) in TABLE_DB3 {
        let mut row = String::new();
        for (bar, want) in expected.chars().enumerate() {
            let d_c = d_a + bar;
            if d_a * 3 * d_c > 2000 {
                row.push('-');
                continue;
            }
            let c = cell(gate, d_a, 3, d_c);
            let got = symbol(&c);
            mixed += usize::from(c.verdict == CellVerdict::Mixed);
            if got != want {
                wrong.push(format!("({d_a},3,{d_c}) got {got} want {want}"));
            }
            row.push(got);
        }
        rows.push(format!("{d_a}:{row}"));
    }
    gate.report(
        "AC-1",
        "qutrit-middle table",
        wrong.is_empty() && mixed == 0,
        format!(
            "{} mismatches, {mixed} mixed, rows {} ({:.1} s){}",
            wrong.len(),
            rows.join(" "),
            start.elapsed().as_secs_f64(),
            if wrong.is_empty() {
                String::new()
            } else {
                format!(" {wrong:?}")
            }
        ),
    );
}

fn ac2(gate: &mut Gate) {
    let start = Instant::now();
    let mut got = Vec::new();
    let mut ok = true;
    for (d_a, bar, want) in TABLE_DB4 {
        let c = cell(gate, d_a, 4, d_a + bar);
        let g = symbol(&c);
        ok &= g == want;
        got.push(format!("({d_a},4,{}) {g}/{want}", d_a + bar));
    }
    gate.report(
        "AC-2",
        "ququart-middle spot checks",
        ok,
        format!(
            "{} ({:.1} s)",
            got.join(", "),
            start.elapsed().as_secs_f64()
        ),
    );
}

/// Measures `dim H₀` on `SEEDS` random states by every route that applies;
/// returns the distinct values seen.
fn measured_dims(gate: &mut Gate, dims: [usize; 3]) -> Vec<usize> {
    let mut seen = Vec::new();
    for k in 0..SEEDS as u64 {
        let seed = derive_seed(
            BASE_SEED,
            &[dims[0] as u64, dims[1] as u64, dims[2] as u64, 100 + k],
        );
        let s = random_state(&dims, seed).expect("state");
        let r = analyze(&s, &tol(), AnalyzeOptions::default()).expect("analysis");
        gate.cross_instances += 1;
        if !r.methods_agree {
            gate.disagreements += 1;
        }
        for d in [r.dim_h0_geometric, r.dim_h0_algebraic, r.dim_h0]
            .into_iter()
            .flatten()
        {
            if !seen.contains(&d) {
                seen.push(d);
            }
        }
    }
    seen.sort_unstable();
    seen
}

fn ac3(gate: &mut Gate) {
    let cases: [([usize; 3], usize); 10] = [
        ([2, 2, 2], 2),
        ([3, 2, 3], 3),
        ([4, 2, 4], 4),
        ([2, 2, 3], 1),
        ([3, 2, 4], 1),
        ([4, 2, 5], 1),
        ([2, 2, 4], 4),
        ([3, 2, 5], 4),
        ([2, 2, 5], 4),
        ([3, 2, 7], 9),
    ];
    let mut ok = true;
    let mut out = Vec::new();
    for (dims, want) in cases {
        let seen = measured_dims(gate, dims);
        ok &= seen == vec![want];
        out.push(format!("{dims:?}->{seen:?}"));
    }
    gate.report("AC-3", "qubit-middle dimension law", ok, out.join(" "));
}

fn ac4(gate: &mut Gate) {
    let mut ok = true;
    let mut out = Vec::new();
    for (dims, want) in [([2, 2, 4], 4), ([2, 3, 6], 4), ([3, 3, 9], 9)] {
        let seen = measured_dims(gate, dims);
        ok &= seen == vec![want];
        out.push(format!("{dims:?}->{seen:?}"));
    }
    for n in [4usize, 5] {
        let ns = NeighborhoodStructure::all_pairs(n).expect("structure");
        let full = 1usize << n;
        let mut good = 0;
        for k in 0..SEEDS as u64 {
            let s =
                random_state(&vec![2; n], derive_seed(BASE_SEED, &[n as u64, k])).expect("state");
            let t = decide(&s, &ns, &tol()).expect("decision");
            let v = dqls_subspace(&s, &ns, &tol()).expect("H0");
            if t.outcome == Outcome::NotDqls && v.dim_h0 == full {
                good += 1;
            }
        }
        ok &= good == SEEDS;
        out.push(format!(
            "{n} qubits all pairs: {good}/{SEEDS} not DQLS with dim H0 = {full}"
        ));
    }
    gate.report("AC-4", "no-go dimensions", ok, out.join("; "));
}

fn ac5(gate: &mut Gate) {
    gate.report(
        "AC-5",
        "cross-method agreement",
        gate.disagreements == 0,
        format!(
            "{} disagreements over {} instances",
            gate.disagreements, gate.cross_instances
        ),
    );
}

fn ac6(gate: &mut Gate) {
    let chain = NeighborhoodStructure::from_one_based(3, &[&[1, 2], &[2, 3]]).expect("structure");
    let ghz = named_state(&NamedState::Ghz { n: 3, d: 2 }).expect("ghz");
    let w = named_state(&NamedState::W { n: 3 }).expect("w");
    let dicke = named_state(&NamedState::Dicke { n: 4, k: 2 }).expect("dicke");
    let triples =
        NeighborhoodStructure::from_one_based(4, &[&[1, 2, 3], &[2, 3, 4]]).expect("structure");
    let ring = named_state(&NamedState::Graph {
        adjacency: ring_adjacency(4),
    })
    .expect("ring");
    let ring_nn = NeighborhoodStructure::ring_pairs(4).expect("structure");
    let all = NeighborhoodStructure::all_pairs(4).expect("structure");

    let g = dqls_subspace(&ghz, &chain, &tol()).expect("H0").dim_h0;
    let wd = dqls_subspace(&w, &chain, &tol()).expect("H0").dim_h0;
    let dk = dqls_subspace(&dicke, &triples, &tol()).expect("H0").is_dqls;
    let ring_all = dqls_subspace(&ring, &all, &tol()).expect("H0");
    let ring_nn_v = dqls_subspace(&ring, &ring_nn, &tol()).expect("H0");
    let h = parent_hamiltonian(&ring, &ring_nn, &tol()).expect("parent");
    let worst = h
        .terms()
        .iter()
        .map(|t| t.matrix.norm_max())
        .fold(0.0, f64::max);

    let ok =
        g == 2 && wd == 2 && dk && !ring_all.is_dqls && !ring_nn_v.is_dqls && worst < ZERO_TERM;
    gate.report(
        "AC-6",
        "known-state battery",
        ok,
        format!(
            "GHZ3 dim {g}, W3 dim {wd}, Dicke(4,2) DQLS {dk}, ring all-pairs dim {}, \
             ring nearest-neighbor dim {} with max parent-term entry {worst:.1e}",
            ring_all.dim_h0, ring_nn_v.dim_h0
        ),
    );
    let all_terms = parent_hamiltonian(&ring, &all, &tol()).expect("parent");
    let norms: Vec<String> = all_terms
        .terms()
        .iter()
        .map(|t| {
            let nb: Vec<usize> = t.neighborhood.iter().map(|i| i + 1).collect();
            format!("{nb:?}:{:.2}", t.matrix.norm_max())
        })
        .collect();
    println!(
        "[INFO] AC-6 ring parent terms under all pairs (max entry): {}",
        norms.join(" ")
    );
}

fn ac7(gate: &mut Gate) {
    let start = Instant::now();
    let chain = NeighborhoodStructure::from_one_based(3, &[&[1, 2], &[2, 3]]).expect("structure");
    let rho0 = DensityMatrix::maximally_mixed(vec![2, 2, 3]).expect("rho0");
    let mut ok = true;
    let mut worst_fid: f64 = 1.0;
    let mut worst_drift: f64 = 0.0;
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let s = random_state(&[2, 2, 3], seed).expect("state");
        match build_stabilizer(&s, &chain, seed, &tol()) {
            Ok((l, c)) => {
                let t = 20.0 / c.gap;
                let traj = evolve(&l, &rho0, t, t / 50.0).expect("trajectory");
                let f = traj.last().and_then(|p| p.fidelity).unwrap_or(0.0);
                let drift = traj
                    .iter()
                    .map(|p| (p.trace - 1.0).abs())
                    .fold(0.0, f64::max);
                worst_fid = worst_fid.min(f);
                worst_drift = worst_drift.max(drift);
                if !(c.passes() && f > DYN_FIDELITY && drift < TRACE_DRIFT) {
                    ok = false;
                    failures.push(seed);
                }
            }
            Err(e) => {
                ok = false;
                failures.push(seed);
                println!("        seed {seed}: {e}");
            }
        }
    }
    gate.report(
        "AC-7",
        "dissipative stabilization",
        ok,
        format!(
            "worst final fidelity {worst_fid:.10}, worst trace drift {worst_drift:.1e}, failed seeds {failures:?} ({:.1} s)",
            start.elapsed().as_secs_f64()
        ),
    );
}

fn ac8(gate: &mut Gate) {
    let eps = 0.01;
    let runs = ghz_eps_batch(eps, 50, BASE_SEED, &tol()).expect("runs");
    let dqls = runs.iter().filter(|r| r.target_was_dqls).count();
    let bound_ok = runs
        .iter()
        .filter(|r| {
            let x = eps * r.h_norm;
            let y = x / (1.0 - x);
            r.fidelity >= (1.0 - y) * (1.0 - y)
        })
        .count();
    let fmin = runs.iter().map(|r| r.fidelity).fold(1.0, f64::min);
    gate.report(
        "AC-8",
        "perturbed GHZ stabilization",
        dqls == 50 && bound_ok == 50,
        format!("{dqls}/50 DQLS, bound holds {bound_ok}/50, min fidelity {fmin:.6}"),
    );
}

fn ac9(gate: &mut Gate) {
    let mut ok = true;
    let mut out = Vec::new();
    for n in [4usize, 5] {
        let nbs = tripartite_grouping(n, 2).expect("grouping").neighborhoods();
        let mut worst: f64 = 1.0;
        let mut unique = 0;
        for k in 0..SEEDS as u64 {
            let s = random_state(&vec![2; n], derive_seed(BASE_SEED, &[77, n as u64, k]))
                .expect("state");
            let r = reconstruct_from_state(&s, &nbs, &tol()).expect("reconstruction");
            if r.status == Status::Unique {
                unique += 1;
                worst = worst.min(r.fidelity_to_truth.unwrap_or(0.0));
            } else {
                worst = 0.0;
            }
        }
        ok &= unique == SEEDS && worst >= RECON_FIDELITY;
        let one: Vec<Vec<usize>> = nbs
            .iter()
            .map(|nb| nb.iter().map(|i| i + 1).collect())
            .collect();
        out.push(format!(
            "{n} qubits {one:?}: {unique}/{SEEDS} unique, worst fidelity {worst:.12}"
        ));
    }
    let ghz = named_state(&NamedState::Ghz { n: 4, d: 2 }).expect("ghz");
    let r = reconstruct_from_state(&ghz, &[vec![0, 1, 2], vec![1, 2, 3]], &tol())
        .expect("reconstruction");
    ok &= r.status == Status::NotUnique && r.candidate_space.dim() == 2;
    out.push(format!(
        "GHZ4 {:?} dim {}",
        r.status,
        r.candidate_space.dim()
    ));
    gate.report("AC-9", "reconstruction from supports", ok, out.join("; "));
}

fn ac10(gate: &mut Gate) {
    let t = tol();
    let mut notes = Vec::new();
    let mut ok = true;

    // Commutants: everything commutes with the identity; a generic pair has
    // only scalars; the identity on C^5 again gives the full algebra.
    let mut rng = seeded(10);
    let c1 = commutant_dimension(&[CMatrix::identity(2, 2)], &t).expect("commutant");
    let c2 = commutant_dimension(
        &[
            gaussian_matrix(&mut rng, 3, 3),
            gaussian_matrix(&mut rng, 3, 3),
        ],
        &t,
    )
    .expect("commutant");
    let c3 = commutant_dimension(&[CMatrix::identity(5, 5)], &t).expect("commutant");
    ok &= (c1, c2, c3) == (4, 1, 25);
    notes.push(format!("commutants {c1}/{c2}/{c3}"));

    let chain = NeighborhoodStructure::from_one_based(3, &[&[1, 2], &[2, 3]]).expect("structure");
    let mut slocc_bad = 0;
    let mut norm_bad = 0;
    for k in 0..50u64 {
        let dims = [2, 2, 2 + (k as usize % 3)];
        let s = random_state(&dims, derive_seed(BASE_SEED, &[10, k])).expect("state");
        let mut rng = seeded(derive_seed(BASE_SEED, &[11, k]));
        let ops: Vec<CMatrix> = dims
            .iter()
            .map(|&d| gaussian_matrix(&mut rng, d, d))
            .collect();
        let moved = slocc_transform(&s, &ops).expect("slocc");
        let a = dqls_subspace(&s, &chain, &t).expect("H0").dim_h0;
        let b = dqls_subspace(&moved, &chain, &t).expect("H0").dim_h0;
        slocc_bad += usize::from(a != b);
        let scaled = s.scaled(C64::new(-3.5, 1.25));
        let c = dqls_subspace(&scaled, &chain, &t).expect("H0").dim_h0;
        norm_bad += usize::from(a != c);
    }
    ok &= slocc_bad == 0 && norm_bad == 0;
    notes.push(format!(
        "SLOCC changes {slocc_bad}/50, rescaling changes {norm_bad}/50"
    ));

    // Coarse-graining never enlarges H0.
    let fine =
        NeighborhoodStructure::from_one_based(4, &[&[1, 2], &[2, 3], &[3, 4]]).expect("structure");
    let coarse =
        NeighborhoodStructure::from_one_based(4, &[&[1, 2, 3], &[2, 3, 4]]).expect("structure");
    let mut mono_bad = 0;
    let ghz = named_state(&NamedState::Ghz { n: 4, d: 2 }).expect("ghz");
    let mut states = vec![ghz];
    for k in 0..10u64 {
        states.push(random_state(&[2; 4], derive_seed(BASE_SEED, &[12, k])).expect("state"));
    }
    for s in &states {
        let f = dqls_subspace(s, &fine, &t).expect("H0").dim_h0;
        let c = dqls_subspace(s, &coarse, &t).expect("H0").dim_h0;
        mono_bad += usize::from(c > f);
    }
    ok &= mono_bad == 0;
    notes.push(format!(
        "coarse-graining violations {mono_bad}/{}",
        states.len()
    ));

    let mut worst: f64 = 0.0;
    let mut rng = seeded(13);
    for _ in 0..20 {
        let a = gaussian_matrix(&mut rng, 3, 4);
        let x = gaussian_matrix(&mut rng, 4, 5);
        let b = gaussian_matrix(&mut rng, 5, 2);
        let lhs = vec((&a * &x * &b).as_ref());
        let rhs = kron(b.transpose(), a.as_ref()) * vec(x.as_ref());
        let scale = lhs.norm_l2().max(1.0);
        worst = worst.max((&lhs - &rhs).norm_max() / scale);
    }
    ok &= worst < VEC_KRON;
    notes.push(format!("vec/kron relative error {worst:.1e}"));

    gate.report("AC-10", "property suites", ok, notes.join("; "));
}

fn main() -> ExitCode {
    let mut gate = Gate {
        failures: 0,
        disagreements: 0,
        cross_instances: 0,
    };
    ac1(&mut gate);
    ac2(&mut gate);
    ac3(&mut gate);
    ac4(&mut gate);
    ac5(&mut gate);
    ac6(&mut gate);
    ac7(&mut gate);
    ac8(&mut gate);
    ac9(&mut gate);
    ac10(&mut gate);
    if gate.failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", gate.failures);
        ExitCode::FAILURE
    }
}
