use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dqls_core::dqls::dqls_subspace;
use dqls_core::dynamics::{build_stabilizer, evolve, ghz_eps_batch};
use dqls_core::experiments::{run_cell, run_suite, run_table, TableConfig};
use dqls_core::hamiltonian::parent_report;
use dqls_core::io::{
    parse_dims, parse_named, read_json, read_structure, StateFile, StateSpec, SupportFile,
};
use dqls_core::linalg::RankTolerance;
use dqls_core::locality::NeighborhoodStructure;
use dqls_core::multipartite::decide;
use dqls_core::reconstruction::reconstruct;
use dqls_core::state::{named_state, random_state, DensityMatrix, PureState};
use dqls_core::tripartite::{analyze, AnalyzeOptions};

#[derive(Parser)]
#[command(
    name = "dqls",
    version,
    about = "Quasi-local stabilizability of pure states"
)]
struct Cli {
    /// Relative rank tolerance.
    #[arg(long, global = true, env = "DQLS_TOL")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension of the stabilizable subspace of a state.
    Check {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        ns: NsArgs,
    },
    /// Random three-part states of the given dimensions, every route.
    Tri {
        #[arg(long)]
        da: usize,
        #[arg(long)]
        db: usize,
        #[arg(long)]
        dc: usize,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 2024)]
        base_seed: u64,
    },
    /// Verdict table over a window of outer dimensions.
    Table {
        #[arg(long)]
        db: usize,
        #[arg(long, default_value_t = 2)]
        da_min: usize,
        #[arg(long)]
        da_max: usize,
        #[arg(long, default_value_t = 0)]
        dbar_min: usize,
        #[arg(long)]
        dbar_max: usize,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 2024)]
        base_seed: u64,
        /// Cells above this total dimension are skipped.
        #[arg(long, default_value_t = 4096)]
        max_total_dim: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multipartite decision procedure with its reasoning trace.
    Decide {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        ns: NsArgs,
    },
    /// Canonical parent Hamiltonian summary.
    Parent {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        ns: NsArgs,
    },
    /// Builds a dissipative stabilizer, certifies it and integrates from the
    /// maximally mixed state.
    Stabilize {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        ns: NsArgs,
        #[arg(long, default_value_t = 50.0)]
        t: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Where to write the trajectory CSV; stdout after the certificate
        /// when omitted.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Perturbed four-qubit GHZ targets.
    GhzEps {
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        #[arg(long, default_value_t = 2024)]
        base_seed: u64,
    },
    /// Pure state from reduced-state supports.
    Reconstruct {
        #[arg(long)]
        dims: String,
        #[arg(long = "support", required = true)]
        supports: Vec<PathBuf>,
    },
    /// Quick consistency run; exits non-zero on any failure.
    Selftest {
        #[arg(long, default_value_t = 2024)]
        base_seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct StateArgs {
    /// State file.
    #[arg(long, group = "source")]
    state: Option<PathBuf>,
    /// Named state such as `ghz:3`, `w:3`, `dicke:4:2`, `ring:4`.
    #[arg(long, group = "source")]
    named: Option<String>,
    /// Random state with these comma-separated dimensions.
    #[arg(long, group = "source")]
    random: Option<String>,
    #[arg(long, default_value_t = 0, requires = "random")]
    seed_state: u64,
}

#[derive(Args)]
struct NsArgs {
    /// Neighborhood structure file.
    #[arg(long, conflicts_with = "nbhd")]
    ns: Option<PathBuf>,
    /// One neighborhood as 1-based labels, e.g. `1,2`; repeatable.
    #[arg(long)]
    nbhd: Vec<String>,
}

impl StateArgs {
    fn load(&self) -> Result<PureState> {
        if let Some(path) = &self.state {
            let spec: StateSpec =
                read_json(path).with_context(|| format!("reading {}", path.display()))?;
            return Ok(spec.to_state()?);
        }
        if let Some(name) = &self.named {
            return Ok(named_state(&parse_named(name)?)?);
        }
        if let Some(dims) = &self.random {
            return Ok(random_state(&parse_dims(dims)?, self.seed_state)?);
        }
        bail!("give one of --state, --named or --random")
    }
}

impl NsArgs {
    fn load(&self, n: usize) -> Result<NeighborhoodStructure> {
        if let Some(path) = &self.ns {
            let ns = read_structure(path).with_context(|| format!("reading {}", path.display()))?;
            if ns.n() != n {
                bail!(
                    "structure is on {} subsystems but the state has {n}",
                    ns.n()
                );
            }
            return Ok(ns);
        }
        if self.nbhd.is_empty() {
            bail!("give --ns or at least one --nbhd");
        }
        let sets = self
            .nbhd
            .iter()
            .map(|t| parse_dims(t))
            .collect::<dqls_core::Result<Vec<_>>>()?;
        let refs: Vec<&[usize]> = sets.iter().map(Vec::as_slice).collect();
        Ok(NeighborhoodStructure::from_one_based(n, &refs)?)
    }
}

fn print_json(v: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let tol = match cli.tol {
        Some(v) => RankTolerance::relative(v)?,
        None => RankTolerance::default(),
    };
    match cli.command {
        Command::Check { state, ns } => {
            let s = state.load()?;
            let ns = ns.load(s.n_subsystems())?;
            let v = dqls_subspace(&s, &ns, &tol)?;
            let mut per_method = json!({ "geometric": v.dim_h0 });
            if s.n_subsystems() == 3 && ns.neighborhoods() == [vec![0, 1], vec![1, 2]] {
                let r = analyze(
                    &s,
                    &tol,
                    AnalyzeOptions {
                        geometric: false,
                        determinant: true,
                    },
                )?;
                per_method["algebraic"] = json!(r.dim_h0_algebraic);
                per_method["determinant_dqls"] = json!(r.determinant.map(|d| d.is_dqls));
            }
            print_json(&json!({
                "dim_h0": v.dim_h0,
                "is_dqls": v.is_dqls,
                "h0_dim_per_method": per_method,
                "target_overlap": v.target_overlap,
                "near_threshold": v.near_threshold,
            }))?;
        }
        Command::Tri {
            da,
            db,
            dc,
            seeds,
            base_seed,
        } => {
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let cell = run_cell(da, db, dc, seeds, base_seed, &tol, usize::MAX)?;
            let first = random_state(
                &[da, db, dc],
                dqls_core::rng::derive_seed(base_seed, &[da as u64, db as u64, dc as u64, 0]),
            )?;
            let sample = analyze(&first, &tol, AnalyzeOptions::default())?;
            print_json(
                &json!({ "base_seed": base_seed, "cell": cell, "first_seed_report": sample }),
            )?;
        }
        Command::Table {
            db,
            da_min,
            da_max,
            dbar_min,
            dbar_max,
            seeds,
            base_seed,
            max_total_dim,
            format,
            out,
        } => {
            let config = TableConfig {
                d_b: db,
                d_a: (da_min, da_max),
                d_bar: (dbar_min, dbar_max),
                seeds,
                base_seed,
                tol,
                max_total_dim,
            };
            let report = run_table(&config)?;
            let text = match format {
                Format::Csv => report.to_csv(),
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
            };
            emit(&text, out.as_deref())?;
            if report.mixed > 0 || report.method_disagreements > 0 {
                eprintln!(
                    "warning: {} mixed cells, {} cross-method disagreements",
                    report.mixed, report.method_disagreements
                );
                return Ok(false);
            }
        }
        Command::Decide { state, ns } => {
            let s = state.load()?;
            let ns = ns.load(s.n_subsystems())?;
            print_json(&serde_json::to_value(decide(&s, &ns, &tol)?)?)?;
        }
        Command::Parent { state, ns } => {
            let s = state.load()?;
            let ns = ns.load(s.n_subsystems())?;
            print_json(&serde_json::to_value(parent_report(&s, &ns, &tol)?)?)?;
        }
        Command::Stabilize {
            state,
            ns,
            t,
            dt,
            seed,
            trajectory,
        } => {
            let s = state.load()?;
            let ns = ns.load(s.n_subsystems())?;
            let (l, cert) = build_stabilizer(&s, &ns, seed, &tol)?;
            let rho0 = DensityMatrix::maximally_mixed(s.dims().to_vec())?;
            let points = evolve(&l, &rho0, t, dt)?;
            print_json(&json!({
                "seed": seed,
                "jump_operators": l.lindblad_terms().len(),
                "certificate": cert,
                "passes": cert.passes(),
                "final_fidelity": points.last().and_then(|p| p.fidelity),
            }))?;
            let mut csv = String::from("t,fidelity,trace\r\n");
            for p in &points {
                csv += &format!("{},{},{}\r\n", p.t, p.fidelity.unwrap_or(f64::NAN), p.trace);
            }
            emit(&csv, trajectory.as_deref())?;
        }
        Command::GhzEps {
            epsilon,
            seeds,
            base_seed,
        } => {
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let runs = ghz_eps_batch(epsilon, seeds, base_seed, &tol)?;
            let all_dqls = runs.iter().all(|r| r.target_was_dqls);
            let all_bounded = runs.iter().all(|r| r.bound_satisfied);
            let min_fidelity = runs
                .iter()
                .map(|r| r.fidelity)
                .fold(f64::INFINITY, f64::min);
            print_json(&json!({
                "epsilon": epsilon,
                "base_seed": base_seed,
                "all_dqls": all_dqls,
                "all_bounds_hold": all_bounded,
                "min_fidelity": min_fidelity,
                "runs": runs,
            }))?;
            return Ok(all_dqls && all_bounded);
        }
        Command::Reconstruct { dims, supports } => {
            let dims = parse_dims(&dims)?;
            let inputs = supports
                .iter()
                .map(|p| {
                    let f: SupportFile =
                        read_json(p).with_context(|| format!("reading {}", p.display()))?;
                    Ok(f.to_support(&tol)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let r = reconstruct(&dims, &inputs, &tol)?;
            print_json(&json!({
                "status": r.status,
                "candidate_dim": r.candidate_space.dim(),
                "state": r.state.as_ref().map(StateFile::from_state),
            }))?;
        }
        Command::Selftest { base_seed } => {
            let report = run_suite(base_seed, &tol);
            print_json(&serde_json::to_value(&report)?)?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
