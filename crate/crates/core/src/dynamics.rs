//! Quasi-local Lindblad generators that stabilize a target pure state.
//!
//! Density matrices are vectorized by stacking columns, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dqls::{dqls_subspace, schmidt_span};
use crate::error::{DqlsError, Result};
use crate::linalg::{
    hermitian_eigenvalues, kernel, kron, unvec, vec, CMatrix, RankTolerance, C64, ONE,
};
use crate::locality::NeighborhoodStructure;
use crate::rng::{derive_seed, gaussian_c64, gaussian_matrix, seeded};
use crate::state::{named_state, DensityMatrix, NamedState, PureState, Split};

/// Largest total dimension for which a superoperator is formed.
pub const MAX_LIOUVILLIAN_DIM: usize = 64;

const RESAMPLES: u64 = 10;

/// A jump operator acting on the listed (increasing) subsystems.
#[derive(Clone, Debug)]
pub struct LindbladTerm {
    pub neighborhood: Vec<usize>,
    pub op: CMatrix,
}

#[derive(Clone, Debug)]
pub struct Liouvillian {
    dims: Vec<usize>,
    superop: CMatrix,
    lindblad_terms: Vec<LindbladTerm>,
    hamiltonian: Option<CMatrix>,
    target: Option<PureState>,
}

fn conj(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj())
}

impl Liouvillian {
    /// Assembles `-i[H, ·] + Σ_k (L_k · L_kᴴ - ½{L_kᴴ L_k, ·})` as a
    /// `d² x d²` matrix. `hamiltonian` acts on the full space.
    pub fn new(
        dims: Vec<usize>,
        lindblad_terms: Vec<LindbladTerm>,
        hamiltonian: Option<CMatrix>,
    ) -> Result<Self> {
        let d: usize = dims.iter().product();
        if dims.is_empty() || dims.iter().any(|&x| x < 2) {
            return Err(DqlsError::DimensionMismatch(format!(
                "invalid dimensions {dims:?}"
            )));
        }
        if d > MAX_LIOUVILLIAN_DIM {
            return Err(DqlsError::TooLarge(format!(
                "total dimension {d} exceeds {MAX_LIOUVILLIAN_DIM} for superoperators"
            )));
        }
        let id = CMatrix::identity(d, d);
        let mut superop = CMatrix::zeros(d * d, d * d);
        let mut k = CMatrix::zeros(d, d);
        for t in &lindblad_terms {
            let split = Split::new(&dims, &t.neighborhood)?;
            if t.op.nrows() != split.d_keep || t.op.ncols() != split.d_keep {
                return Err(DqlsError::DimensionMismatch(format!(
                    "jump operator on {:?} must be {0}x{0}",
                    split.d_keep
                )));
            }
            let l = split.embed_operator(t.op.as_ref());
            superop += kron(conj(&l).as_ref(), l.as_ref());
            k += l.adjoint() * &l;
        }
        superop -= (kron(id.as_ref(), k.as_ref()) + kron(k.transpose(), id.as_ref()))
            * faer::Scale(C64::new(0.5, 0.0));
        if let Some(h) = &hamiltonian {
            if h.nrows() != d || h.ncols() != d {
                return Err(DqlsError::DimensionMismatch(
                    "Hamiltonian size does not match dims".into(),
                ));
            }
            let comm = kron(id.as_ref(), h.as_ref()) - kron(h.transpose(), id.as_ref());
            superop += comm * faer::Scale(C64::new(0.0, -1.0));
        }
        Ok(Liouvillian {
            dims,
            superop,
            lindblad_terms,
            hamiltonian,
            target: None,
        })
    }

    pub fn with_target(mut self, target: PureState) -> Result<Self> {
        if target.dims() != self.dims.as_slice() {
            return Err(DqlsError::DimensionMismatch(
                "target dimensions differ".into(),
            ));
        }
        self.target = Some(target.normalized()?);
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn lindblad_terms(&self) -> &[LindbladTerm] {
        &self.lindblad_terms
    }

    pub fn hamiltonian(&self) -> Option<&CMatrix> {
        self.hamiltonian.as_ref()
    }

    pub fn target(&self) -> Option<&PureState> {
        self.target.as_ref()
    }

    /// `vec(I)ᴴ S`, which vanishes for trace-preserving generators.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for col in 0..d * d {
            let s: C64 = (0..d).map(|i| self.superop[(i * d + i, col)]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }

    /// `‖S vec(ρ)‖` for `ρ = |ψ><ψ|`.
    pub fn invariance_defect(&self, s: &PureState) -> Result<f64> {
        let rho = pure_density(s)?;
        Ok((&self.superop * vec(rho.as_ref())).norm_l2())
    }
}

fn pure_density(s: &PureState) -> Result<CMatrix> {
    let psi = s.normalized()?.to_column();
    Ok(&psi * psi.adjoint())
}

/// Jump operators `L_{j,k} = |η_j><w_{j,k}|` for an orthonormal basis
/// `w_{j,k}` of the orthogonal complement of the Schmidt span on
/// neighborhood `j` and a random unit vector `η_j` inside it. Every `L`
/// annihilates `ψ` and the dynamics drive into `H₀(ψ)`.
pub fn sweep_liouvillian(
    s: &PureState,
    ns: &NeighborhoodStructure,
    seed: u64,
    tol: &RankTolerance,
) -> Result<Liouvillian> {
    if ns.n() != s.n_subsystems() {
        return Err(DqlsError::DimensionMismatch(format!(
            "structure on {} subsystems, state has {}",
            ns.n(),
            s.n_subsystems()
        )));
    }
    if s.total_dim() > MAX_LIOUVILLIAN_DIM {
        return Err(DqlsError::TooLarge(format!(
            "total dimension {} exceeds {MAX_LIOUVILLIAN_DIM} for superoperators",
            s.total_dim()
        )));
    }
    let mut rng = seeded(seed);
    let mut terms = Vec::new();
    for nb in ns.neighborhoods() {
        let span = schmidt_span(s, nb, tol)?;
        let perp = span.complement()?;
        let coeffs = gaussian_matrix(&mut rng, span.dim(), 1);
        let mut eta = span.basis() * coeffs;
        let n = eta.norm_l2();
        eta *= faer::Scale(C64::new(1.0 / n, 0.0));
        for k in 0..perp.dim() {
            let w = perp.basis().subcols(k, 1);
            terms.push(LindbladTerm {
                neighborhood: nb.clone(),
                op: &eta * w.adjoint(),
            });
        }
    }
    Liouvillian::new(s.dims().to_vec(), terms, None)?.with_target(s.clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct GasCertificate {
    pub kernel_dim: usize,
    /// Largest real part over the whole spectrum.
    pub spectral_abscissa: f64,
    /// Zero is the only eigenvalue with non-negative real part (up to the
    /// tolerance) and it is simple.
    pub zero_eig_nondegenerate: bool,
    pub steady_state_fidelity: f64,
    /// `|Re λ₂|` for the slowest decaying mode; zero when undefined.
    pub gap: f64,
}

impl GasCertificate {
    pub fn passes(&self) -> bool {
        self.kernel_dim == 1
            && self.spectral_abscissa <= 1e-8
            && self.zero_eig_nondegenerate
            && self.steady_state_fidelity >= 1.0 - 1e-8
    }
}

/// Spectral test that `target` is the unique, globally attractive steady
/// state of `l`.
pub fn certify(l: &Liouvillian, target: &PureState, tol: &RankTolerance) -> Result<GasCertificate> {
    let d = l.dim();
    let k = kernel(l.superop.as_ref(), tol)?;
    let steady_state_fidelity = if k.dim() >= 1 {
        let mut rho = unvec(k.basis().col(0), d, d)?;
        let tr: C64 = (0..d).map(|i| rho[(i, i)]).sum();
        if tr.norm() < 1e-12 {
            0.0
        } else {
            rho *= faer::Scale(tr.inv());
            let psi = target.normalized()?.to_column();
            (psi.adjoint() * &rho * &psi)[(0, 0)].re.clamp(0.0, 1.0)
        }
    } else {
        0.0
    };
    let eig = l
        .superop
        .eigenvalues()
        .map_err(|e| DqlsError::InvalidMatrix(format!("eigensolver failed: {e:?}")))?;
    let scale = l.superop.norm_l2().max(1.0);
    let zero_tol = (1e-10 * scale).max(1e-9);
    let mut res: Vec<f64> = eig.iter().map(|z| z.re).collect();
    res.sort_by(|a, b| b.total_cmp(a));
    let spectral_abscissa = res.first().copied().unwrap_or(0.0);
    let peripheral = eig.iter().filter(|z| z.re >= -zero_tol).count();
    let zero_eig_nondegenerate = peripheral == 1 && eig.iter().any(|z| z.norm() <= zero_tol);
    let gap = res.get(1).map_or(0.0, |x| x.abs());
    Ok(GasCertificate {
        kernel_dim: k.dim(),
        spectral_abscissa,
        zero_eig_nondegenerate,
        steady_state_fidelity,
        gap,
    })
}

/// Builds a purely dissipative quasi-local generator with `ψ` as its unique
/// attractive steady state. Refuses when `dim H₀ > 1`. The random interior
/// vectors are redrawn up to ten times if the certificate fails.
pub fn build_stabilizer(
    s: &PureState,
    ns: &NeighborhoodStructure,
    seed: u64,
    tol: &RankTolerance,
) -> Result<(Liouvillian, GasCertificate)> {
    if s.total_dim() > MAX_LIOUVILLIAN_DIM {
        return Err(DqlsError::TooLarge(format!(
            "total dimension {} exceeds {MAX_LIOUVILLIAN_DIM} for superoperators",
            s.total_dim()
        )));
    }
    let v = dqls_subspace(s, ns, tol)?;
    if !v.is_dqls {
        return Err(DqlsError::NotDqlsTarget(format!(
            "dim H0 = {}, no quasi-local dissipation can single out the target",
            v.dim_h0
        )));
    }
    let mut last = None;
    for attempt in 0..=RESAMPLES {
        let l = sweep_liouvillian(s, ns, derive_seed(seed, &[attempt]), tol)?;
        let cert = certify(&l, s, tol)?;
        if cert.passes() {
            return Ok((l, cert));
        }
        last = Some(cert);
    }
    let c = last.expect("at least one attempt");
    Err(DqlsError::CertificateFailed(format!(
        "after {} attempts: kernel_dim {}, abscissa {:.3e}, simple zero {}, fidelity {:.6}",
        RESAMPLES + 1,
        c.kernel_dim,
        c.spectral_abscissa,
        c.zero_eig_nondegenerate,
        c.steady_state_fidelity
    )))
}

/// Every embedded jump operator annihilates `ψ` and `ψ` is an eigenvector
/// of the Hamiltonian, if there is one.
pub fn standard_form_check(l: &Liouvillian, s: &PureState, tol: &RankTolerance) -> Result<bool> {
    if s.dims() != l.dims() {
        return Err(DqlsError::DimensionMismatch(
            "state and generator dimensions differ".into(),
        ));
    }
    let d = l.dim();
    let psi = s.normalized()?.to_column();
    let eps = tol.threshold(1.0, d, d).max(1e-12);
    for t in &l.lindblad_terms {
        let split = Split::new(&l.dims, &t.neighborhood)?;
        let lp = split.apply_operator(t.op.as_ref(), psi.as_ref());
        if lp.norm_l2() > eps * t.op.norm_l2().max(1.0) {
            return Ok(false);
        }
    }
    if let Some(h) = &l.hamiltonian {
        let hp = h * &psi;
        let e = (psi.adjoint() * &hp)[(0, 0)];
        let r = hp - &psi * faer::Scale(e);
        if r.norm_l2() > eps * h.norm_l2().max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `L_k -> L_k + c_k I`, `H -> H + (1/2i) Σ_k (c̄_k L_k - c_k L_kᴴ)`, which
/// leaves the generator unchanged.
pub fn gauge_transform(l: &Liouvillian, c: &[C64]) -> Result<Liouvillian> {
    if c.len() != l.lindblad_terms.len() {
        return Err(DqlsError::DimensionMismatch(format!(
            "{} shifts for {} jump operators",
            c.len(),
            l.lindblad_terms.len()
        )));
    }
    let d = l.dim();
    let mut h = l
        .hamiltonian
        .clone()
        .unwrap_or_else(|| CMatrix::zeros(d, d));
    let mut terms = Vec::with_capacity(c.len());
    let half_over_i = C64::new(0.0, -0.5);
    for (t, &ck) in l.lindblad_terms.iter().zip(c) {
        let split = Split::new(&l.dims, &t.neighborhood)?;
        let big = split.embed_operator(t.op.as_ref());
        h += (&big * faer::Scale(ck.conj()) - big.adjoint() * faer::Scale(ck))
            * faer::Scale(half_over_i);
        let dk = t.op.nrows();
        terms.push(LindbladTerm {
            neighborhood: t.neighborhood.clone(),
            op: &t.op + CMatrix::identity(dk, dk) * faer::Scale(ck),
        });
    }
    let out = Liouvillian::new(l.dims.clone(), terms, Some(h))?;
    match &l.target {
        Some(t) => out.with_target(t.clone()),
        None => Ok(out),
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// `<ψ|ρ(t)|ψ>` when the generator carries a target.
    pub fidelity: Option<f64>,
    pub trace: f64,
    /// Smallest eigenvalue of the Hermitian part of `ρ(t)`.
    pub min_eigenvalue: f64,
}

fn matmul_power(p: &CMatrix, mut e: usize) -> CMatrix {
    let n = p.nrows();
    let mut result = CMatrix::identity(n, n);
    let mut base = p.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Classical fourth-order Runge-Kutta for `dρ/dt = L[ρ]`, sampled every
/// `dt`. The internal step is `dt` split into equal pieces no longer than
/// `0.1 / ‖S‖_F`. For small systems one step is a fixed polynomial in the
/// superoperator, so it is formed once as a matrix and raised to a power.
pub fn evolve(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<Vec<TrajectoryPoint>> {
    Ok(evolve_final(l, rho0, t_final, dt)?.0)
}

/// [`evolve`] that also returns the final density matrix.
pub fn evolve_final(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<(Vec<TrajectoryPoint>, CMatrix)> {
    if !(dt > 0.0 && dt.is_finite() && t_final.is_finite() && t_final >= dt) {
        return Err(DqlsError::InvalidParameter(format!(
            "need dt > 0 and t_final >= dt, got dt = {dt}, t_final = {t_final}"
        )));
    }
    if rho0.dims() != l.dims() {
        return Err(DqlsError::DimensionMismatch(
            "initial state dimensions differ".into(),
        ));
    }
    let d = l.dim();
    let dd = d * d;
    let s = &l.superop;
    let norm = s.norm_l2();
    let sub = if norm == 0.0 {
        1
    } else {
        (dt * norm / 0.1).ceil().max(1.0) as usize
    };
    let h = dt / sub as f64;
    let records = (t_final / dt + 1e-9).floor() as usize;
    let target = l.target.as_ref().map(|t| t.to_column());

    let observe = |x: &CMatrix, t: f64| -> Result<TrajectoryPoint> {
        let rho = unvec(x.col(0), d, d)?;
        let trace: f64 = (0..d).map(|i| rho[(i, i)].re).sum();
        let herm = CMatrix::from_fn(d, d, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
        let min_eigenvalue = hermitian_eigenvalues(herm.as_ref())?[0];
        let fidelity = target.as_ref().map(|p| (p.adjoint() * &rho * p)[(0, 0)].re);
        Ok(TrajectoryPoint {
            t,
            fidelity,
            trace,
            min_eigenvalue,
        })
    };

    let mut x = CMatrix::zeros(dd, 1);
    x.col_mut(0).copy_from(vec(rho0.matrix().as_ref()));
    let mut out = vec![observe(&x, 0.0)?];
    let tr0 = out[0].trace;

    let propagator = (dd <= 1024).then(|| {
        let a = s * faer::Scale(C64::new(h, 0.0));
        let id = CMatrix::identity(dd, dd);
        let mut p = &id + &a * faer::Scale(C64::new(0.25, 0.0));
        for k in [3.0, 2.0, 1.0] {
            p = &id + &a * &p * faer::Scale(C64::new(1.0 / k, 0.0));
        }
        matmul_power(&p, sub)
    });
    let hc = C64::new(h, 0.0);
    for r in 1..=records {
        x = match &propagator {
            Some(p) => p * &x,
            None => {
                let mut y = x;
                for _ in 0..sub {
                    let k1 = s * &y;
                    let k2 = s * (&y + &k1 * faer::Scale(hc * 0.5));
                    let k3 = s * (&y + &k2 * faer::Scale(hc * 0.5));
                    let k4 = s * (&y + &k3 * faer::Scale(hc));
                    y = &y
                        + (k1
                            + k2 * faer::Scale(C64::new(2.0, 0.0))
                            + k3 * faer::Scale(C64::new(2.0, 0.0))
                            + k4)
                            * faer::Scale(hc / 6.0);
                }
                y
            }
        };
        let p = observe(&x, r as f64 * dt)?;
        if !p.trace.is_finite() || (p.trace - tr0).abs() > 1e-6 {
            return Err(DqlsError::IntegrationUnstable(format!(
                "trace drifted to {} at t = {}; use a smaller dt",
                p.trace, p.t
            )));
        }
        out.push(p);
    }
    Ok((out, unvec(x.col(0), d, d)?))
}

/// `G Gᴴ / tr(G Gᴴ)` for a complex Gaussian `G`.
pub fn random_density(dims: &[usize], seed: u64) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    let mut rng = seeded(seed);
    let g = gaussian_matrix(&mut rng, d, d);
    let m = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| m[(i, i)].re).sum();
    let m = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(m[(i, i)].re / tr, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * (0.5 / tr)
        }
    });
    DensityMatrix::new(dims.to_vec(), m)
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn haar_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = seeded(seed);
    let g = gaussian_matrix(&mut rng, n, n);
    let qr = g.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R();
    CMatrix::from_fn(n, n, |i, j| {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() == 0.0 {
            ONE
        } else {
            rjj / rjj.norm()
        };
        q[(i, j)] * ph
    })
}

/// Eigenphases in `[0, 2π)` and an orthonormal eigenbasis of a unitary.
pub fn unitary_log(u: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = u
        .eigen()
        .map_err(|e| DqlsError::InvalidMatrix(format!("eigensolver failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let tau = std::f64::consts::TAU;
    let phases: Vec<f64> = (0..s.nrows())
        .map(|i| {
            let a = s[i].arg();
            if a < 0.0 {
                (a + tau) % tau
            } else {
                a
            }
        })
        .collect();
    let q = eig.U().to_owned().qr().compute_thin_Q();
    Ok((phases, q))
}

#[derive(Clone, Debug, Serialize)]
pub struct GhzEpsReport {
    pub epsilon: f64,
    pub seed: u64,
    pub h_norm: f64,
    pub fidelity: f64,
    /// Lower bound on the fidelity, `(1 - y)²` with `y = x / (1 - x)` and
    /// `x = ε‖H‖`; zero once `y > 1`, where the expression stops being
    /// informative.
    pub bound: f64,
    pub bound_satisfied: bool,
    pub target_was_dqls: bool,
    pub dim_h0: usize,
}

pub fn fidelity_bound(x: f64) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    let y = x / (1.0 - x);
    if y > 1.0 {
        0.0
    } else {
        (1.0 - y) * (1.0 - y)
    }
}

/// Perturbs the four-qubit GHZ state by `exp(-iεH)` for `H = -i Log U`,
/// `U` Haar-random, and tests the result against the overlapping-triples
/// structure.
pub fn practical_stabilization_experiment(
    epsilon: f64,
    seed: u64,
    tol: &RankTolerance,
) -> Result<GhzEpsReport> {
    if !(0.0..=0.2).contains(&epsilon) {
        return Err(DqlsError::InvalidParameter(format!(
            "epsilon {epsilon} outside [0, 0.2]"
        )));
    }
    let ghz = named_state(&NamedState::Ghz { n: 4, d: 2 })?;
    let u = haar_unitary(16, seed);
    let (phases, q) = unitary_log(&u)?;
    let h_norm = phases.iter().copied().fold(0.0, f64::max);
    let g = ghz.to_column();
    let coeffs = q.adjoint() * &g;
    let rotated = CMatrix::from_fn(16, 1, |k, _| {
        coeffs[(k, 0)] * C64::from_polar(1.0, -epsilon * phases[k])
    });
    let psi = PureState::from_column(vec![2; 4], (&q * rotated).col(0))?;
    let fidelity = ghz.fidelity(&psi)?;
    let ns = NeighborhoodStructure::from_one_based(4, &[&[1, 2, 3], &[2, 3, 4]])?;
    let v = dqls_subspace(&psi, &ns, tol)?;
    let bound = fidelity_bound(epsilon * h_norm);
    Ok(GhzEpsReport {
        epsilon,
        seed,
        h_norm,
        fidelity,
        bound,
        bound_satisfied: fidelity >= bound - 1e-12,
        target_was_dqls: v.is_dqls,
        dim_h0: v.dim_h0,
    })
}

/// Runs the experiment for seeds `derive_seed(base, [k])`, `k < seeds`.
pub fn ghz_eps_batch(
    epsilon: f64,
    seeds: usize,
    base: u64,
    tol: &RankTolerance,
) -> Result<Vec<GhzEpsReport>> {
    (0..seeds as u64)
        .into_par_iter()
        .map(|k| practical_stabilization_experiment(epsilon, derive_seed(base, &[k]), tol))
        .collect()
}

/// Complex Gaussian gauge shifts `c_k`.
pub fn random_shifts(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = seeded(seed);
    (0..n).map(|_| gaussian_c64(&mut rng)).collect()
}
