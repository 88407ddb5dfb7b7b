//! The implicit entropy-stable step and the time loop.
//!
//! One step of the regularized system solves, per species i,
//!
//!   u_i^{n+1} = u_i^n + dt * div( M_i grad( V_i + delta_i u_i^{n+1} ) ),
//!   V_i = sum_j A_ij (rho * rho * u_j^{n+1}),
//!
//! where M_i is the edge mobility of species i frozen at the current Picard
//! iterate and rho* is mollification by the kernel. The double mollification
//! lets one rho move onto each factor of the cross term (the kernel is
//! self-adjoint and commutes with the gradient), so testing the step with
//! psi'(u^{n+1}) gives, exactly at the discrete level,
//!
//!   Psi(u^{n+1}) + dt * [ Q_A(grad rho*u^{n+1}) + sum_i delta_i
//!          ||grad u_i^{n+1}||^2 ]  <=  Psi(u^n) + (Picard defect),
//!
//! because the edge mobility turns M_i grad psi'(u_i) into grad u_i with no
//! quadrature error, and convexity of psi handles the time difference. The
//! quadratic form Q_A is bounded below by delta0 of the positivity
//! certificate, which closes the estimate without any time-step restriction.
//!
//! Below the coercivity threshold dt < tau = min_i(delta_i eps_i) /
//! (g^2 max_i(ell_i)^2 ||A||^2), with g the discrete L^1 norm of the kernel
//! gradient, the step additionally satisfies the L^2 bound
//!
//!   (1 - dt/tau) ||u^{n+1}||^2 + dt sum_i delta_i eps_i ||grad u_i^{n+1}||^2
//!          <= ||u^n||^2,
//!
//! and both inequalities are enforced as runtime invariants, step by step.

use crate::coefficients::{CouplingMatrix, PositivityCertificate};
use crate::entropy::{edge_mobility, EntropyError, EntropyFunction, SpeciesState};
use crate::grid::{
    build_mollifier, convolve, divergence, edge_l2_norm_sq, gradient, l2_norm_sq, EdgeField,
    GridError, GridSpec, MollifierKernel, MollifierProfile, ScalarField,
};
use crate::linalg::{gmres, DenseMatrix, LinalgError, LuFactors};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("regularization needs 0 < eps < 1 < ell and delta > 0, got eps = {eps}, ell = {ell}, delta = {delta} for species {species}")]
    BadRegularization {
        species: usize,
        eps: f64,
        ell: f64,
        delta: f64,
    },
    #[error("per-species parameter lists must share one nonzero length, got {eps}/{ell}/{delta}")]
    RaggedRegularization { eps: usize, ell: usize, delta: usize },
    #[error("matrix couples {matrix} species but regularization describes {reg}")]
    SpeciesMismatch { matrix: usize, reg: usize },
    #[error("time step must be positive and finite, got {0}")]
    BadDt(f64),
    #[error("certificate does not match the coupling matrix: {0}")]
    BadCertificate(#[from] crate::coefficients::CertificateError),
    #[error("strict stability requires dt < tau, got dt = {dt:.6e} >= tau = {tau:.6e}")]
    StrictStability { dt: f64, tau: f64 },
    #[error("initial state has {got} species, solver is built for {want}")]
    WrongSpeciesCount { got: usize, want: usize },
    #[error("initial state lives on grid {got:?}, solver is built for {want:?}")]
    WrongGrid { got: GridSpec, want: GridSpec },
    #[error("initial species {species} has value {value:.3e} below the -1e-12 floor at cell {cell}")]
    NegativeInitialData {
        species: usize,
        cell: usize,
        value: f64,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("linear solve failed at step {step}: {source}")]
    LinearSolve { step: usize, source: LinalgError },
    #[error("Picard iteration did not converge at step {step}: {iterations} iterations, diff = {diff:.3e}, residual = {residual:.3e}, tol = {tol:.3e}")]
    FixedPointFailure {
        step: usize,
        iterations: usize,
        diff: f64,
        residual: f64,
        tol: f64,
    },
    #[error("invariant violated at step {step}: {violation}")]
    StepFailure { step: usize, violation: StepViolation },
}

#[derive(Debug, Error, PartialEq)]
pub enum StepViolation {
    #[error("entropy balance defect {defect:.3e} exceeds allowance {allowed:.3e}")]
    EntropyIncrease { defect: f64, allowed: f64 },
    #[error("weighted entropy balance defect {defect:.3e} exceeds allowance {allowed:.3e}")]
    WeightedEntropyIncrease { defect: f64, allowed: f64 },
    #[error("species {species} mass drifted by {drift:.3e} in one step (allowed {allowed:.3e})")]
    MassDrift {
        species: usize,
        drift: f64,
        allowed: f64,
    },
    #[error("L2 stability bound failed: lhs {lhs:.6e} > rhs {rhs:.6e}")]
    StabilityBound { lhs: f64, rhs: f64 },
    #[error("state became non-finite")]
    NonFinite,
}

/// Per-species truncation and viscosity parameters.
///
/// The solver carries these per species because a diagonal rescaling of the
/// unknowns maps (A R, uniform (eps, ell, delta)) onto (A, per-species
/// (r_i eps, r_i ell, delta / r_i)): the truncated mobility scales as
/// T_{r eps, r ell}(r a) = r T_{eps,ell}(a), exactly, so the two runs are
/// the same trajectory up to the scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationParams {
    eps: Vec<f64>,
    ell: Vec<f64>,
    delta: Vec<f64>,
}

impl RegularizationParams {
    pub fn uniform(m: usize, eps: f64, ell: f64, delta: f64) -> Result<Self, SchemeError> {
        Self::per_species(vec![eps; m], vec![ell; m], vec![delta; m])
    }

    pub fn per_species(
        eps: Vec<f64>,
        ell: Vec<f64>,
        delta: Vec<f64>,
    ) -> Result<Self, SchemeError> {
        if eps.is_empty() || eps.len() != ell.len() || eps.len() != delta.len() {
            return Err(SchemeError::RaggedRegularization {
                eps: eps.len(),
                ell: ell.len(),
                delta: delta.len(),
            });
        }
        for i in 0..eps.len() {
            let ok = eps[i] > 0.0
                && eps[i] < 1.0
                && ell[i] > 1.0
                && ell[i].is_finite()
                && delta[i] > 0.0
                && delta[i].is_finite();
            if !ok {
                return Err(SchemeError::BadRegularization {
                    species: i,
                    eps: eps[i],
                    ell: ell[i],
                    delta: delta[i],
                });
            }
        }
        Ok(RegularizationParams { eps, ell, delta })
    }

    /// The parameters of the rescaled system u_i = r_i v_i: thresholds scale
    /// with r_i, viscosity against it.
    pub fn scaled(&self, r: &[f64]) -> Result<Self, SchemeError> {
        if r.len() != self.m() {
            return Err(SchemeError::RaggedRegularization {
                eps: self.m(),
                ell: self.m(),
                delta: r.len(),
            });
        }
        Self::per_species(
            self.eps.iter().zip(r).map(|(e, ri)| e * ri).collect(),
            self.ell.iter().zip(r).map(|(l, ri)| l * ri).collect(),
            self.delta.iter().zip(r).map(|(d, ri)| d / ri).collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self, i: usize) -> f64 {
        self.eps[i]
    }

    pub fn ell(&self, i: usize) -> f64 {
        self.ell[i]
    }

    pub fn delta(&self, i: usize) -> f64 {
        self.delta[i]
    }
}

/// Picard fixed-point controls.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardParams {
    /// Relative successive-difference tolerance.
    pub tol: f64,
    pub max_iters: usize,
    /// Fraction of the previous iterate blended into the update (0 = none).
    pub damping: f64,
}

impl Default for PicardParams {
    fn default() -> Self {
        PicardParams { tol: 1e-10, max_iters: 60, damping: 0.0 }
    }
}

/// Linear-solver controls. Systems of at most `dense_threshold` unknowns are
/// assembled and LU-factored; larger ones run matrix-free GMRES.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub dense_threshold: usize,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
    /// Relative residual target for GMRES.
    pub gmres_tol: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams {
            dense_threshold: 256,
            gmres_restart: 50,
            gmres_max_iters: 4000,
            gmres_tol: 1e-12,
        }
    }
}

/// Everything a solver needs besides the grid and the initial state.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub matrix: CouplingMatrix,
    pub certificate: PositivityCertificate,
    pub reg: RegularizationParams,
    pub eta: f64,
    pub profile: MollifierProfile,
    pub dt: f64,
    pub steps: usize,
    pub picard: PicardParams,
    pub linear: LinearParams,
    /// Refuse to run unless dt < tau (the provable L^2 stability window).
    pub strict_stability: bool,
    /// Check the entropy balance and mass conservation each step and fail
    /// loudly on violation. On by default; the records are written anyway.
    pub enforce_invariants: bool,
}

impl SchemeConfig {
    pub fn new(
        matrix: CouplingMatrix,
        certificate: PositivityCertificate,
        reg: RegularizationParams,
        eta: f64,
        dt: f64,
        steps: usize,
    ) -> Self {
        SchemeConfig {
            matrix,
            certificate,
            reg,
            eta,
            profile: MollifierProfile::CosineBump,
            dt,
            steps,
            picard: PicardParams::default(),
            linear: LinearParams::default(),
            strict_stability: false,
            enforce_invariants: true,
        }
    }
}

/// Everything recorded about one accepted step. `step` counts from 1; the
/// initial state is reported separately as step 0 with the solver fields
/// absent.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub masses: Vec<f64>,
    /// sum_i int psi_{eps_i, ell_i}(u_i).
    pub entropy: f64,
    /// Certificate-weighted entropy sum_i (L_i / R_i) int psi_i(u_i); absent
    /// without a certificate.
    pub entropy_weighted: Option<f64>,
    /// Quadratic energy 1/2 sum_ij A_ij <u_i, u_j>; absent for non-symmetric
    /// coupling.
    pub energy: Option<f64>,
    /// sum_i delta_i ||grad u_i||^2 — the viscous dissipation, exact in the
    /// entropy balance.
    pub diss_grad: f64,
    /// sum_i ||grad(rho * u_i)||^2 / R_i^2 — the mollified dissipation the
    /// certificate bounds from below (R = 1 without scaling).
    pub diss_moll: f64,
    pub min_value: f64,
    /// (1 - dt/tau) ||u^{n+1}||^2 + dt sum_i delta_i eps_i ||grad u_i||^2.
    pub est0_lhs: f64,
    /// ||u^n||^2.
    pub est0_rhs: f64,
    pub picard_iters: usize,
    /// Relative residual of the last linear solve (0 for exact LU).
    pub linear_residual: f64,
}

/// Summary of the initial state, written as the step-0 record.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDiagnostics {
    pub masses: Vec<f64>,
    pub entropy: f64,
    pub entropy_weighted: Option<f64>,
    pub energy: Option<f64>,
    pub min_value: f64,
}

/// A completed run: the final state plus every per-step record.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub initial: InitialDiagnostics,
    pub records: Vec<StepDiagnostics>,
    pub final_state: SpeciesState,
}

/// The configured solver: kernel, certificate weights, entropy functions and
/// the stability threshold are fixed at construction.
pub struct Solver {
    cfg: SchemeConfig,
    grid: GridSpec,
    kernel: MollifierKernel,
    psis: Vec<EntropyFunction>,
    /// Entropy weights w_i = L_i / R_i (1 without a certificate, for records).
    weights: Option<Vec<f64>>,
    /// Right scaling R_i entering the dissipation bound.
    rights: Option<Vec<f64>>,
    spectral_norm: f64,
    tau: f64,
}

impl Solver {
    pub fn new(cfg: SchemeConfig, grid: GridSpec) -> Result<Self, SchemeError> {
        let m = cfg.matrix.m();
        if cfg.reg.m() != m {
            return Err(SchemeError::SpeciesMismatch { matrix: m, reg: cfg.reg.m() });
        }
        cfg.certificate.verify(&cfg.matrix)?;
        if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
            return Err(SchemeError::BadDt(cfg.dt));
        }
        let kernel = build_mollifier(grid, cfg.eta, cfg.profile)?;
        let mut psis = Vec::with_capacity(m);
        for i in 0..m {
            psis.push(EntropyFunction::psi_eps_ell(cfg.reg.eps(i), cfg.reg.ell(i))?);
        }
        let weights = cfg.certificate.left_weights(m).map(|l| {
            let r = cfg.certificate.right_weights(m).expect("paired with left");
            l.iter().zip(&r).map(|(li, ri)| li / ri).collect()
        });
        let rights = cfg.certificate.right_weights(m);
        let spectral_norm = cfg.matrix.spectral_norm();
        let tau = stability_threshold(&cfg.reg, kernel.grad_l1(), spectral_norm);
        if cfg.strict_stability && cfg.dt >= tau {
            return Err(SchemeError::StrictStability { dt: cfg.dt, tau });
        }
        Ok(Solver {
            cfg,
            grid,
            kernel,
            psis,
            weights,
            rights,
            spectral_norm,
            tau,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn kernel(&self) -> &MollifierKernel {
        &self.kernel
    }

    /// The coercivity threshold tau below which the L^2 bound is provable.
    pub fn max_stable_dt(&self) -> f64 {
        self.tau
    }

    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    /// Validates and adopts an initial state: species count, grid, and a
    /// non-negativity floor (values in [-1e-12, 0) are rounding debris from
    /// upstream constructions and are clamped to 0; anything lower is an
    /// error).
    pub fn prepare_initial_state(&self, mut state: SpeciesState) -> Result<SpeciesState, SchemeError> {
        let m = self.cfg.matrix.m();
        if state.m() != m {
            return Err(SchemeError::WrongSpeciesCount { got: state.m(), want: m });
        }
        if state.grid() != self.grid {
            return Err(SchemeError::WrongGrid { got: state.grid(), want: self.grid });
        }
        for (i, f) in state.fields_mut().iter_mut().enumerate() {
            for (cell, v) in f.values_mut().iter_mut().enumerate() {
                if *v < 0.0 {
                    if *v < -1e-12 {
                        return Err(SchemeError::NegativeInitialData {
                            species: i,
                            cell,
                            value: *v,
                        });
                    }
                    *v = 0.0;
                }
            }
        }
        Ok(state)
    }

    /// Diagnostics of a state outside the stepping loop (the step-0 record).
    pub fn initial_diagnostics(&self, state: &SpeciesState) -> InitialDiagnostics {
        InitialDiagnostics {
            masses: state.masses(),
            entropy: self.entropy_of(state),
            entropy_weighted: self.weighted_entropy_of(state),
            energy: self.energy_of(state),
            min_value: state.min_value(),
        }
    }

    fn entropy_of(&self, state: &SpeciesState) -> f64 {
        let vol = self.grid.cell_volume();
        let mut total = 0.0;
        for (i, f) in state.fields().iter().enumerate() {
            let mut s = 0.0;
            for &v in f.values() {
                s += self.psis[i].eval(v);
            }
            total += s * vol;
        }
        total
    }

    fn weighted_entropy_of(&self, state: &SpeciesState) -> Option<f64> {
        let w = self.weights.as_ref()?;
        let vol = self.grid.cell_volume();
        let mut total = 0.0;
        for (i, f) in state.fields().iter().enumerate() {
            let mut s = 0.0;
            for &v in f.values() {
                s += self.psis[i].eval(v);
            }
            total += w[i] * s * vol;
        }
        Some(total)
    }

    fn energy_of(&self, state: &SpeciesState) -> Option<f64> {
        if !self.cfg.matrix.is_symmetric() {
            return None;
        }
        crate::entropy::energy_functional(&self.cfg.matrix, state).ok()
    }

    /// Frozen edge mobilities of a state: per species, per axis.
    fn mobilities(&self, state: &SpeciesState) -> Vec<EdgeField> {
        let m = state.m();
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let (eps, ell) = (self.cfg.reg.eps(i), self.cfg.reg.ell(i));
            let v = state.field(i).values();
            let mut comps = Vec::with_capacity(self.grid.dim());
            for k in 0..self.grid.dim() {
                let mut c = vec![0.0; v.len()];
                for (idx, ci) in c.iter_mut().enumerate() {
                    let up = crate::grid::shift_up(self.grid, idx, k);
                    *ci = edge_mobility(v[idx], v[up], eps, ell);
                }
                comps.push(c);
            }
            out.push(EdgeField::from_components(self.grid, comps).expect("matching shapes"));
        }
        out
    }

    /// Applies the frozen linear step operator B(v) = v - dt div(M grad(A
    /// rho rho v + delta v)) to a stacked species vector.
    fn apply_operator(&self, mobility: &[EdgeField], v: &[f64], out: &mut [f64]) {
        let cells = self.grid.cells();
        let m = self.cfg.matrix.m();
        // Doubly mollified species.
        let mut smoothed: Vec<ScalarField> = Vec::with_capacity(m);
        for j in 0..m {
            let f = ScalarField::from_values_unchecked(self.grid, v[j * cells..(j + 1) * cells].to_vec());
            let once = convolve(&self.kernel, &f).expect("same grid");
            smoothed.push(convolve(&self.kernel, &once).expect("same grid"));
        }
        for i in 0..m {
            // Z_i = sum_j A_ij (rho rho v_j) + delta_i v_i, one gradient.
            let mut z = vec![0.0; cells];
            for j in 0..m {
                let a = self.cfg.matrix.entry(i, j);
                if a != 0.0 {
                    for (zi, sj) in z.iter_mut().zip(smoothed[j].values()) {
                        *zi += a * sj;
                    }
                }
            }
            let delta = self.cfg.reg.delta(i);
            for (zi, vi) in z.iter_mut().zip(&v[i * cells..(i + 1) * cells]) {
                *zi += delta * vi;
            }
            let mut flux = gradient(&ScalarField::from_values_unchecked(self.grid, z));
            for k in 0..self.grid.dim() {
                let mob = mobility[i].component(k);
                for (f, mk) in flux.component_mut(k).iter_mut().zip(mob) {
                    *f *= mk;
                }
            }
            let dv = divergence(&flux);
            let o = &mut out[i * cells..(i + 1) * cells];
            for ((oi, vi), di) in o.iter_mut().zip(&v[i * cells..(i + 1) * cells]).zip(dv.values()) {
                *oi = vi - self.cfg.dt * di;
            }
        }
    }

    /// Solves B(u) = u^n for the increment d = u - u^n: B(d) = dt div F(u^n)
    /// so the right-hand side has exactly zero mean per species, and so does
    /// d up to roundoff; the per-species mean is re-anchored to keep mass
    /// drift at the floating-point floor regardless of run length. Returns
    /// (u, relative linear residual after anchoring).
    fn solve_linear(
        &self,
        step: usize,
        mobility: &[EdgeField],
        u_n: &[f64],
        guess: &[f64],
    ) -> Result<(Vec<f64>, f64), SchemeError> {
        let cells = self.grid.cells();
        let m = self.cfg.matrix.m();
        let n_total = m * cells;

        // rhs for the increment: B(u^n) maps u^n to u^n - dt div F(u^n), so
        // u^n - B(u^n) = dt div F(u^n).
        let mut b_un = vec![0.0; n_total];
        self.apply_operator(mobility, u_n, &mut b_un);
        let rhs: Vec<f64> = u_n.iter().zip(&b_un).map(|(u, b)| u - b).collect();

        let mut d = if n_total <= self.cfg.linear.dense_threshold {
            let lu = self.dense_factors(mobility, n_total)?;
            lu.solve(&rhs)
                .map_err(|source| SchemeError::LinearSolve { step, source })?
        } else {
            let x0: Vec<f64> = guess.iter().zip(u_n).map(|(g, u)| g - u).collect();
            let res = gmres(
                |x, out| self.apply_operator(mobility, x, out),
                &rhs,
                &x0,
                self.cfg.linear.gmres_restart,
                self.cfg.linear.gmres_max_iters,
                self.cfg.linear.gmres_tol,
            )
            .map_err(|source| SchemeError::LinearSolve { step, source })?;
            res.x
        };

        // Re-anchor the per-species mean: the exact solution has mean zero.
        for i in 0..m {
            let s = &mut d[i * cells..(i + 1) * cells];
            let mean = s.iter().sum::<f64>() / cells as f64;
            for v in s.iter_mut() {
                *v -= mean;
            }
        }

        // True residual of the anchored increment.
        let mut bd = vec![0.0; n_total];
        self.apply_operator(mobility, &d, &mut bd);
        let mut res_sq = 0.0;
        let mut rhs_sq = 0.0;
        for (bi, ri) in bd.iter().zip(&rhs) {
            res_sq += (bi - ri) * (bi - ri);
            rhs_sq += ri * ri;
        }
        let rel_res = res_sq.sqrt() / rhs_sq.sqrt().max(1e-300);

        let u: Vec<f64> = u_n.iter().zip(&d).map(|(un, di)| un + di).collect();
        Ok((u, rel_res))
    }

    fn dense_factors(&self, mobility: &[EdgeField], n: usize) -> Result<LuFactors, SchemeError> {
        let mat = DenseMatrix::from_operator(n, |x, out| self.apply_operator(mobility, x, out));
        mat.lu()
            .map_err(|source| SchemeError::LinearSolve { step: 0, source })
    }

    /// One implicit step from `state`; returns the accepted state and its
    /// diagnostics. Invariants are checked here when enforcement is on.
    pub fn step(
        &self,
        state: &SpeciesState,
        step_index: usize,
    ) -> Result<(SpeciesState, StepDiagnostics), SchemeError> {
        let m = self.cfg.matrix.m();
        let u_n = stack(state);

        // Picard: freeze the mobility at the current iterate, solve the
        // linear problem, blend, repeat.
        let mut v = u_n.clone();
        let mut v_state = state.clone();
        let mut picard_iters = 0;
        let mut linear_residual = 0.0;
        let mut converged = false;
        let mut last_diff = f64::INFINITY;
        let mut last_res = f64::INFINITY;
        let scale = norm2(&u_n).max(1.0);

        while picard_iters < self.cfg.picard.max_iters {
            let mobility = self.mobilities(&v_state);
            let (u_raw, rel_res) = self.solve_linear(step_index, &mobility, &u_n, &v)?;
            picard_iters += 1;
            linear_residual = rel_res;
            let damping = self.cfg.picard.damping;
            let u_new: Vec<f64> = if damping > 0.0 {
                u_raw
                    .iter()
                    .zip(&v)
                    .map(|(r, p)| (1.0 - damping) * r + damping * p)
                    .collect()
            } else {
                u_raw
            };
            let diff = dist2(&u_new, &v) / scale;
            v = u_new;
            v_state = unstack(self.grid, m, &v, state.time());
            last_diff = diff;
            if diff <= self.cfg.picard.tol {
                // Certify with the nonlinear residual: B_{M(v)}(v) = u^n.
                let mobility = self.mobilities(&v_state);
                let mut bv = vec![0.0; v.len()];
                self.apply_operator(&mobility, &v, &mut bv);
                let res = dist2(&bv, &u_n) / scale;
                last_res = res;
                if res <= 10.0 * self.cfg.picard.tol {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            return Err(SchemeError::FixedPointFailure {
                step: step_index,
                iterations: picard_iters,
                diff: last_diff,
                residual: last_res,
                tol: self.cfg.picard.tol,
            });
        }

        if v.iter().any(|x| !x.is_finite()) {
            return Err(SchemeError::StepFailure {
                step: step_index,
                violation: StepViolation::NonFinite,
            });
        }

        let mut new_state = unstack(self.grid, m, &v, state.time() + self.cfg.dt);
        new_state.set_time(state.time() + self.cfg.dt);
        let diag = self.diagnose(state, &new_state, step_index, picard_iters, linear_residual)?;
        Ok((new_state, diag))
    }

    /// Computes the step record and enforces the invariants.
    fn diagnose(
        &self,
        old: &SpeciesState,
        new: &SpeciesState,
        step: usize,
        picard_iters: usize,
        linear_residual: f64,
    ) -> Result<StepDiagnostics, SchemeError> {
        let m = new.m();
        let masses = new.masses();
        let entropy = self.entropy_of(new);
        let entropy_weighted = self.weighted_entropy_of(new);
        let energy = self.energy_of(new);

        // Dissipation functionals of the accepted state.
        let mut diss_grad = 0.0;
        let mut diss_eps = 0.0;
        let mut diss_moll = 0.0;
        for i in 0..m {
            let g = gradient(new.field(i));
            let gsq = edge_l2_norm_sq(&g);
            diss_grad += self.cfg.reg.delta(i) * gsq;
            diss_eps += self.cfg.reg.delta(i) * self.cfg.reg.eps(i) * gsq;
            let smooth = convolve(&self.kernel, new.field(i))?;
            let gm = edge_l2_norm_sq(&gradient(&smooth));
            let r = self.rights.as_ref().map_or(1.0, |r| r[i]);
            diss_moll += gm / (r * r);
        }

        let est0_rhs: f64 = old.fields().iter().map(l2_norm_sq).sum();
        let new_sq: f64 = new.fields().iter().map(l2_norm_sq).sum();
        let est0_lhs = (1.0 - self.cfg.dt / self.tau) * new_sq + self.cfg.dt * diss_eps;

        let diag = StepDiagnostics {
            step,
            time: new.time(),
            masses: masses.clone(),
            entropy,
            entropy_weighted,
            energy,
            diss_grad,
            diss_moll,
            min_value: new.min_value(),
            est0_lhs,
            est0_rhs,
            picard_iters,
            linear_residual,
        };

        if self.cfg.enforce_invariants {
            // Mass: each species' integral is conserved step to step.
            let old_masses = old.masses();
            for i in 0..m {
                let drift = (masses[i] - old_masses[i]).abs();
                let allowed = 1e-13 * old_masses[i].abs().max(1.0);
                if drift > allowed {
                    return Err(SchemeError::StepFailure {
                        step,
                        violation: StepViolation::MassDrift { species: i, drift, allowed },
                    });
                }
            }

            // Weighted entropy balance with the certified dissipation. The
            // Picard defect is the only slack, bounded by 100 tolerances of
            // the fixed point (flux-magnitude Lipschitz constants are O(1)
            // for the truncated mobilities).
            if let (Some(w_new), Some(delta0)) =
                (entropy_weighted, self.cfg.certificate.delta0())
            {
                let w_old = self.weighted_entropy_of(old).expect("same certificate");
                let mut w_diss_grad = 0.0;
                let w = self.weights.as_ref().expect("weighted entropy exists");
                for i in 0..m {
                    let gsq = edge_l2_norm_sq(&gradient(new.field(i)));
                    w_diss_grad += w[i] * self.cfg.reg.delta(i) * gsq;
                }
                let defect =
                    w_new + self.cfg.dt * (w_diss_grad + delta0 * diss_moll) - w_old;
                let allowed = 100.0
                    * self.cfg.picard.tol
                    * w_old.abs().max(1.0)
                    * (1.0 + self.cfg.dt);
                if defect > allowed {
                    return Err(SchemeError::StepFailure {
                        step,
                        violation: StepViolation::WeightedEntropyIncrease { defect, allowed },
                    });
                }
            }

            // L^2 stability in the provable window.
            if self.cfg.strict_stability {
                let slack = 1e-10 * est0_rhs.max(1.0);
                if est0_lhs > est0_rhs + slack {
                    return Err(SchemeError::StepFailure {
                        step,
                        violation: StepViolation::StabilityBound {
                            lhs: est0_lhs,
                            rhs: est0_rhs,
                        },
                    });
                }
            }
        }

        Ok(diag)
    }

    /// Runs the configured number of steps from a prepared initial state,
    /// invoking `on_step` after each accepted step. Returns every record and
    /// the final state; errors carry the index of the failing step, and all
    /// earlier steps have already been delivered through the callback.
    pub fn run(
        &self,
        initial: SpeciesState,
        mut on_step: impl FnMut(&StepDiagnostics, &SpeciesState),
    ) -> Result<RunResult, SchemeError> {
        let state0 = self.prepare_initial_state(initial)?;
        let initial_diag = self.initial_diagnostics(&state0);
        let mut state = state0;
        let mut records = Vec::with_capacity(self.cfg.steps);
        for k in 1..=self.cfg.steps {
            let (next, diag) = self.step(&state, k)?;
            on_step(&diag, &next);
            records.push(diag);
            state = next;
        }
        Ok(RunResult { initial: initial_diag, records, final_state: state })
    }
}

/// tau = min_i(delta_i eps_i) / (g^2 max_i(ell_i)^2 ||A||^2); infinite when
/// the coupling vanishes.
fn stability_threshold(reg: &RegularizationParams, grad_l1: f64, spectral: f64) -> f64 {
    let mut min_de = f64::INFINITY;
    let mut max_ell = 0.0f64;
    for i in 0..reg.m() {
        min_de = min_de.min(reg.delta(i) * reg.eps(i));
        max_ell = max_ell.max(reg.ell(i));
    }
    let denom = grad_l1 * grad_l1 * max_ell * max_ell * spectral * spectral;
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        min_de / denom
    }
}

fn stack(state: &SpeciesState) -> Vec<f64> {
    let cells = state.grid().cells();
    let mut out = Vec::with_capacity(state.m() * cells);
    for f in state.fields() {
        out.extend_from_slice(f.values());
    }
    out
}

fn unstack(grid: GridSpec, m: usize, v: &[f64], time: f64) -> SpeciesState {
    let cells = grid.cells();
    let fields = (0..m)
        .map(|i| ScalarField::from_values_unchecked(grid, v[i * cells..(i + 1) * cells].to_vec()))
        .collect();
    SpeciesState::new(fields, time).expect("stacked layout is consistent")
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
