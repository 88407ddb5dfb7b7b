//! Limit schedules: driving the regularization parameters toward the
//! degenerate problem and certifying that the trajectories converge.
//!
//! The approximation ladder has four knobs — time step dt, lower truncation
//! eps, upper truncation ell, mollifier width eta — plus the viscosity
//! delta. The continuous construction removes them in stages, each stage
//! holding the others fixed. A [`LimitSchedule`] encodes one stage as a
//! finite sequence of parameter levels, validated to move monotonically in
//! the stage's limit direction:
//!
//! - `DtEps`:  dt -> 0 and eps -> 0 together (ell, eta, delta fixed);
//! - `EllEta`: ell -> infinity and eta -> 0 together;
//! - `Delta`:  delta -> 0;
//! - `Joint`:  all five move at once.
//!
//! [`run_schedule`] integrates every level from the same initial state over
//! the same horizon, samples all trajectories at the coarsest level's step
//! times, and reports the L^2(0,T; L^2) distances between consecutive
//! levels. A converging ladder produces strictly decreasing distances (a
//! Cauchy sequence in the discrete norm); each level also carries its
//! cumulative entropy budget
//!
//!   W(u(T)) + delta0 * dt * sum_n diss_moll(n)  <=  W(u(0)) + tolerance
//!
//! and its negativity constant max(0, -min u) / sqrt(eps), the quantity
//! that stays bounded as eps -> 0 when the scheme keeps the negative part
//! of the solution at the proven O(sqrt(eps)) scale.

use crate::coefficients::{CouplingMatrix, PositivityCertificate};
use crate::entropy::{EntropyFunction, SpeciesState};
use crate::grid::{GridSpec, MollifierProfile};
use crate::scheme::{
    InitialDiagnostics, LinearParams, PicardParams, RegularizationParams, SchemeConfig,
    SchemeError, Solver, StepDiagnostics,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("a schedule needs at least one level, got {0}")]
    TooFewLevels(usize),
    #[error("level {level}: {field} must {direction} along this stage (prev {prev}, next {next})")]
    NotMonotone {
        level: usize,
        field: &'static str,
        direction: &'static str,
        prev: f64,
        next: f64,
    },
    #[error("level {level}: {field} = {value} is outside its admissible range")]
    BadValue {
        level: usize,
        field: &'static str,
        value: f64,
    },
    #[error("generation factor must lie in (0, 1), got {0}")]
    BadFactor(f64),
    #[error("level {level}: horizon {horizon} is not an integer multiple of dt = {dt}")]
    HorizonMismatch { level: usize, horizon: f64, dt: f64 },
    #[error("level {level}: step count {steps} does not refine the coarsest level's {coarse}")]
    SamplingMismatch {
        level: usize,
        steps: usize,
        coarse: usize,
    },
    #[error("level {level}: regularized entropies must increase pointwise as eps shrinks; violated at a = {at}")]
    OrderingViolated { level: usize, at: f64 },
    #[error("the schedule's entropy budget needs a positivity certificate with a delta0")]
    NoCertificate,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// Which limit the schedule drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleStage {
    DtEps,
    EllEta,
    Delta,
    Joint,
}

/// One level of the ladder: the five regularization knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelParams {
    pub dt: f64,
    pub eps: f64,
    pub ell: f64,
    pub eta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy)]
enum Direction {
    Fixed,
    StrictDown,
    StrictUp,
}

fn stage_directions(stage: ScheduleStage) -> [(&'static str, Direction); 5] {
    use Direction::*;
    match stage {
        ScheduleStage::DtEps => [
            ("dt", StrictDown),
            ("eps", StrictDown),
            ("ell", Fixed),
            ("eta", Fixed),
            ("delta", Fixed),
        ],
        ScheduleStage::EllEta => [
            ("dt", Fixed),
            ("eps", Fixed),
            ("ell", StrictUp),
            ("eta", StrictDown),
            ("delta", Fixed),
        ],
        ScheduleStage::Delta => [
            ("dt", Fixed),
            ("eps", Fixed),
            ("ell", Fixed),
            ("eta", Fixed),
            ("delta", StrictDown),
        ],
        ScheduleStage::Joint => [
            ("dt", StrictDown),
            ("eps", StrictDown),
            ("ell", StrictUp),
            ("eta", StrictDown),
            ("delta", StrictDown),
        ],
    }
}

fn fields_of(p: &LevelParams) -> [f64; 5] {
    [p.dt, p.eps, p.ell, p.eta, p.delta]
}

/// A validated monotone sequence of levels for one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSchedule {
    stage: ScheduleStage,
    levels: Vec<LevelParams>,
}

impl LimitSchedule {
    /// Generates `count` levels from `base` by repeatedly applying `factor`
    /// to the stage's moving knobs (shrinking knobs are multiplied by it,
    /// the growing ell is divided by it).
    pub fn generated(
        stage: ScheduleStage,
        base: LevelParams,
        count: usize,
        factor: f64,
    ) -> Result<Self, ContinuationError> {
        if !(factor > 0.0 && factor < 1.0) {
            return Err(ContinuationError::BadFactor(factor));
        }
        let dirs = stage_directions(stage);
        let mut levels = Vec::with_capacity(count);
        let mut cur = base;
        for _ in 0..count {
            levels.push(cur);
            let mut f = fields_of(&cur);
            for (k, (_, d)) in dirs.iter().enumerate() {
                match d {
                    Direction::Fixed => {}
                    Direction::StrictDown => f[k] *= factor,
                    Direction::StrictUp => f[k] /= factor,
                }
            }
            cur = LevelParams { dt: f[0], eps: f[1], ell: f[2], eta: f[3], delta: f[4] };
        }
        Self::explicit(stage, levels)
    }

    /// Wraps explicit levels, validating ranges, monotonicity, and (for
    /// stages that shrink eps) the pointwise entropy ordering on [0, ell].
    pub fn explicit(
        stage: ScheduleStage,
        levels: Vec<LevelParams>,
    ) -> Result<Self, ContinuationError> {
        if levels.is_empty() {
            return Err(ContinuationError::TooFewLevels(levels.len()));
        }
        for (k, p) in levels.iter().enumerate() {
            let checks: [(&'static str, f64, bool); 5] = [
                ("dt", p.dt, p.dt > 0.0 && p.dt.is_finite()),
                ("eps", p.eps, p.eps > 0.0 && p.eps < 1.0),
                ("ell", p.ell, p.ell > 1.0 && p.ell.is_finite()),
                ("eta", p.eta, p.eta > 0.0 && p.eta < 0.5),
                ("delta", p.delta, p.delta > 0.0 && p.delta.is_finite()),
            ];
            for (name, value, ok) in checks {
                if !ok {
                    return Err(ContinuationError::BadValue { level: k, field: name, value });
                }
            }
        }
        let dirs = stage_directions(stage);
        for k in 1..levels.len() {
            let prev = fields_of(&levels[k - 1]);
            let next = fields_of(&levels[k]);
            for (j, (name, d)) in dirs.iter().enumerate() {
                let ok = match d {
                    Direction::Fixed => {
                        (next[j] - prev[j]).abs() <= 1e-15 * prev[j].abs().max(1.0)
                    }
                    Direction::StrictDown => next[j] < prev[j],
                    Direction::StrictUp => next[j] > prev[j],
                };
                if !ok {
                    return Err(ContinuationError::NotMonotone {
                        level: k,
                        field: name,
                        direction: match d {
                            Direction::Fixed => "stay fixed",
                            Direction::StrictDown => "strictly decrease",
                            Direction::StrictUp => "strictly increase",
                        },
                        prev: prev[j],
                        next: next[j],
                    });
                }
            }
        }
        // Entropy ladder: shrinking eps lifts psi_{eps,ell} pointwise toward
        // psi_{0,ell} on [0, ell]. (Above ell the comparison genuinely fails,
        // so the check stops there.)
        if matches!(stage, ScheduleStage::DtEps | ScheduleStage::Joint) {
            for k in 1..levels.len() {
                let coarse = EntropyFunction::psi_eps_ell(levels[k - 1].eps, levels[k - 1].ell)
                    .map_err(SchemeError::from)?;
                let fine = EntropyFunction::psi_eps_ell(levels[k].eps, levels[k].ell)
                    .map_err(SchemeError::from)?;
                let hi = levels[k - 1].ell.min(levels[k].ell);
                for s in 0..=400 {
                    let a = hi * s as f64 / 400.0;
                    if coarse.eval(a) > fine.eval(a) + 1e-12 {
                        return Err(ContinuationError::OrderingViolated { level: k, at: a });
                    }
                }
            }
        }
        Ok(LimitSchedule { stage, levels })
    }

    pub fn stage(&self) -> ScheduleStage {
        self.stage
    }

    pub fn levels(&self) -> &[LevelParams] {
        &self.levels
    }
}

/// Everything a schedule run shares across levels.
#[derive(Debug, Clone)]
pub struct ScheduleContext {
    pub matrix: CouplingMatrix,
    pub certificate: PositivityCertificate,
    pub profile: MollifierProfile,
    pub picard: PicardParams,
    pub linear: LinearParams,
    pub enforce_invariants: bool,
}

impl ScheduleContext {
    pub fn new(matrix: CouplingMatrix, certificate: PositivityCertificate) -> Self {
        ScheduleContext {
            matrix,
            certificate,
            profile: MollifierProfile::CosineBump,
            picard: PicardParams::default(),
            linear: LinearParams::default(),
            enforce_invariants: true,
        }
    }
}

/// Outcome of one level: its parameters and the run-wide summaries.
#[derive(Debug, Clone)]
pub struct LevelSummary {
    pub params: LevelParams,
    pub steps: usize,
    pub initial_entropy_weighted: f64,
    pub final_entropy_weighted: f64,
    /// W(T) + delta0 dt sum_n diss_moll(n) - W(0): nonpositive up to the
    /// Picard defect for an entropy-stable run.
    pub budget_defect: f64,
    /// Smallest cell value seen anywhere in the run (initial state included).
    pub min_during_run: f64,
    /// max(0, -min) / sqrt(eps).
    pub negativity_constant: f64,
}

/// The full schedule outcome.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub stage: ScheduleStage,
    pub horizon: f64,
    /// dt of the coarsest level; the sampling grid spacing of the distances.
    pub coarse_dt: f64,
    pub levels: Vec<LevelSummary>,
    /// L^2(0,T; L^2) distances between consecutive levels' trajectories.
    pub distances: Vec<f64>,
    pub budget_tolerance: f64,
}

impl ConvergenceReport {
    /// Strictly decreasing consecutive distances: the discrete Cauchy signal.
    pub fn is_cauchy(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }

    pub fn budget_ok(&self) -> bool {
        self.levels.iter().all(|l| l.budget_defect <= self.budget_tolerance)
    }
}

/// Defect of the cumulative entropy budget for a completed run:
/// W(T) + delta0 * dt * sum diss_moll - W(0). Negative means entropy was
/// dissipated faster than the certificate demands.
pub fn entropy_budget_defect(
    initial: &InitialDiagnostics,
    records: &[StepDiagnostics],
    delta0: f64,
    dt: f64,
) -> Option<f64> {
    let w0 = initial.entropy_weighted?;
    let w_final = match records.last() {
        Some(rec) => rec.entropy_weighted?,
        None => w0,
    };
    let diss: f64 = records.iter().map(|r| r.diss_moll).sum();
    Some(w_final + delta0 * dt * diss - w0)
}

/// Runs every level of the schedule from `initial` over `[0, horizon]` and
/// assembles the convergence report. All levels share the grid and the
/// initial state; the mollifier kernel is rebuilt per level for its eta.
pub fn run_schedule(
    ctx: &ScheduleContext,
    schedule: &LimitSchedule,
    grid: GridSpec,
    initial: &SpeciesState,
    horizon: f64,
) -> Result<ConvergenceReport, ContinuationError> {
    let delta0 = ctx.certificate.delta0().ok_or(ContinuationError::NoCertificate)?;
    let m = ctx.matrix.m();

    // Step counts and sampling strides against the coarsest level.
    let mut steps = Vec::with_capacity(schedule.levels.len());
    for (k, p) in schedule.levels.iter().enumerate() {
        let raw = horizon / p.dt;
        let rounded = raw.round();
        if rounded < 1.0 || (raw - rounded).abs() > 1e-9 * raw.max(1.0) {
            return Err(ContinuationError::HorizonMismatch {
                level: k,
                horizon,
                dt: p.dt,
            });
        }
        steps.push(rounded as usize);
    }
    let coarse_steps = steps[0];
    for (k, &s) in steps.iter().enumerate() {
        if s % coarse_steps != 0 {
            return Err(ContinuationError::SamplingMismatch {
                level: k,
                steps: s,
                coarse: coarse_steps,
            });
        }
    }

    let mut summaries = Vec::with_capacity(schedule.levels.len());
    let mut sampled: Vec<Vec<SpeciesState>> = Vec::with_capacity(schedule.levels.len());

    for (k, p) in schedule.levels.iter().enumerate() {
        let reg = RegularizationParams::uniform(m, p.eps, p.ell, p.delta)?;
        let mut cfg = SchemeConfig::new(
            ctx.matrix.clone(),
            ctx.certificate.clone(),
            reg,
            p.eta,
            p.dt,
            steps[k],
        );
        cfg.profile = ctx.profile;
        cfg.picard = ctx.picard.clone();
        cfg.linear = ctx.linear.clone();
        cfg.enforce_invariants = ctx.enforce_invariants;
        let solver = Solver::new(cfg, grid)?;

        let stride = steps[k] / coarse_steps;
        let mut samples = Vec::with_capacity(coarse_steps);
        let mut min_seen = initial.min_value();
        let result = solver.run(initial.clone(), |rec, state| {
            min_seen = min_seen.min(rec.min_value);
            if rec.step % stride == 0 {
                samples.push(state.clone());
            }
        })?;

        let defect = entropy_budget_defect(&result.initial, &result.records, delta0, p.dt)
            .expect("certificate provides weights");
        summaries.push(LevelSummary {
            params: *p,
            steps: steps[k],
            initial_entropy_weighted: result.initial.entropy_weighted.expect("certificate"),
            final_entropy_weighted: result
                .records
                .last()
                .map_or(result.initial.entropy_weighted.unwrap(), |r| {
                    r.entropy_weighted.unwrap()
                }),
            budget_defect: defect,
            min_during_run: min_seen,
            negativity_constant: (-min_seen).max(0.0) / p.eps.sqrt(),
        });
        sampled.push(samples);
    }

    let coarse_dt = schedule.levels[0].dt;
    let mut distances = Vec::with_capacity(schedule.levels.len() - 1);
    for pair in sampled.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        debug_assert_eq!(a.len(), b.len());
        let mut acc = 0.0;
        for (sa, sb) in a.iter().zip(b) {
            let mut sq = 0.0;
            let vol = grid.cell_volume();
            for i in 0..m {
                for (x, y) in sa.field(i).values().iter().zip(sb.field(i).values()) {
                    sq += (x - y) * (x - y) * vol;
                }
            }
            acc += coarse_dt * sq;
        }
        distances.push(acc.sqrt());
    }

    Ok(ConvergenceReport {
        stage: schedule.stage,
        horizon,
        coarse_dt,
        levels: summaries,
        distances,
        budget_tolerance: 1e-6,
    })
}
