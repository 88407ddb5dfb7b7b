//! Limit schedules: driving the regularization parameters toward the
//! degenerate problem and watching the trajectories become Cauchy.
//!
//! The approximation ladder has four knobs — dt, the lower truncation eps,
//! the upper truncation ell, the mollifier width eta, and the viscosity
//! delta — which must be released in the right order and direction. A
//! schedule stage fixes which knobs move (dt_eps: dt and eps down; ell_eta:
//! ell up, eta down; delta: delta down; joint: all together), and the
//! solver is run once per level. Successive trajectories are compared in
//! the L^2(0,T; L^2) norm on the coarsest time grid: strictly decreasing
//! distances are the discrete Cauchy signal that a limit exists, and the
//! entropy budget must stay honored on every level along the way.
//!
//! Run with: cargo run --example limit_schedule

use crossdiff::config::preset;
use crossdiff::continuation::{
    run_schedule, LevelParams, LimitSchedule, ScheduleContext, ScheduleStage,
};

fn main() {
    let mut cfg = preset("seawater").expect("built-in preset");
    cfg.grid.n = 20;
    let built = cfg.build().expect("valid configuration");
    let ctx = ScheduleContext {
        matrix: built.scheme.matrix.clone(),
        certificate: built.scheme.certificate.clone(),
        profile: built.scheme.profile,
        picard: built.scheme.picard,
        linear: built.scheme.linear,
        enforce_invariants: true,
    };
    let base = LevelParams { dt: 2e-3, eps: 1e-2, ell: 8.0, eta: 0.12, delta: 1e-2 };
    let horizon = 0.02;

    for stage in [ScheduleStage::DtEps, ScheduleStage::Delta] {
        let schedule =
            LimitSchedule::generated(stage, base, 3, 0.5).expect("monotone generated levels");
        let report = run_schedule(&ctx, &schedule, built.grid, &built.initial, horizon)
            .expect("every level runs");

        println!("stage {:?}, horizon t = {}", report.stage, report.horizon);
        for (k, level) in report.levels.iter().enumerate() {
            println!(
                "  level {k}: dt = {:.2e}, eps = {:.2e}, delta = {:.2e}, \
                 {} steps, budget defect {:+.2e}",
                level.params.dt,
                level.params.eps,
                level.params.delta,
                level.steps,
                level.budget_defect
            );
        }
        for (k, d) in report.distances.iter().enumerate() {
            println!("  ||u_{} - u_{}||_(L2 in t,x) = {d:.6e}", k + 1, k);
        }
        assert!(report.is_cauchy(), "distances must decrease strictly");
        assert!(report.budget_ok(), "entropy budget must hold on every level");
        println!("  cauchy: yes, budget: honored\n");
    }

    // The solver itself refuses a schedule moving a knob the wrong way.
    let err = LimitSchedule::generated(ScheduleStage::Delta, base, 3, 2.0);
    println!("factor 2.0 rejected as expected: {}", err.unwrap_err());
}
