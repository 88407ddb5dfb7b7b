//! The provable L^2 stability window and its sharp bookkeeping.
//!
//! Below the threshold tau = min_i(delta_i eps_i) / (G^2 Lmax^2 ||A||^2)
//! (G the l^1 norm of the mollifier gradient, Lmax the largest upper
//! truncation) every step satisfies
//!
//!     (1 - dt/tau) ||u^{n+1}||^2 + dt sum_i delta_i eps_i ||grad u_i||^2
//!         <= ||u^n||^2,
//!
//! with no smallness assumption on the data. The solver records both sides
//! of this inequality every step (est0_lhs, est0_rhs) and, in strict mode,
//! refuses time steps beyond tau outright. Beyond tau the scheme still
//! runs — the entropy balance needs no step restriction — but this
//! particular quadratic ledger is no longer guaranteed.
//!
//! Run with: cargo run --example l2_stability

use crossdiff::config::preset;
use crossdiff::scheme::Solver;

fn main() {
    let mut cfg = preset("seawater").expect("built-in preset");
    cfg.time.horizon = None;

    // Probe tau with the preset's regularization on the preset grid.
    let probe = cfg.build().expect("valid configuration");
    let tau = Solver::new(probe.scheme, probe.grid)
        .expect("solver construction")
        .max_stable_dt();
    println!("stability threshold tau = {tau:.6e}");

    cfg.time.dt = 0.5 * tau;
    cfg.time.steps = 200;
    cfg.invariants.strict_stability = true; // enforce est0 every step
    let built = cfg.build().expect("valid configuration");
    let solver = Solver::new(built.scheme, built.grid).expect("dt below tau is accepted");

    println!("running 200 steps at dt = tau/2 with strict enforcement on\n");
    println!("{:>6} {:>16} {:>16} {:>12}", "step", "est0 lhs", "est0 rhs", "margin");
    let mut worst_margin = f64::INFINITY;
    solver
        .run(built.initial, |diag, _| {
            let margin = diag.est0_rhs - diag.est0_lhs;
            worst_margin = worst_margin.min(margin);
            if diag.step % 40 == 0 {
                println!(
                    "{:>6} {:>16.12} {:>16.12} {:>12.3e}",
                    diag.step, diag.est0_lhs, diag.est0_rhs, margin
                );
            }
        })
        .expect("strict run completes: the bound held on every step");

    println!("\nsmallest margin rhs - lhs over the run: {worst_margin:.3e}");
    assert!(worst_margin > -1e-10, "the quadratic ledger must balance");

    // Strict mode must refuse a time step beyond the window.
    let mut too_big = preset("seawater").unwrap();
    too_big.time.horizon = None;
    too_big.time.dt = 2.0 * tau;
    too_big.invariants.strict_stability = true;
    let built = too_big.build().expect("valid configuration");
    match Solver::new(built.scheme, built.grid) {
        Err(e) => println!("dt = 2 tau rejected as expected: {e}"),
        Ok(_) => panic!("strict mode accepted dt beyond tau"),
    }
}
