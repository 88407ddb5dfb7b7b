//! Grid self-convergence: refining h and dt together and measuring the
//! observed order against a fine-grid reference.
//!
//! Each run at n cells is compared with a reference computed at 4n cells
//! and restricted back by exact cell averaging (the adjoint of piecewise-
//! constant injection, so no interpolation error pollutes the measurement).
//! The time step scales linearly with h and both runs stop at the same
//! horizon. First-order accuracy in h is the expected regime for the
//! upwind-free two-point mobility flux with backward Euler stepping.
//!
//! Run with: cargo run --example self_convergence

use crossdiff::config::{preset, RunConfig};
use crossdiff::grid::restrict;
use crossdiff::scheme::Solver;

/// L^2 distance between a coarse run and the restriction of a 4x refined
/// reference at the shared final time.
fn refinement_error(cfg: &RunConfig, n: usize) -> f64 {
    let run = |n: usize, steps: usize| {
        let mut c = cfg.clone();
        c.grid.n = n;
        c.time.steps = steps;
        c.time.dt = 0.02 / steps as f64;
        let built = c.build().expect("valid configuration");
        let solver = Solver::new(built.scheme, built.grid).expect("solver construction");
        solver.run(built.initial, |_, _| {}).expect("run completes").final_state
    };
    // dt proportional to h: n cells take 2n steps, the reference 8n.
    let coarse = run(n, 2 * n);
    let fine = run(4 * n, 8 * n);
    let reference = restrict(fine.field(0), 4).expect("4n restricts onto n");
    let diff: Vec<f64> = coarse
        .field(0)
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| a - b)
        .collect();
    let h = 1.0 / n as f64;
    (diff.iter().map(|d| d * d).sum::<f64>() * h).sqrt()
}

fn main() {
    let mut cfg = preset("porous_medium").expect("built-in preset");
    cfg.time.horizon = None;
    println!("single species, horizon t = 0.02, dt = h / 100\n");
    println!("{:>6} {:>14} {:>10}", "n", "error vs 4n", "order");

    let grids = [16usize, 32, 64];
    let mut errors = Vec::new();
    for &n in &grids {
        let e = refinement_error(&cfg, n);
        let order = errors
            .last()
            .map(|prev: &f64| (prev / e).log2())
            .map_or_else(|| "-".to_string(), |o: f64| format!("{o:.3}"));
        println!("{n:>6} {e:>14.6e} {order:>10}");
        errors.push(e);
    }

    let order = (errors[errors.len() - 2] / errors[errors.len() - 1]).log2();
    println!("\nobserved order on the finest pair: {order:.3}");
    assert!(order > 0.8, "need at least first-order-ish convergence, got {order:.3}");
}
