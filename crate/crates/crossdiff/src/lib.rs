//! Entropy-stable finite-volume solver for degenerate cross-diffusion
//! systems on the periodic torus.
//!
//! The systems have the form
//!
//!   d/dt u^i = div( u^i sum_j A_ij grad u^j ),    i = 1..m,
//!
//! on T^N (N = 1 or 2), where A need not be symmetric and the mobility u^i
//! degenerates at 0. The solver realizes the regularized problem with
//! truncated mobility T_{eps,ell}, doubly mollified flux, and viscosity
//! delta, integrated by an implicit Euler step solved via Picard iteration.
//! Every a-priori estimate of the continuous construction is enforced at
//! runtime: per-step entropy balance, L^2 stability below the coercivity
//! time step, mass conservation, and positivity lower bounds.
//!
//! Modules:
//! - [`grid`]: periodic grids, SBP gradient/divergence pairs, mollifiers.
//! - [`coefficients`]: coupling matrices, positivity certificates, mobilities.
//! - [`entropy`]: entropy densities, truncation, edge mobilities.
//! - [`scheme`]: the implicit time stepper with enforced invariants.
//! - [`continuation`]: limit schedules and Cauchy convergence reports.
//! - [`linalg`]: dense LU and restarted GMRES, deterministic throughout.
//! - [`config`]: declarative TOML run configuration and presets.
//! - [`output`]: diagnostics CSV with embedded config, binary snapshots.
//! - [`cli`]: the `crossdiff` command-line front end.
//! - [`rng`]: deterministic splittable randomness for reproducible runs.

pub mod cli;
pub mod coefficients;
pub mod config;
pub mod continuation;
pub mod entropy;
pub mod grid;
pub mod linalg;
pub mod output;
pub mod rng;
pub mod scheme;
