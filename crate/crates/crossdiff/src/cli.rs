//! Command-line front end: run a configured simulation, inspect a coupling
//! matrix's positivity certificate, drive a limit schedule, or print the
//! built-in presets.
//!
//! Exit codes: 0 success, 2 configuration problem, 3 a step or linear solve
//! failed, 4 the fixed-point iteration did not converge.

use crate::coefficients::{DirectPositivity, PositivityCertificate};
use crate::config::{preset, preset_names, CertificateSection, InitialSection, RunConfig};
use crate::continuation::{run_schedule, ContinuationError, ScheduleContext};
use crate::output::{run_csv, write_snapshot};
use crate::scheme::{SchemeError, Solver};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_STEP: u8 = 3;
pub const EXIT_FIXED_POINT: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "crossdiff",
    about = "Entropy-stable solver for degenerate cross-diffusion systems on the torus",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write a diagnostics CSV.
    Run(RunArgs),
    /// Build and verify the positivity certificate of the configured matrix.
    ValidateMatrix(ValidateArgs),
    /// Run the configured limit schedule and report Cauchy distances.
    Continuation(ContinuationArgs),
    /// List built-in presets, or print one as a config file.
    Presets(PresetsArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Path to a TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Where to write the diagnostics CSV. Falls back to the config's
    /// output.diagnostics_path; stdout when both are absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for state snapshots. Falls back to the config's
    /// output.snapshot_dir, then to <out stem>_snapshots.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Override the master seed (recorded as the config's top-level seed,
    /// so the echoed config reproduces the run).
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the progress summary on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Path to a TOML run configuration (only [matrix] and [certificate]
    /// are consulted).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct ContinuationArgs {
    /// Path to a TOML run configuration containing a [schedule] section.
    #[arg(long)]
    config: PathBuf,
    /// Write the per-level convergence report as CSV to this file (stdout
    /// keeps the human-readable report).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the report on stdout (useful with --out).
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct PresetsArgs {
    /// Print this preset as a ready-to-edit configuration file.
    name: Option<String>,
}

/// Parses `args` (including the program name) and runs the command,
/// printing to the given writers. Returns the process exit code.
pub fn run_cli(
    args: impl IntoIterator<Item = String>,
    stdout: &mut dyn std::io::Write,
    stderr: &mut dyn std::io::Write,
) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Clap renders its own help/usage text; --help and --version
            // exit successfully.
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a, stdout, stderr),
        Command::ValidateMatrix(a) => cmd_validate(a, stdout),
        Command::Continuation(a) => cmd_continuation(a, stdout),
        Command::Presets(a) => cmd_presets(a, stdout),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn config_err(message: impl ToString) -> Failure {
    Failure { code: EXIT_CONFIG, message: message.to_string() }
}

fn scheme_exit_code(e: &SchemeError) -> u8 {
    match e {
        SchemeError::FixedPointFailure { .. } => EXIT_FIXED_POINT,
        SchemeError::StepFailure { .. } | SchemeError::LinearSolve { .. } => EXIT_STEP,
        _ => EXIT_CONFIG,
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(config_err)
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure { code: EXIT_STEP, message: format!("i/o: {e}") }
}

fn cmd_run(
    args: RunArgs,
    stdout: &mut dyn std::io::Write,
    stderr: &mut dyn std::io::Write,
) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        // Stored in the config itself, so the copy echoed into the CSV
        // header is the effective one.
        cfg.seed = Some(seed);
        if !matches!(cfg.initial, InitialSection::RandomPositive { .. }) && !args.quiet {
            let _ = writeln!(
                stderr,
                "note: --seed recorded, but the initial condition is deterministic"
            );
        }
    }
    let built = cfg.build().map_err(config_err)?;
    let solver = Solver::new(built.scheme.clone(), built.grid)
        .map_err(|e| Failure { code: scheme_exit_code(&e), message: e.to_string() })?;

    let out_path = args
        .out
        .clone()
        .or_else(|| cfg.output.diagnostics_path.as_ref().map(PathBuf::from));
    let snapshot_dir = args
        .snapshots
        .clone()
        .or_else(|| cfg.output.snapshot_dir.as_ref().map(PathBuf::from))
        .or_else(|| {
            out_path.as_ref().map(|out| {
                let stem = out.file_stem().unwrap_or_default().to_string_lossy();
                out.with_file_name(format!("{stem}_snapshots"))
            })
        });
    let wants_snapshots = built.snapshot_every > 0 || built.snapshot_final;
    if wants_snapshots && snapshot_dir.is_none() && !args.quiet {
        let _ = writeln!(
            stderr,
            "note: snapshots requested but no destination given \
             (--snapshots, --out, or [output] paths); skipping them"
        );
    }

    let every = built.snapshot_every;
    let dir = snapshot_dir.as_deref();
    let mut snapshot_failure: Option<Failure> = None;
    let result = solver
        .run(built.initial.clone(), |diag, state| {
            if snapshot_failure.is_some() {
                return;
            }
            if let Some(dir) = dir {
                if every > 0 && diag.step % every == 0 {
                    if let Err(e) = write_snapshot(dir, diag.step, state) {
                        snapshot_failure =
                            Some(Failure { code: EXIT_STEP, message: e.to_string() });
                    }
                }
            }
        })
        .map_err(|e| Failure { code: scheme_exit_code(&e), message: e.to_string() })?;
    if let Some(f) = snapshot_failure {
        return Err(f);
    }
    if built.snapshot_final {
        if let Some(dir) = dir {
            write_snapshot(dir, built.scheme.steps, &result.final_state)
                .map_err(|e| Failure { code: EXIT_STEP, message: e.to_string() })?;
        }
    }

    let csv = run_csv(Some(&cfg), 0.0, &result);
    match &out_path {
        Some(path) => fs::write(path, csv).map_err(io_failure)?,
        None => stdout.write_all(csv.as_bytes()).map_err(io_failure)?,
    }

    if !args.quiet {
        let last = result.records.last();
        let _ = writeln!(
            stderr,
            "ran {} steps to t = {}; mass {:?}; entropy {} -> {}; min value {}",
            result.records.len(),
            last.map_or(0.0, |r| r.time),
            result.final_state.masses(),
            result.initial.entropy,
            last.map_or(result.initial.entropy, |r| r.entropy),
            result.final_state.min_value(),
        );
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs, stdout: &mut dyn std::io::Write) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let matrix = cfg.build_matrix().map_err(config_err)?;
    let m = matrix.m();
    let w = |line: String, out: &mut dyn std::io::Write| {
        let _ = writeln!(out, "{line}");
    };
    w(format!("matrix: {m} x {m}"), stdout);
    for i in 0..m {
        let row: Vec<String> =
            (0..m).map(|j| format!("{:>12.6}", matrix.entry(i, j))).collect();
        w(format!("  [{}]", row.join(" ")), stdout);
    }
    w(format!("symmetric: {}", matrix.is_symmetric()), stdout);
    w(format!("spectral norm: {:.6}", matrix.spectral_norm()), stdout);
    w(format!("inf norm: {:.6}", matrix.inf_norm()), stdout);
    match matrix.delta0_direct() {
        DirectPositivity::Holds { delta0 } => {
            w(format!("direct test: sym(A) definite, delta0 = {delta0:.6}"), stdout);
        }
        DirectPositivity::Fails { lambda_min } => {
            w(
                format!("direct test: sym(A) indefinite, lambda_min = {lambda_min:.6}"),
                stdout,
            );
        }
    }

    let certificate = cfg.build_certificate(&matrix).map_err(config_err)?;
    match &certificate {
        PositivityCertificate::Direct { delta0 } => {
            w(format!("certificate: direct, delta0 = {delta0:.6}"), stdout);
        }
        PositivityCertificate::Scaled { delta0, left, right } => {
            w(format!("certificate: scaled, delta0 = {delta0:.6}"), stdout);
            w(format!("  left  = {left:?}"), stdout);
            w(format!("  right = {right:?}"), stdout);
        }
        PositivityCertificate::None { best_lambda } => {
            if matches!(cfg.certificate, CertificateSection::None) {
                w("certificate: none requested; entropy balance not enforced".into(), stdout);
            } else {
                w(
                    format!(
                        "no certificate found (best scaled lambda_min = {best_lambda:.6}); \
                         entropy balance not enforced"
                    ),
                    stdout,
                );
            }
        }
    }
    certificate
        .verify(&matrix)
        .map_err(|e| config_err(format!("certificate failed verification: {e}")))?;
    w("verification: ok".into(), stdout);
    Ok(())
}

fn continuation_exit_code(e: &ContinuationError) -> u8 {
    match e {
        ContinuationError::Scheme(s) => scheme_exit_code(s),
        _ => EXIT_CONFIG,
    }
}

fn cmd_continuation(args: ContinuationArgs, stdout: &mut dyn std::io::Write) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let built = cfg.build().map_err(config_err)?;
    let Some((schedule, horizon)) = built.schedule else {
        return Err(config_err("the configuration has no [schedule] section"));
    };
    let ctx = ScheduleContext {
        matrix: built.scheme.matrix.clone(),
        certificate: built.scheme.certificate.clone(),
        profile: built.scheme.profile,
        picard: built.scheme.picard,
        linear: built.scheme.linear,
        enforce_invariants: built.scheme.enforce_invariants,
    };
    let report = run_schedule(&ctx, &schedule, built.grid, &built.initial, horizon)
        .map_err(|e| Failure { code: continuation_exit_code(&e), message: e.to_string() })?;

    let mut text = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(text, "stage: {:?}, horizon t = {}", report.stage, report.horizon);
    for (k, l) in report.levels.iter().enumerate() {
        let p = &l.params;
        let _ = writeln!(
            text,
            "level {k}: dt = {:.3e}, eps = {:.3e}, ell = {:.3e}, eta = {:.3e}, delta = {:.3e} \
             ({} steps)",
            p.dt, p.eps, p.ell, p.eta, p.delta, l.steps
        );
        let _ = writeln!(
            text,
            "  weighted entropy {:.9} -> {:.9}, budget defect {:.3e}, min value {:.3e}, \
             negativity constant {:.3e}",
            l.initial_entropy_weighted,
            l.final_entropy_weighted,
            l.budget_defect,
            l.min_during_run,
            l.negativity_constant
        );
    }
    for (k, d) in report.distances.iter().enumerate() {
        let _ = writeln!(text, "distance level {k} -> {}: {:.6e}", k + 1, d);
    }
    let _ = writeln!(
        text,
        "cauchy (strictly decreasing distances): {}",
        if report.is_cauchy() { "yes" } else { "no" }
    );
    let _ = writeln!(
        text,
        "entropy budget within {:.1e} on every level: {}",
        report.budget_tolerance,
        if report.budget_ok() { "yes" } else { "no" }
    );

    if !args.quiet {
        stdout.write_all(text.as_bytes()).map_err(io_failure)?;
    }
    if let Some(path) = &args.out {
        // Machine-readable companion to the stdout report: one row per
        // level, the trailing distance cell empty on the last row (and on
        // every row of a single-level schedule).
        let mut csv = String::from(
            "level,dt,eps,ell,eta,delta,steps,entropy_weighted_initial,\
             entropy_weighted_final,budget_defect,min_during_run,\
             negativity_constant,distance_to_next\n",
        );
        for (k, l) in report.levels.iter().enumerate() {
            let p = &l.params;
            let dist = report.distances.get(k).map(f64::to_string).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{k},{},{},{},{},{},{},{},{},{},{},{},{dist}",
                p.dt,
                p.eps,
                p.ell,
                p.eta,
                p.delta,
                l.steps,
                l.initial_entropy_weighted,
                l.final_entropy_weighted,
                l.budget_defect,
                l.min_during_run,
                l.negativity_constant
            );
        }
        fs::write(path, csv).map_err(io_failure)?;
    }
    Ok(())
}

fn cmd_presets(args: PresetsArgs, stdout: &mut dyn std::io::Write) -> Result<(), Failure> {
    match args.name {
        None => {
            for name in preset_names() {
                let _ = writeln!(stdout, "{name}");
            }
            Ok(())
        }
        Some(name) => match preset(&name) {
            Some(cfg) => {
                let _ = write!(stdout, "{}", cfg.to_toml());
                Ok(())
            }
            None => Err(config_err(format!(
                "unknown preset {name:?}; available: {}",
                preset_names().join(", ")
            ))),
        },
    }
}
