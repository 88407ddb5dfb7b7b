//! Acceptance gate: every structural guarantee of the solver, checked end
//! to end at its stated tolerance. One test per criterion; each prints a
//! single PASS line with the measured margin so a log scan shows the whole
//! ledger at a glance.

use crossdiff::coefficients::{
    delta0_scaled_search, CouplingMatrix, PositivityCertificate,
};
use crossdiff::config::{
    preset, GridSection, InitialSection, MatrixSection, MollifierSection, PerSpecies,
    ProfileName, RegularizationSection, RunConfig, TimeSection,
};
use crossdiff::continuation::{
    entropy_budget_defect, run_schedule, ConvergenceReport, LevelParams, LimitSchedule,
    ScheduleContext, ScheduleStage,
};
use crossdiff::entropy::SpeciesState;
use crossdiff::grid::{restrict, GridSpec, ScalarField};
use crossdiff::output::run_csv;
use crossdiff::rng::SplitMix64;
use crossdiff::scheme::{RegularizationParams, RunResult, SchemeConfig, Solver};

fn pass(criterion: usize, name: &str, metric: String) {
    println!("ACCEPTANCE {criterion:02} ({name}): PASS — {metric}");
}

/// Builds and runs a configuration, returning the solver's records.
fn run_config(cfg: &RunConfig) -> RunResult {
    let built = cfg.build().expect("valid configuration");
    let solver = Solver::new(built.scheme, built.grid).expect("solver construction");
    solver.run(built.initial, |_, _| {}).expect("run completes")
}

#[test]
fn acceptance_01_mass_conservation_over_500_steps() {
    let mut worst = 0.0f64;
    for name in ["porous_medium", "seawater", "skew_example"] {
        let mut cfg = preset(name).unwrap();
        cfg.time.steps = 500;
        cfg.time.horizon = None;
        let result = run_config(&cfg);
        let initial = &result.initial.masses;
        for rec in &result.records {
            for (i, mass) in rec.masses.iter().enumerate() {
                worst = worst.max((mass - initial[i]).abs());
            }
        }
    }
    assert!(worst < 1e-12, "mass drifted by {worst:.3e}");
    pass(1, "mass conservation", format!("worst drift {worst:.3e} < 1e-12 over 3 x 500 steps"));
}

#[test]
fn acceptance_02_per_step_entropy_balance_across_seeds() {
    // Seawater coupling carries a direct certificate (weights 1), so the
    // enforced balance can be recomputed from the records alone:
    //   W_{n+1} + dt (diss_grad + delta0 diss_moll) - W_n <= 100 tol scale.
    let mut worst_ratio = f64::NEG_INFINITY;
    for seed in 0..5u64 {
        let mut cfg = preset("seawater").unwrap();
        cfg.grid.n = 32;
        cfg.time.steps = 100;
        cfg.time.horizon = None;
        cfg.initial = InitialSection::RandomPositive { seed, min: 0.3, max: 1.5 };
        let built = cfg.build().unwrap();
        let delta0 = built.scheme.certificate.delta0().unwrap();
        let (dt, tol) = (built.scheme.dt, built.scheme.picard.tol);
        let result = run_config(&cfg);

        let mut w_prev = result.initial.entropy_weighted.unwrap();
        for rec in &result.records {
            let w = rec.entropy_weighted.unwrap();
            let defect = w + dt * (rec.diss_grad + delta0 * rec.diss_moll) - w_prev;
            let allowed = 100.0 * tol * w_prev.abs().max(1.0) * (1.0 + dt);
            worst_ratio = worst_ratio.max(defect / allowed);
            w_prev = w;
        }
    }
    assert!(worst_ratio <= 1.0, "balance defect at {worst_ratio:.3} of the allowance");
    pass(
        2,
        "per-step entropy balance",
        format!(
            "tightest of 5 seeds x 100 steps sits {:.3e} allowances (100 tol) below the bound",
            -worst_ratio
        ),
    );
}

#[test]
fn acceptance_03_cumulative_entropy_budget() {
    let mut worst = f64::NEG_INFINITY;
    for (name, n, steps) in [("seawater", 48, 250), ("skew_example", 32, 150)] {
        let mut cfg = preset(name).unwrap();
        cfg.grid.n = n;
        cfg.time.steps = steps;
        cfg.time.horizon = None;
        let built = cfg.build().unwrap();
        let delta0 = built.scheme.certificate.delta0().unwrap();
        let dt = built.scheme.dt;
        let result = run_config(&cfg);
        let defect = entropy_budget_defect(&result.initial, &result.records, delta0, dt)
            .expect("certified runs record weighted entropy");
        worst = worst.max(defect);
    }
    assert!(worst <= 1e-6, "budget defect {worst:.3e}");
    pass(3, "entropy budget", format!("worst cumulative defect {worst:+.3e} <= 1e-6"));
}

#[test]
fn acceptance_04_l2_stability_below_tau() {
    let mut cfg = preset("seawater").unwrap();
    cfg.time.horizon = None;
    let probe = cfg.build().unwrap();
    let tau = Solver::new(probe.scheme, probe.grid).unwrap().max_stable_dt();

    cfg.time.dt = 0.5 * tau;
    cfg.time.steps = 200;
    cfg.invariants.strict_stability = true;
    let result = run_config(&cfg); // strict mode enforces est0 internally

    let mut worst_margin = f64::INFINITY;
    for rec in &result.records {
        worst_margin = worst_margin.min(
            (rec.est0_rhs - rec.est0_lhs) / rec.est0_rhs.max(1.0),
        );
    }
    assert!(worst_margin > -1e-10, "est0 violated by {worst_margin:.3e}");
    pass(
        4,
        "L2 stability below tau",
        format!("200 strict steps at dt = tau/2, smallest relative margin {worst_margin:.3e}"),
    );
}

#[test]
fn acceptance_05_energy_decay_for_symmetric_coupling() {
    let cfg = RunConfig {
        seed: None,
        mobility: None,
        grid: GridSection { dim: 1, n: 48 },
        matrix: MatrixSection::Explicit {
            entries: vec![vec![1.0, 0.3], vec![0.3, 1.0]],
        },
        certificate: Default::default(),
        regularization: RegularizationSection {
            eps: PerSpecies::Uniform(1e-3),
            ell: PerSpecies::Uniform(6.0),
            delta: PerSpecies::Uniform(1e-2),
        },
        time: TimeSection { dt: 2e-4, steps: 200, horizon: None },
        mollifier: MollifierSection { eta: 0.1, profile: ProfileName::CosineBump },
        picard: Default::default(),
        linear: Default::default(),
        invariants: Default::default(),
        initial: InitialSection::RandomPositive { seed: 42, min: 0.3, max: 1.5 },
        schedule: None,
        output: Default::default(),
    };
    let result = run_config(&cfg);
    let mut prev = result.initial.energy.expect("symmetric coupling records energy");
    let mut worst_rise = f64::NEG_INFINITY;
    for rec in &result.records {
        let e = rec.energy.unwrap();
        worst_rise = worst_rise.max(e - prev);
        prev = e;
    }
    assert!(worst_rise <= 1e-8, "energy rose by {worst_rise:.3e} in one step");
    pass(
        5,
        "energy decay",
        format!("largest single-step energy change {worst_rise:+.3e} <= 1e-8 over 200 steps"),
    );
}

#[test]
fn acceptance_06_positivity_certificates() {
    // Seawater at eps0 = 0.025: the closed-form direct constant.
    let built = preset("seawater").unwrap().build().unwrap();
    let d0 = built.scheme.certificate.delta0().unwrap();
    let nu = 0.975f64;
    let expected = (1.0 + nu - ((1.0 - nu).powi(2) + 4.0 * nu * nu).sqrt()) / 2.0;
    assert!((d0 - expected).abs() < 1e-12, "direct constant mismatches its closed form");
    assert!((d0 - 0.012420).abs() < 1e-5, "delta0 = {d0}");

    // Skew pair: indefinite symmetric part, scaled search reaches exactly 1.
    let skew = CouplingMatrix::new(2, vec![1.0, -3.0, 6.0, 1.0]).unwrap();
    let scaled = delta0_scaled_search(&skew).unwrap();
    let d0_scaled = scaled.delta0().expect("certifiable");
    assert!(d0_scaled >= 1.0 - 1e-6, "search found only {d0_scaled}");
    scaled.verify(&skew).expect("witness verifies");

    // Rotation: certifiably uncertifiable.
    let rotation = CouplingMatrix::new(2, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
    let none = delta0_scaled_search(&rotation).unwrap();
    assert!(none.delta0().is_none(), "a rotation must not be certified");

    pass(
        6,
        "certificates",
        format!(
            "seawater delta0 = {d0:.6} (+/-1e-5 of 0.012420), skew search = {d0_scaled:.9}, \
             rotation: none"
        ),
    );
}

#[test]
fn acceptance_07_scaling_equivalence() {
    // (A R, uniform window, v0) and (A, per-species windows, R v0) follow
    // the same trajectory after 50 implicit steps, within 10 solver
    // tolerances.
    let a = CouplingMatrix::new(2, vec![1.0, 0.3, 0.2, 1.0]).unwrap();
    let r = [2.0, 0.5];
    let ar = a.scale_columns(&r).unwrap();
    let grid = GridSpec::new(1, 24).unwrap();
    let reg = RegularizationParams::uniform(2, 1e-2, 4.0, 1e-2).unwrap();
    let (dt, steps, picard_tol) = (1e-3, 50, 1e-12);

    let identity = [1.0, 1.0];
    let cert_ar = PositivityCertificate::from_scaling(&ar, &identity, &identity).unwrap();
    let mut cfg_v = SchemeConfig::new(ar, cert_ar, reg.clone(), 0.15, dt, steps);
    cfg_v.picard.tol = picard_tol;
    let solver_v = Solver::new(cfg_v, grid).unwrap();

    let cert_a = PositivityCertificate::from_scaling(&a, &identity, &identity).unwrap();
    let mut cfg_u = SchemeConfig::new(a, cert_a, reg.scaled(&r).unwrap(), 0.15, dt, steps);
    cfg_u.picard.tol = picard_tol;
    let solver_u = Solver::new(cfg_u, grid).unwrap();

    let mut rng = SplitMix64::stream(7, "acceptance-state", 0);
    let v0_fields: Vec<ScalarField> = (0..2)
        .map(|_| {
            let vals = (0..grid.cells()).map(|_| rng.next_in(0.3, 1.5)).collect();
            ScalarField::from_values(grid, vals).unwrap()
        })
        .collect();
    let u0_fields: Vec<ScalarField> = v0_fields
        .iter()
        .zip(&r)
        .map(|(f, ri)| {
            let vals = f.values().iter().map(|v| v * ri).collect();
            ScalarField::from_values(grid, vals).unwrap()
        })
        .collect();
    let v0 = SpeciesState::new(v0_fields, 0.0).unwrap();
    let u0 = SpeciesState::new(u0_fields, 0.0).unwrap();

    let res_v = solver_v.run(v0, |_, _| {}).unwrap();
    let res_u = solver_u.run(u0, |_, _| {}).unwrap();
    let mut worst = 0.0f64;
    for i in 0..2 {
        for (v, u) in res_v
            .final_state
            .field(i)
            .values()
            .iter()
            .zip(res_u.final_state.field(i).values())
        {
            worst = worst.max((v * r[i] - u).abs() / u.abs().max(1.0));
        }
    }
    let allowed = 10.0 * picard_tol;
    assert!(worst < allowed, "trajectories disagree by {worst:.3e}");
    pass(
        7,
        "scaling equivalence",
        format!("worst relative gap {worst:.3e} < {allowed:.0e} after 50 steps, r = (2, 1/2)"),
    );
}

#[test]
fn acceptance_08_grid_self_convergence() {
    // Single species, delta = 1e-3, eps = 1e-4; each n compared at t = 0.01
    // with a 4x refined reference restricted back by exact cell averaging;
    // dt = T / (2n) on the coarse grid, T / (8n) on the reference.
    let horizon = 0.01;
    let run = |n: usize, steps: usize| -> SpeciesState {
        let cfg = RunConfig {
            seed: None,
            mobility: None,
            grid: GridSection { dim: 1, n },
            matrix: MatrixSection::Identity { m: 1 },
            certificate: Default::default(),
            regularization: RegularizationSection {
                eps: PerSpecies::Uniform(1e-4),
                ell: PerSpecies::Uniform(10.0),
                delta: PerSpecies::Uniform(1e-3),
            },
            time: TimeSection { dt: horizon / steps as f64, steps, horizon: Some(horizon) },
            mollifier: MollifierSection { eta: 0.1, profile: ProfileName::CosineBump },
            picard: Default::default(),
            linear: crossdiff::config::LinearSection {
                dense_threshold: 128,
                ..Default::default()
            },
            invariants: Default::default(),
            initial: InitialSection::GaussianBump {
                center: vec![0.5],
                width: 0.08,
                amplitude: vec![1.0],
                floor: vec![0.1],
            },
            schedule: None,
            output: Default::default(),
        };
        let built = cfg.build().unwrap();
        let solver = Solver::new(built.scheme, built.grid).unwrap();
        solver.run(built.initial, |_, _| {}).unwrap().final_state
    };

    let mut errors = Vec::new();
    for &n in &[32usize, 64, 128] {
        let coarse = run(n, 2 * n);
        let fine = run(4 * n, 8 * n);
        let reference = restrict(fine.field(0), 4).unwrap();
        let h = 1.0 / n as f64;
        let err = coarse
            .field(0)
            .values()
            .iter()
            .zip(reference.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            * h;
        errors.push(err.sqrt());
    }
    let orders: Vec<f64> =
        errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for (k, order) in orders.iter().enumerate() {
        assert!(
            *order > 0.8,
            "order {order:.3} on refinement {k} (errors {errors:?})"
        );
    }
    pass(
        8,
        "self-convergence",
        format!(
            "errors {:?} at n = 32/64/128, observed orders {:?} all > 0.8",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    );
}

/// Shared setup for the schedule-based criteria (9 and 10).
fn seawater_schedule_report(stage: ScheduleStage) -> ConvergenceReport {
    let mut cfg = preset("seawater").unwrap();
    cfg.grid.n = 20;
    let built = cfg.build().unwrap();
    let ctx = ScheduleContext {
        matrix: built.scheme.matrix.clone(),
        certificate: built.scheme.certificate.clone(),
        profile: built.scheme.profile,
        picard: built.scheme.picard,
        linear: built.scheme.linear,
        enforce_invariants: true,
    };
    let base = LevelParams { dt: 2e-3, eps: 1e-2, ell: 8.0, eta: 0.12, delta: 1e-2 };
    let schedule = LimitSchedule::generated(stage, base, 3, 0.5).unwrap();
    run_schedule(&ctx, &schedule, built.grid, &built.initial, 0.02).unwrap()
}

#[test]
fn acceptance_09_limit_schedules_are_cauchy() {
    let mut metrics = Vec::new();
    for stage in [ScheduleStage::DtEps, ScheduleStage::Delta] {
        let report = seawater_schedule_report(stage);
        assert!(
            report.is_cauchy(),
            "{stage:?} distances not strictly decreasing: {:?}",
            report.distances
        );
        assert!(report.budget_ok(), "{stage:?} entropy budget violated");
        metrics.push(format!(
            "{stage:?} {:?}",
            report.distances.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()
        ));
    }
    pass(9, "limit schedules Cauchy", metrics.join("; "));
}

#[test]
fn acceptance_10_negativity_constants_stable_in_eps() {
    // C_k = max(0, -min u) / sqrt(eps_k) must stay bounded while eps halves;
    // here the scheme keeps the iterates nonnegative outright, so each C_k
    // is zero and the stability is exact.
    let report = seawater_schedule_report(ScheduleStage::DtEps);
    let constants: Vec<f64> =
        report.levels.iter().map(|l| l.negativity_constant).collect();
    for w in constants.windows(2) {
        assert!(
            w[1] <= (2.0 * w[0]).max(1e-9),
            "negativity constant jumped across an eps halving: {constants:?}"
        );
    }
    for (level, c) in constants.iter().enumerate() {
        assert!(c.is_finite() && *c >= 0.0, "level {level}: bad constant {c}");
    }
    let mins: Vec<f64> = report.levels.iter().map(|l| l.min_during_run).collect();
    pass(
        10,
        "negativity constants",
        format!(
            "C_k = {constants:?} across eps halvings 1e-2 -> 2.5e-3 (run minima {:?})",
            mins.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn acceptance_11_bitwise_determinism() {
    // Dense path: the full CSV (config echo included) must repeat bitwise.
    let mut cfg = preset("seawater").unwrap();
    cfg.grid.n = 24;
    cfg.time.steps = 40;
    cfg.time.horizon = None;
    cfg.initial = InitialSection::RandomPositive { seed: 9, min: 0.3, max: 1.4 };
    let csv_a = run_csv(Some(&cfg), 0.0, &run_config(&cfg));
    let csv_b = run_csv(Some(&cfg), 0.0, &run_config(&cfg));
    assert_eq!(csv_a, csv_b, "dense-path reruns differ");

    // Matrix-free path: 2 x 20^2 unknowns forces GMRES; final states must
    // agree to the bit as well.
    let cfg2 = RunConfig {
        seed: None,
        mobility: None,
        grid: GridSection { dim: 2, n: 20 },
        matrix: MatrixSection::Seawater { eps0: 0.025 },
        certificate: Default::default(),
        regularization: RegularizationSection {
            eps: PerSpecies::Uniform(1e-3),
            ell: PerSpecies::Uniform(6.0),
            delta: PerSpecies::Uniform(1e-2),
        },
        time: TimeSection { dt: 5e-4, steps: 10, horizon: None },
        mollifier: MollifierSection { eta: 0.15, profile: ProfileName::CosineBump },
        picard: Default::default(),
        linear: Default::default(),
        invariants: Default::default(),
        initial: InitialSection::RandomPositive { seed: 4, min: 0.4, max: 1.2 },
        schedule: None,
        output: Default::default(),
    };
    let final_a = run_config(&cfg2).final_state;
    let final_b = run_config(&cfg2).final_state;
    assert_eq!(final_a, final_b, "GMRES-path reruns differ");

    pass(
        11,
        "determinism",
        format!(
            "dense CSV of {} bytes and 2-d GMRES final state both repeat bitwise",
            csv_a.len()
        ),
    );
}
