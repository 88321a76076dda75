//! The subcommands. Each writes its results through an [`OutputDir`] and returns an error
//! (carrying the exit code) when a solve fails or a hard check is violated; files written
//! before the failure are kept.

use kg_core::basis::BasisKind;
use kg_core::diophantine::{admissible_eps_grid, FrequencyCheck};
use kg_core::field::Truncation;
use kg_core::ls_solver::{ProblemSpec, Radii, Residuals, Tolerances, Tunables};
use kg_core::mountain_pass::{find_critical_point_with, multiplicity_sweep, MountainPassReport, SubspaceCandidate};
use kg_core::verify::{
    check_basis_oracles, check_divisor_margins, check_evolution, check_exact_identities, check_resolvent_difference,
    check_strichartz, component_norms, evolve_and_compare, loglog_fit, regularity_sweep, Check, EvolutionSummary,
    ScalingFit, VerifyReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{OutputDir, SCHEMA_VERSION};

/// Samples per axis of the real-space export.
const REALSPACE_SAMPLES: usize = 64;
/// Tolerance on the one-period round trip of a computed solution.
const ROUND_TRIP_TOL: f64 = 1e-4;
/// Allowed deviation of a fitted amplitude exponent from its predicted value.
const SLOPE_TOL: f64 = 0.05;
/// Default ε window of the scaling suite when the configuration gives a single ε.
const SCALING_WINDOW: (f64, f64, usize) = (1e-4, 1e-2, 5);
/// `(r, s)` splits of the regularity suite.
const REGULARITY_GRID: [(f64, f64); 5] = [(0.0, 1.0), (0.5, 1.5), (1.0, 2.0), (2.0, 2.0), (0.0, 0.5)];

/// The problem as solved: parameters, certified frequency and ball radii.
#[derive(Debug, Serialize)]
struct SpecSnapshot {
    p: u32,
    basis: BasisKind,
    truncation: Truncation,
    eps: f64,
    omega: f64,
    sigma: f64,
    gamma: f64,
    r_ball: f64,
    radii: Radii,
    tolerances: Tolerances,
    tunables: Tunables,
    frequency_check: FrequencyCheck,
}

impl SpecSnapshot {
    fn of(spec: &ProblemSpec) -> Self {
        Self {
            p: spec.p,
            basis: spec.disc.kind(),
            truncation: spec.disc.truncation(),
            eps: spec.eps,
            omega: spec.omega,
            sigma: spec.sigma(),
            gamma: spec.gamma,
            r_ball: spec.r_ball,
            radii: spec.rho,
            tolerances: spec.tol,
            tunables: spec.tunables,
            frequency_check: spec.frequency_check,
        }
    }
}

/// Scalar outcome of one mountain-pass solve.
#[derive(Debug, Serialize)]
struct SolutionSummary {
    subspace_n: usize,
    m_g: f64,
    witness: f64,
    /// `‖v₁‖_{V¹}`.
    v1_norm: f64,
    /// `‖v₂‖_{V^{2+2δ}}`.
    v2_norm: f64,
    /// `‖w‖_{H^{1/2+δ}H^{3/2+δ}}`.
    w_norm: f64,
    /// `‖v₁‖_{V¹} / ε^{1/(q−2)}`.
    v1_norm_scaled: f64,
    residual: f64,
    equation_residuals: Residuals,
    grad_norm: f64,
    full_grad_norm: f64,
    alpha_r: f64,
    action_value: f64,
    expected_level: f64,
    minimal_divisor: u64,
    newton_iterations: usize,
    range_sweeps: usize,
}

impl SolutionSummary {
    fn of(r: &MountainPassReport, spec: &ProblemSpec) -> Self {
        let (v1_norm, v2_norm, w_norm) = component_norms(r, spec.tunables.delta);
        Self {
            subspace_n: r.subspace_n,
            m_g: r.m_g,
            witness: r.witness,
            v1_norm,
            v2_norm,
            w_norm,
            v1_norm_scaled: v1_norm / spec.eps.powf(spec.amplitude_exponent()),
            residual: r.residual,
            equation_residuals: r.state.residuals,
            grad_norm: r.grad_norm,
            full_grad_norm: r.full_grad_norm,
            alpha_r: r.alpha_r,
            action_value: r.action_value,
            expected_level: r.expected_level,
            minimal_divisor: r.minimal_divisor,
            newton_iterations: r.newton_iterations,
            range_sweeps: r.range_sweeps,
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    spec: SpecSnapshot,
    solution: SolutionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    evolution: Option<EvolutionSummary>,
}

/// Builds the problem at every ε before any computation, so that rejected frequencies
/// and unsupported exponents surface as configuration errors.
fn build_specs(cfg: &RunConfig, eps: &[f64]) -> Result<Vec<ProblemSpec>, CliError> {
    eps.iter()
        .map(|&e| ProblemSpec::new(cfg.problem_params(e)).map_err(CliError::from))
        .collect()
}

fn single_spec(cfg: &RunConfig, command: &str) -> Result<ProblemSpec, CliError> {
    let eps = cfg.eps_values()?;
    if eps.len() != 1 {
        return Err(CliError::Config(format!(
            "{command} takes a single ε, got {} (use `sweep` for several)",
            eps.len()
        )));
    }
    Ok(build_specs(cfg, &eps)?.remove(0))
}

fn solve_one(cfg: &RunConfig, spec: &ProblemSpec, n: usize, seed: u64) -> Result<MountainPassReport, CliError> {
    Ok(find_critical_point_with(spec, n, cfg.solver.restarts, seed)?)
}

/// Writes `v1.csv`, `v2.csv`, `w.csv` and `u_realspace.csv` under `prefix`.
fn write_solution_csv(
    out: &mut OutputDir,
    cfg: &RunConfig,
    prefix: &str,
    r: &MountainPassReport,
) -> Result<(), CliError> {
    if !cfg.writes_csv() {
        return Ok(());
    }
    for (name, field) in [("v1", &r.state.v1), ("v2", &r.state.v2), ("w", &r.state.w)] {
        out.write_with(&format!("{prefix}{name}.csv"), |buf| field.write_csv(buf))?;
    }
    let u = r.state.total();
    out.write_with(&format!("{prefix}u_realspace.csv"), |buf| {
        u.write_realspace_csv(buf, REALSPACE_SAMPLES, REALSPACE_SAMPLES)
    })
}

fn require_residual(cfg: &RunConfig, r: &MountainPassReport) -> Result<(), CliError> {
    if r.residual <= cfg.solver.residual_tol {
        Ok(())
    } else {
        Err(CliError::ResidualAboveTolerance {
            residual: r.residual,
            tol: cfg.solver.residual_tol,
        })
    }
}

/// `solve`: one mountain-pass critical point at the configured ε.
pub fn cmd_solve(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let spec = single_spec(cfg, "solve")?;
    let r = solve_one(cfg, &spec, cfg.solver.subspace_n, cfg.verify.seed)?;
    write_solution_csv(out, cfg, "", &r)?;
    let report = SolveReport {
        schema_version: SCHEMA_VERSION,
        command: "solve",
        config: cfg,
        spec: SpecSnapshot::of(&spec),
        solution: SolutionSummary::of(&r, &spec),
        evolution: None,
    };
    out.write_json("report.json", &report)?;
    println!(
        "solve: p = {}, ε = {:e}, ω = {:.12}: ‖v1‖ = {:.6e}, residual {:.2e}, minimal period 2π/{}",
        spec.p,
        spec.eps,
        spec.omega,
        r.v1_norm(),
        r.residual,
        r.minimal_divisor
    );
    require_residual(cfg, &r)
}

/// `evolve`: solve, then integrate the solution over the configured number of periods.
pub fn cmd_evolve(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let spec = single_spec(cfg, "evolve")?;
    let r = solve_one(cfg, &spec, cfg.solver.subspace_n, cfg.verify.seed)?;
    write_solution_csv(out, cfg, "", &r)?;
    let ev = evolve_and_compare(
        &r.state.total(),
        spec.p,
        spec.omega,
        cfg.verify.steps_per_period,
        cfg.verify.periods,
        true,
    )?;
    let report = SolveReport {
        schema_version: SCHEMA_VERSION,
        command: "evolve",
        config: cfg,
        spec: SpecSnapshot::of(&spec),
        solution: SolutionSummary::of(&r, &spec),
        evolution: Some(ev),
    };
    out.write_json("report.json", &report)?;
    println!(
        "evolve: one-period mismatch {:.3e}, energy drift {:.3e} over {} period(s) at {} steps/period",
        ev.mismatch, ev.energy_drift, ev.periods, ev.steps_per_period
    );
    require_residual(cfg, &r)?;
    if ev.mismatch <= ROUND_TRIP_TOL {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(format!(
            "round-trip mismatch {:e} exceeds {ROUND_TRIP_TOL:e}",
            ev.mismatch
        )))
    }
}

/// One ε of a sweep: the solution summary or the error that stopped it.
#[derive(Serialize)]
struct SweepPoint {
    eps: f64,
    omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<SolutionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    points: Vec<SweepPoint>,
    fit: Option<ScalingFit>,
    slope_check: Option<Check>,
}

/// Solves at every ε in parallel (task `k` uses seed `seed + k`) and fits the amplitude
/// exponent.
fn run_sweep(
    cfg: &RunConfig,
    specs: &[ProblemSpec],
) -> (
    Vec<Result<MountainPassReport, CliError>>,
    Option<ScalingFit>,
    Option<Check>,
) {
    let runs: Vec<Result<MountainPassReport, CliError>> = specs
        .par_iter()
        .enumerate()
        .map(|(k, spec)| solve_one(cfg, spec, cfg.solver.subspace_n, cfg.verify.seed.wrapping_add(k as u64)))
        .collect();
    let points: Vec<(f64, f64)> = specs
        .iter()
        .zip(&runs)
        .filter_map(|(s, r)| r.as_ref().ok().map(|r| (s.eps, r.v1_norm())))
        .collect();
    let expected = specs.first().map_or(0.0, ProblemSpec::amplitude_exponent);
    let fit = loglog_fit(&points, expected).ok();
    let check = fit.as_ref().map(|f| {
        let margin = SLOPE_TOL - (f.slope - expected).abs();
        Check {
            name: "amplitude_slope".into(),
            hard: true,
            cases: 1,
            violations: usize::from(margin.is_nan() || margin < 0.0),
            worst_margin: margin,
        }
    });
    (runs, fit, check)
}

/// `sweep`: solves over the ε grid and reports the log–log amplitude slope.
pub fn cmd_sweep(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let eps = cfg.eps_values()?;
    if eps.len() < 2 {
        return Err(CliError::Config("sweep needs at least two ε values".into()));
    }
    let specs = build_specs(cfg, &eps)?;
    let (runs, fit, check) = run_sweep(cfg, &specs);
    let mut first_error = None;
    let mut points = Vec::new();
    let mut table = String::from("eps,omega,v1_norm,v2_norm,w_norm,residual,minimal_divisor\n");
    for (spec, run) in specs.iter().zip(runs) {
        match run {
            Ok(r) => {
                let s = SolutionSummary::of(&r, spec);
                table.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    spec.eps, spec.omega, s.v1_norm, s.v2_norm, s.w_norm, s.residual, s.minimal_divisor
                ));
                if first_error.is_none() && r.residual > cfg.solver.residual_tol {
                    first_error = Some(CliError::ResidualAboveTolerance {
                        residual: r.residual,
                        tol: cfg.solver.residual_tol,
                    });
                }
                points.push(SweepPoint {
                    eps: spec.eps,
                    omega: spec.omega,
                    solution: Some(s),
                    error: None,
                });
            }
            Err(e) => {
                points.push(SweepPoint {
                    eps: spec.eps,
                    omega: spec.omega,
                    solution: None,
                    error: Some(e.to_string()),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if cfg.writes_csv() {
        out.write_bytes("scaling.csv", table.as_bytes())?;
    }
    if let Some(f) = &fit {
        println!(
            "sweep: {} ε values, amplitude slope {:.4} ± {:.4} (predicted {:.4})",
            f.points.len(),
            f.slope,
            f.slope_stderr,
            f.expected_slope
        );
    }
    let slope_failed = check.as_ref().is_some_and(|c| !c.passed());
    out.write_json(
        "report.json",
        &SweepReport {
            schema_version: SCHEMA_VERSION,
            command: "sweep",
            config: cfg,
            points,
            fit,
            slope_check: check,
        },
    )?;
    if let Some(e) = first_error {
        return Err(e);
    }
    if slope_failed {
        return Err(CliError::ChecksFailed("amplitude slope outside its tolerance".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct MultiplicitySummary<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    spec: SpecSnapshot,
    k_star: usize,
    insufficient: bool,
    minimal_divisors: Vec<u64>,
    candidates: Vec<SubspaceCandidate>,
}

#[derive(Serialize)]
struct BranchReport<'a> {
    schema_version: u32,
    command: &'a str,
    branch: usize,
    spec: SpecSnapshot,
    solution: SolutionSummary,
}

/// `multiplicity`: branches with pairwise distinct minimal periods, one report per branch.
pub fn cmd_multiplicity(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let eps = cfg.eps_values()?;
    let specs = build_specs(cfg, &eps)?;
    let k_star = cfg.multiplicity.k_star;
    let sweeps: Vec<_> = specs
        .par_iter()
        .enumerate()
        .map(|(k, spec)| {
            multiplicity_sweep(
                spec,
                k_star,
                cfg.solver.restarts,
                cfg.verify.seed.wrapping_add(k as u64),
            )
        })
        .collect();
    let mut first_error: Option<CliError> = None;
    for (k, (spec, sweep)) in specs.iter().zip(sweeps).enumerate() {
        let prefix = if specs.len() == 1 {
            String::new()
        } else {
            format!("eps_{k}/")
        };
        let rep = match sweep {
            Ok(rep) => rep,
            Err(e) => {
                first_error.get_or_insert(e.into());
                continue;
            }
        };
        for (b, r) in rep.branches.iter().enumerate() {
            let dir = format!("{prefix}branch_{}/", b + 1);
            write_solution_csv(out, cfg, &dir, r)?;
            out.write_json(
                &format!("{dir}report.json"),
                &BranchReport {
                    schema_version: SCHEMA_VERSION,
                    command: "multiplicity",
                    branch: b + 1,
                    spec: SpecSnapshot::of(spec),
                    solution: SolutionSummary::of(r, spec),
                },
            )?;
            if r.residual > cfg.solver.residual_tol {
                first_error.get_or_insert(CliError::ResidualAboveTolerance {
                    residual: r.residual,
                    tol: cfg.solver.residual_tol,
                });
            }
        }
        let divisors: Vec<u64> = rep.branches.iter().map(|r| r.minimal_divisor).collect();
        println!(
            "multiplicity: ε = {:e}: {} branch(es), minimal divisors {divisors:?}",
            spec.eps,
            rep.branches.len()
        );
        out.write_json(
            &format!("{prefix}report.json"),
            &MultiplicitySummary {
                schema_version: SCHEMA_VERSION,
                command: "multiplicity",
                config: cfg,
                spec: SpecSnapshot::of(spec),
                k_star,
                insufficient: rep.insufficient,
                minimal_divisors: divisors,
                candidates: rep.candidates,
            },
        )?;
        if rep.insufficient {
            first_error.get_or_insert(CliError::ChecksFailed(format!(
                "ε = {:e}: found {} of {k_star} distinct minimal periods",
                spec.eps,
                rep.branches.len()
            )));
        }
    }
    first_error.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct SuiteFile<'a> {
    schema_version: u32,
    report: &'a VerifyReport,
}

#[derive(Serialize)]
struct SuiteStatus {
    suite: String,
    passed: bool,
    cases_run: usize,
    cases_passed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    suites: Vec<SuiteStatus>,
}

/// Runs one named suite. `solution` caches the solve shared by the evolution and
/// regularity suites.
fn run_suite(
    name: &str,
    cfg: &RunConfig,
    spec: &ProblemSpec,
    solution: &mut Option<MountainPassReport>,
) -> Result<VerifyReport, CliError> {
    let seed = cfg.verify.seed;
    let n = cfg.verify.n_samples;
    let mut solved = |cfg: &RunConfig| -> Result<MountainPassReport, CliError> {
        if solution.is_none() {
            *solution = Some(solve_one(cfg, spec, cfg.solver.subspace_n, seed)?);
        }
        Ok(solution.clone().expect("cached above"))
    };
    Ok(match name {
        "identities" => check_exact_identities(seed, n)?,
        "basis_oracles" => check_basis_oracles(seed, n)?,
        "strichartz" => check_strichartz(seed, n, spec.tunables.delta)?,
        "divisor_margins" => VerifyReport {
            suite: "divisor_margins".into(),
            seed,
            checks: vec![check_divisor_margins(spec.omega, spec.gamma, &spec.disc)],
            constants: Vec::new(),
            evolution: None,
            scaling: None,
            notes: vec![format!("ω = {:.17e}, γ = {}", spec.omega, spec.gamma)],
        },
        "resolvent_difference" => check_resolvent_difference(seed, n, spec.p, spec.gamma, spec.eps)?,
        "evolution" => {
            let r = solved(cfg)?;
            check_evolution(
                Some((&r.state.total(), spec.p, spec.omega)),
                cfg.verify.steps_per_period,
            )?
        }
        "regularity" => {
            let r = solved(cfg)?;
            regularity_sweep(&r, &REGULARITY_GRID, spec.disc.truncation().n_split)
        }
        "scaling" => {
            let eps = match cfg.eps_values()? {
                list if list.len() >= 2 => list,
                _ => {
                    let (lo, hi, count) = SCALING_WINDOW;
                    let horizon = cfg.frequency.ell_max.max(cfg.truncation.lmax as u64);
                    admissible_eps_grid(spec.p, spec.gamma, lo, hi, count, horizon)?
                        .into_iter()
                        .map(|(e, _)| e)
                        .collect()
                }
            };
            let specs = build_specs(cfg, &eps)?;
            let (runs, fit, check) = run_sweep(cfg, &specs);
            let mut rep = VerifyReport {
                suite: "scaling".into(),
                seed,
                checks: check.into_iter().collect(),
                constants: Vec::new(),
                evolution: None,
                scaling: fit,
                notes: Vec::new(),
            };
            for (s, r) in specs.iter().zip(runs) {
                if let Err(e) = r {
                    rep.notes.push(format!("ε = {:e}: {e}", s.eps));
                    return Err(e);
                }
            }
            rep
        }
        other => return Err(CliError::Config(format!("unknown suite `{other}`"))),
    })
}

/// `verify`: the selected suites, one report each plus a summary.
pub fn cmd_verify(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let eps = cfg.eps_values()?;
    let spec = build_specs(cfg, &eps[..1])?.remove(0);
    let mut solution = None;
    let mut statuses = Vec::new();
    let mut first_error = None;
    for name in cfg.suites() {
        match run_suite(name, cfg, &spec, &mut solution) {
            Ok(rep) => {
                out.write_json(
                    &format!("verify/{name}.json"),
                    &SuiteFile {
                        schema_version: SCHEMA_VERSION,
                        report: &rep,
                    },
                )?;
                println!(
                    "verify: {name:<22} {} ({}/{} cases)",
                    if rep.passed() { "pass" } else { "FAIL" },
                    rep.cases_passed(),
                    rep.cases_run()
                );
                if !rep.passed() {
                    let failed: Vec<&str> = rep
                        .checks
                        .iter()
                        .filter(|c| c.hard && !c.passed())
                        .map(|c| c.name.as_str())
                        .collect();
                    first_error.get_or_insert(CliError::ChecksFailed(format!("{name}: {}", failed.join(", "))));
                }
                statuses.push(SuiteStatus {
                    suite: name.into(),
                    passed: rep.passed(),
                    cases_run: rep.cases_run(),
                    cases_passed: rep.cases_passed(),
                    error: None,
                });
            }
            Err(e) => {
                println!("verify: {name:<22} ERROR {e}");
                statuses.push(SuiteStatus {
                    suite: name.into(),
                    passed: false,
                    cases_run: 0,
                    cases_passed: 0,
                    error: Some(e.to_string()),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    out.write_json(
        "verify/summary.json",
        &VerifySummary {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            config: cfg,
            suites: statuses,
        },
    )?;
    first_error.map_or(Ok(()), Err)
}

/// Fixed seeds of the self-test suites.
const SELFTEST_SEEDS: (u64, u64) = (20_240_601, 20_240_602);
const SELFTEST_SAMPLES: usize = 100;

/// `selftest`: basis oracle equivalence and exact identities at fixed seeds.
pub fn cmd_selftest(_cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let reports = [
        check_basis_oracles(SELFTEST_SEEDS.0, SELFTEST_SAMPLES)?,
        check_exact_identities(SELFTEST_SEEDS.1, SELFTEST_SAMPLES)?,
    ];
    let mut failed = Vec::new();
    for rep in &reports {
        out.write_json(
            &format!("selftest/{}.json", rep.suite),
            &SuiteFile {
                schema_version: SCHEMA_VERSION,
                report: rep,
            },
        )?;
        println!(
            "selftest: {:<22} {} ({}/{} cases)",
            rep.suite,
            if rep.passed() { "pass" } else { "FAIL" },
            rep.cases_passed(),
            rep.cases_run()
        );
        if !rep.passed() {
            failed.push(rep.suite.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed.join(", ")))
    }
}
