//! Command drivers shared by the CLI: runs, checks, studies, and probes,
//! together with their on-disk CSV formats.
//!
//! All computation is sequential; the `FRACHILL_THREADS` variable pins the
//! worker count for the benefit of alternate builds and is validated here,
//! so identical configs produce byte-identical outputs regardless of its
//! value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::harness::{
    check_complementarity, check_energy_inequality, check_interpolant_identities,
    check_mass_conservation, energy, probe_contraction, study_h, study_lambda, CheckLine,
    CheckStatus, ComplementarityReport, ContractionProbe, LambdaStudy, MassReport, StudyResult,
};
use crate::snapshot::write_snapshot;
use crate::stepper::{SimState, StepReport};
use crate::trajectory::Trajectory;

/// Column header of `series.csv`; pinned by a golden-file test.
pub const SERIES_HEADER: &str =
    "step,time,outer_iters,outer_ratio,energy,mass,norm_mu,norm_phi_Bsigma,norm_s,res_mu,res_phi,res_s";

/// Column header of the check summary.
pub const CHECKS_HEADER: &str = "name,value,threshold,status";

/// Column header of `study_h.csv`.
pub const STUDY_H_HEADER: &str = "level,h,n_steps,diff_mu,diff_phi,diff_s,diff_L2,order";

/// Column header of `study_lambda.csv`.
pub const STUDY_LAMBDA_HEADER: &str =
    "level,lambda,diff_mu,diff_phi,diff_s,diff_L2,overshoot,violation";

/// Column header of `probe_contraction.csv`.
pub const PROBE_HEADER: &str = "pair,ratio,k_hat";

/// Validate the thread pin. Execution is single-threaded either way, which
/// keeps runs deterministic for every setting.
pub fn pinned_threads() -> Result<usize> {
    match std::env::var("FRACHILL_THREADS") {
        Ok(text) => {
            let n: usize = text.parse().map_err(|_| {
                Error::config(format!("FRACHILL_THREADS must be a positive integer, got '{text}'"))
            })?;
            if n == 0 {
                return Err(Error::config("FRACHILL_THREADS must be at least 1"));
            }
            Ok(n)
        }
        Err(_) => Ok(1),
    }
}

fn out_dir(cfg: &RunConfig, out_override: Option<&Path>) -> PathBuf {
    out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir))
}

fn fmt(value: f64) -> String {
    format!("{value:.12e}")
}

/// Run the configured simulation, writing `series.csv` and periodic
/// snapshots into the output directory. Returns the directory used.
pub fn cmd_run(cfg: &RunConfig, out_override: Option<&Path>) -> Result<PathBuf> {
    pinned_threads()?;
    let dir = out_dir(cfg, out_override);
    std::fs::create_dir_all(&dir)?;
    let (problem, initial) = cfg.build()?;
    let grid = *problem.ops.grid();
    let (traj, reports) = problem.run(initial)?;

    let mut csv = String::new();
    writeln!(csv, "{SERIES_HEADER}").expect("string write");
    for n in 0..=traj.n_steps() {
        let state = traj.state(n);
        let time = n as f64 * cfg.h;
        let report = if n == 0 {
            StepReport::default()
        } else {
            reports[n - 1].clone()
        };
        let mass = state
            .mu
            .scale(cfg.alpha)
            .axpy(1.0, &state.phi)
            .axpy(1.0, &state.s)
            .mean();
        let row = [
            n.to_string(),
            fmt(time),
            report.outer_iters.to_string(),
            fmt(report.outer_ratio),
            fmt(energy(&problem, &state)?),
            fmt(mass),
            fmt(state.mu.norm()),
            fmt(problem.ops.b.graph_norm(cfg.sigma, &state.phi)?),
            fmt(state.s.norm()),
            fmt(report.residual_mu),
            fmt(report.residual_phi),
            fmt(report.residual_s),
        ];
        writeln!(csv, "{}", row.join(",")).expect("string write");

        if cfg.snapshots_every > 0 && (n % cfg.snapshots_every == 0 || n == traj.n_steps()) {
            let path = dir.join(format!("snapshot_{n:06}.bin"));
            write_snapshot(&path, &grid, &state, time)?;
        }
    }
    std::fs::write(dir.join("series.csv"), csv)?;
    Ok(dir)
}

/// Run the simulation and evaluate the standard checks, appending the
/// machine-readable summary to `checks.csv` in the output directory.
pub fn cmd_check(cfg: &RunConfig, out_override: Option<&Path>) -> Result<Vec<CheckLine>> {
    pinned_threads()?;
    let dir = out_dir(cfg, out_override);
    std::fs::create_dir_all(&dir)?;
    let (problem, initial) = cfg.build()?;
    let (traj, reports) = problem.run(initial)?;
    let lines = run_checks(&problem, &traj, &reports)?;
    append_checks(&dir.join("checks.csv"), &lines)?;
    Ok(lines)
}

/// Evaluate the standard per-run checks.
pub fn run_checks(
    problem: &crate::stepper::Problem,
    traj: &Trajectory,
    reports: &[StepReport],
) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();

    let ledger = check_energy_inequality(problem, traj)?;
    let worst_excess = ledger
        .rows
        .iter()
        .map(|r| ledger.slack - r.margin)
        .fold(0.0f64, f64::max);
    lines.push(CheckLine::new(
        "energy_inequality",
        worst_excess,
        ledger.slack,
        ledger.pass,
    ));

    match check_mass_conservation(problem, traj)? {
        MassReport::Checked { max_drift, bound, pass } => {
            lines.push(CheckLine::new("mass_conservation", max_drift, bound, pass));
        }
        MassReport::Skipped { reason } => {
            lines.push(CheckLine::skipped("mass_conservation", &reason));
        }
    }

    let identity_worst = check_interpolant_identities(traj)?;
    lines.push(CheckLine::new(
        "interpolant_identities",
        identity_worst,
        1e-12,
        identity_worst < 1e-12,
    ));

    let max_res_phi = reports.iter().fold(0.0f64, |m, r| m.max(r.residual_phi));
    match check_complementarity(problem, traj, reports)? {
        ComplementarityReport::Smooth { max_vs_yosida, .. } => {
            let threshold = 10.0 * max_res_phi + 1e-12;
            lines.push(CheckLine::new(
                "complementarity_selection",
                max_vs_yosida,
                threshold,
                max_vs_yosida <= threshold,
            ));
        }
        ComplementarityReport::Obstacle {
            tol,
            max_interior,
            max_upper_sign,
            max_lower_sign,
            pass,
            ..
        } => {
            let worst = max_interior.max(max_upper_sign).max(max_lower_sign);
            lines.push(CheckLine::new("complementarity_bands", worst, tol, pass));
        }
    }
    Ok(lines)
}

/// Append check lines (with a header when the file is new).
pub fn append_checks(path: &Path, lines: &[CheckLine]) -> Result<()> {
    let mut text = String::new();
    if !path.exists() {
        writeln!(text, "{CHECKS_HEADER}").expect("string write");
    }
    for line in lines {
        let status = match &line.status {
            CheckStatus::Skipped(reason) => format!("skipped: {reason}"),
            other => other.as_str().to_string(),
        };
        writeln!(
            text,
            "{},{},{},{status}",
            line.name,
            fmt(line.value),
            fmt(line.threshold)
        )
        .expect("string write");
    }
    use std::io::Write;
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

/// Refinement study over halved step sizes; writes `study_h.csv`.
pub fn cmd_study_h(
    cfg: &RunConfig,
    levels: usize,
    out_override: Option<&Path>,
) -> Result<StudyResult> {
    pinned_threads()?;
    let dir = out_dir(cfg, out_override);
    std::fs::create_dir_all(&dir)?;
    let (problem, initial) = cfg.build()?;
    let study = study_h(&problem, &initial, levels)?;
    let mut csv = String::new();
    writeln!(csv, "{STUDY_H_HEADER}").expect("string write");
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    for row in &study.rows {
        let factor = 1usize << row.level;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            row.level,
            fmt(row.h),
            cfg.n_steps * factor,
            opt(row.diff_mu),
            opt(row.diff_phi),
            opt(row.diff_s),
            opt(row.diff_l2),
            opt(row.order),
        )
        .expect("string write");
    }
    std::fs::write(dir.join("study_h.csv"), csv)?;
    Ok(study)
}

/// Yosida-level study at fixed step size; writes `study_lambda.csv`.
/// Levels halve from the config's λ.
pub fn cmd_study_lambda(
    cfg: &RunConfig,
    levels: usize,
    out_override: Option<&Path>,
) -> Result<LambdaStudy> {
    pinned_threads()?;
    let dir = out_dir(cfg, out_override);
    std::fs::create_dir_all(&dir)?;
    let (problem, initial) = cfg.build()?;
    let lambdas: Vec<f64> = (0..levels).map(|k| cfg.lambda / (1u64 << k) as f64).collect();
    let study = study_lambda(&problem, &initial, &lambdas)?;
    let mut csv = String::new();
    writeln!(csv, "{STUDY_LAMBDA_HEADER}").expect("string write");
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    for (level, row) in study.rows.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            level,
            fmt(row.lambda),
            opt(row.diff_mu),
            opt(row.diff_phi),
            opt(row.diff_s),
            opt(row.diff_l2),
            fmt(row.overshoot),
            fmt(row.violation),
        )
        .expect("string write");
    }
    std::fs::write(dir.join("study_lambda.csv"), csv)?;
    Ok(study)
}

/// Pairwise contraction probe at the initial state; writes
/// `probe_contraction.csv`.
pub fn cmd_probe_contraction(
    cfg: &RunConfig,
    pairs: usize,
    seed: u64,
    out_override: Option<&Path>,
) -> Result<ContractionProbe> {
    pinned_threads()?;
    let dir = out_dir(cfg, out_override);
    std::fs::create_dir_all(&dir)?;
    let (problem, initial) = cfg.build()?;
    let probe = probe_contraction(&problem, &initial, pairs, seed)?;
    let mut csv = String::new();
    writeln!(csv, "{PROBE_HEADER}").expect("string write");
    for (pair, &ratio) in probe.ratios.iter().enumerate() {
        writeln!(csv, "{pair},{},{}", fmt(ratio), fmt(ratio / cfg.h)).expect("string write");
    }
    std::fs::write(dir.join("probe_contraction.csv"), csv)?;
    Ok(probe)
}

/// Reconstruct the initial state described by a config (used by tests).
pub fn initial_state(cfg: &RunConfig) -> Result<SimState> {
    let (_, initial) = cfg.build()?;
    Ok(initial)
}
