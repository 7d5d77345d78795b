//! Single runs: reports, step log, checkpoints and a manifest in one
//! directory. Nothing time- or host-dependent is written, so identical
//! configs give identical files.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

use super::config::{ExperimentConfig, Tolerances};
use crate::diagnostics::{
    bounds_check, fit_rate, hardy_poincare_ratio, mass_drift, max_entropy_increase,
    max_sigma_increase, orthogonality_check, production_identity_check, r_tau_slope,
    sigma_ode_check, write_reports, RateFit,
};
use crate::dynamics::{init_state, run_from, Checkpoint, Mode, SolutionState, StepRecord, Trajectory};
use crate::error::{Error, Result};
use crate::exponents::ModelParams;
use crate::spectral::lambda_improved;

pub const MANIFEST_FORMAT: &str = "fdlab-run";
pub const MANIFEST_VERSION: u32 = 1;

/// Per-snapshot inequality checks.
#[derive(Debug, Clone, Serialize)]
pub struct SnapshotCheck {
    pub t: f64,
    pub sandwich: bool,
    pub fisher_bound: bool,
    pub interpolation: Option<bool>,
    /// Scaled Hardy-Poincare ratio; checked in centred matched runs only.
    pub hardy_poincare: Option<f64>,
    pub orthogonality: [f64; 3],
    pub center_of_mass: f64,
    pub holds: bool,
}

/// `lambda_improved` when the run satisfies its orthogonality conditions.
fn applicable_lambda(params: &ModelParams, traj: &Trajectory, centred: bool) -> Option<f64> {
    (traj.mode == Mode::Matched && centred)
        .then(|| lambda_improved(params.alpha(), params.d).ok().map(|l| l.0))
        .flatten()
}

/// Sandwich and Fisher bounds at every snapshot. In centred matched runs
/// also the mass and second-moment conditions and the centre of mass, and
/// the interpolation and scaled Hardy-Poincare bounds wherever the
/// first-moment condition holds to `first_moment_hypothesis`. Snapshots
/// with `F` below `f_floor` are skipped.
pub fn snapshot_checks(
    traj: &Trajectory,
    centred: bool,
    tol: &Tolerances,
    f_floor: f64,
) -> Vec<SnapshotCheck> {
    let p = &traj.params;
    let lambda = applicable_lambda(p, traj, centred);
    traj.reports
        .iter()
        .filter(|r| r.entropy >= f_floor)
        .map(|r| {
            let b = bounds_check(r, p.m, lambda.unwrap_or(f64::NAN), tol.bound_slack);
            let hp = lambda.map(|l| hardy_poincare_ratio(r, l));
            let orth = orthogonality_check(r);
            let mut holds = b.sandwich && b.fisher_bound;
            if let Some(ratio) = hp {
                if orth[1] <= tol.first_moment_hypothesis {
                    holds &= ratio >= 1.0 - tol.bound_slack && b.interpolation.unwrap_or(true);
                }
                holds &= orth[0] <= tol.orthogonality && orth[2] <= tol.orthogonality;
                holds &= r.center_of_mass.abs() <= tol.center_of_mass;
            }
            SnapshotCheck {
                t: r.t,
                sandwich: b.sandwich,
                fisher_bound: b.fisher_bound,
                interpolation: b.interpolation,
                hardy_poincare: hp,
                orthogonality: orth,
                center_of_mass: r.center_of_mass,
                holds,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t_end: f64,
    pub final_entropy: f64,
    pub final_sigma: f64,
    pub mass_drift: f64,
    pub max_entropy_increase: f64,
    pub max_sigma_increase: f64,
    pub production_mismatch: Option<f64>,
    pub sigma_ode_mismatch: Option<f64>,
    pub r_tau_slope: Option<f64>,
    /// `1 / q`, the late-time exponent of `R ~ tau^{1/q}`.
    pub r_tau_target: f64,
    pub fit: Option<RateFit>,
    pub fit_warning: Option<String>,
    pub snapshots_checked: usize,
    pub snapshot_failures: usize,
}

pub fn summarize(traj: &Trajectory, cfg: &ExperimentConfig) -> RunSummary {
    let floor = cfg.run.fit_floor;
    let checks = snapshot_checks(traj, cfg.run.recentre, &cfg.tolerances, floor);
    let window = cfg.run.fit_window.map(|[a, b]| (a, b));
    let (fit, fit_warning) = match fit_rate(traj, window, floor) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let last = traj.reports.last();
    RunSummary {
        steps: traj.steps.len(),
        t_end: last.map_or(0.0, |r| r.t),
        final_entropy: last.map_or(0.0, |r| r.entropy),
        final_sigma: last.map_or(0.0, |r| r.sigma),
        mass_drift: mass_drift(traj),
        max_entropy_increase: max_entropy_increase(traj),
        max_sigma_increase: max_sigma_increase(traj),
        production_mismatch: production_identity_check(traj, floor),
        sigma_ode_mismatch: (traj.mode == Mode::Matched)
            .then(|| sigma_ode_check(traj, floor))
            .flatten(),
        r_tau_slope: r_tau_slope(traj),
        r_tau_target: 1.0 / traj.params.q(),
        fit,
        fit_warning,
        snapshots_checked: checks.len(),
        snapshot_failures: checks.iter().filter(|c| !c.holds).count(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub format: &'static str,
    pub version: u32,
    pub code_version: &'static str,
    /// SHA-256 of the canonical config text.
    pub config_sha256: String,
    pub seed: u64,
    pub resumed_from_t: Option<f64>,
    pub files: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_steps(path: &Path, steps: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "t",
        "dt",
        "sigma",
        "mass",
        "F",
        "mismatch",
        "newton_iterations",
        "rejected",
        "m_matrix",
    ])?;
    for s in steps {
        w.write_record([
            format!("{:e}", s.t),
            format!("{:e}", s.dt),
            format!("{:e}", s.sigma),
            format!("{:e}", s.mass),
            format!("{:e}", s.entropy),
            s.mismatch.map_or_else(String::new, |v| format!("{v:e}")),
            s.newton_iterations.to_string(),
            s.rejected.to_string(),
            s.m_matrix.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_checks(path: &Path, checks: &[SnapshotCheck]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "t",
        "sandwich",
        "fisher_bound",
        "interpolation",
        "hardy_poincare",
        "residual_mass",
        "residual_first",
        "residual_second",
        "center_of_mass",
        "holds",
    ])?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for c in checks {
        w.write_record([
            format!("{:e}", c.t),
            c.sandwich.to_string(),
            c.fisher_bound.to_string(),
            opt(c.interpolation.map(|b| b.to_string())),
            opt(c.hardy_poincare.map(|v| format!("{v:e}"))),
            format!("{:e}", c.orthogonality[0]),
            format!("{:e}", c.orthogonality[1]),
            format!("{:e}", c.orthogonality[2]),
            format!("{:e}", c.center_of_mass),
            c.holds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of [`simulate`].
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
    pub manifest: Manifest,
}

fn failure_dump(out: &Path, params: ModelParams, last: Option<SolutionState>, err: Error) -> Error {
    if let Some(state) = last {
        let path = out.join("failure_checkpoint.json");
        if Checkpoint::new(params, state).save(&path).is_ok() {
            return Error::Checkpoint(format!("{err}; last accepted state written to {}", path.display()));
        }
    }
    err
}

/// Runs `cfg` from its datum without writing anything.
pub fn trajectory(cfg: &ExperimentConfig) -> Result<Trajectory> {
    let (params, grid) = cfg.validate()?;
    let datum = cfg.resolved_datum();
    let state = init_state(&params, &datum, &grid, cfg.run.mode, cfg.run.recentre)?;
    run_from(&params, state, cfg.run.t_end, cfg.run.cadence(), &cfg.solver, &mut |_| Ok(()))
}

/// Runs `cfg` into `out`. A resumed run writes only the snapshots and
/// steps after the checkpoint, which coincide with those of the
/// uninterrupted run.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulateOutput> {
    let (params, grid) = cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let (state, resumed) = match &cfg.run.resume_from {
        Some(path) => {
            let cp = Checkpoint::load(path)
                .map_err(|e| Error::config("run.resume_from", e.to_string()))?;
            if cp.params != params {
                return Err(Error::config("run.resume_from", "checkpoint parameters differ from [params]"));
            }
            if cp.state.grid != grid {
                return Err(Error::config("run.resume_from", "checkpoint grid differs from [grid]"));
            }
            if cp.state.mode != cfg.run.mode {
                return Err(Error::config("run.resume_from", "checkpoint mode differs from run.mode"));
            }
            (cp.state, true)
        }
        None => {
            let datum = cfg.resolved_datum();
            let s = init_state(&params, &datum, &grid, cfg.run.mode, cfg.run.recentre)?;
            (s, false)
        }
    };
    let start_t = state.t;

    let cp_dir = out.join("checkpoints");
    if cfg.run.checkpoint_every > 0 {
        std::fs::create_dir_all(&cp_dir)?;
    }
    let mut last: Option<SolutionState> = None;
    let every = cfg.run.checkpoint_every;
    let result = run_from(
        &params,
        state,
        cfg.run.t_end,
        cfg.run.cadence(),
        &cfg.solver,
        &mut |s: &SolutionState| {
            if every > 0 && s.steps.is_multiple_of(every) {
                let path = cp_dir.join(format!("step_{:08}.json", s.steps));
                Checkpoint::new(params, s.clone()).save(&path)?;
            }
            last = Some(s.clone());
            Ok(())
        },
    );
    let mut traj = result.map_err(|e| failure_dump(out, params, last.take(), e))?;
    if resumed {
        traj.reports.retain(|r| r.t > start_t);
    }

    let mut files = vec!["reports.csv".to_string(), "steps.csv".to_string(), "checks.csv".to_string()];
    write_reports(&out.join("reports.csv"), &traj.reports)?;
    write_steps(&out.join("steps.csv"), &traj.steps)?;
    let checks = snapshot_checks(&traj, cfg.run.recentre, &cfg.tolerances, cfg.run.fit_floor);
    write_checks(&out.join("checks.csv"), &checks)?;
    if let Some(state) = &traj.final_state {
        std::fs::create_dir_all(&cp_dir)?;
        Checkpoint::new(params, state.clone()).save(&cp_dir.join("final.json"))?;
        files.push("checkpoints/final.json".into());
    }
    let summary = summarize(&traj, cfg);
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    files.push("summary.json".into());
    std::fs::write(out.join("config.toml"), cfg.to_toml())?;
    files.push("config.toml".into());
    let manifest = Manifest {
        format: MANIFEST_FORMAT,
        version: MANIFEST_VERSION,
        code_version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_hash(cfg),
        seed: cfg.seed,
        resumed_from_t: resumed.then_some(start_t),
        files,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(SimulateOutput {
        trajectory: traj,
        summary,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::InitialDatum;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.grid.cells = 256;
        cfg.run.t_end = 0.2;
        cfg.run.output_every = 0.05;
        cfg
    }

    #[test]
    fn identical_configs_give_identical_files() {
        let cfg = small();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        simulate(&cfg, a.path()).unwrap();
        simulate(&cfg, b.path()).unwrap();
        for f in ["reports.csv", "steps.csv", "manifest.json", "summary.json", "checkpoints/final.json"] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f}");
        }
    }

    #[test]
    fn barenblatt_run_stays_at_equilibrium() {
        let mut cfg = small();
        cfg.datum = InitialDatum::Barenblatt { sigma0: 1.0 };
        let dir = tempfile::tempdir().unwrap();
        let out = simulate(&cfg, dir.path()).unwrap();
        assert!(out.trajectory.reports.iter().all(|r| r.entropy < 1e-8));
    }

    #[test]
    fn mismatched_checkpoint_is_a_config_error() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        simulate(&cfg, dir.path()).unwrap();
        let mut other = small();
        other.params.m = 0.8;
        other.run.resume_from = Some(dir.path().join("checkpoints/final.json"));
        other.run.t_end = 0.3;
        let e = simulate(&other, dir.path()).unwrap_err();
        assert!(matches!(e, Error::Config { field, .. } if field == "run.resume_from"));
    }
}
