//! Checks over whole trajectories.

use serde::Serialize;

use crate::diagnostics::EntropyReport;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::exponents::{gamma_baseline, gamma_improved, t_rate_from_gamma};

/// Least-squares slope and intercept.
pub fn fit_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn step_mismatch(
    reports: &[EntropyReport],
    f_min: f64,
    value: impl Fn(&EntropyReport) -> f64,
    rate: impl Fn(&EntropyReport) -> f64,
) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for w in reports.windows(2) {
        if w[1].entropy < f_min {
            continue;
        }
        let lhs = (value(&w[1]) - value(&w[0])) / (w[1].t - w[0].t);
        let rhs = 0.5 * (rate(&w[0]) + rate(&w[1]));
        let rel = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
        worst = Some(worst.map_or(rel, |v: f64| v.max(rel)));
    }
    worst
}

/// Largest relative mismatch between the difference quotient of `F`
/// across consecutive snapshots and the trapezoidal average of
/// `-m(1-m) sigma^p I`, over snapshots with `F >= f_min`. First order in
/// the snapshot spacing for a backward Euler run reported every step.
pub fn production_identity_check(traj: &Trajectory, f_min: f64) -> Option<f64> {
    let m = traj.params.m;
    step_mismatch(
        &traj.reports,
        f_min,
        |r| r.entropy,
        |r| -m * (1.0 - m) * r.sigma_power * r.fisher,
    )
}

/// Same for `dsigma/dt = -2d(1-m)^2/(m K_M) sigma^p F`.
pub fn sigma_ode_check(traj: &Trajectory, f_min: f64) -> Option<f64> {
    let p = &traj.params;
    let m = p.m;
    let k_m = p.constants().k_m;
    let c = 2.0 * p.dim() * (1.0 - m).powi(2) / (m * k_m);
    step_mismatch(&traj.reports, f_min, |r| r.sigma, |r| -c * r.sigma_power * r.entropy)
}

/// Largest relative deviation of the mass from its initial value.
pub fn mass_drift(traj: &Trajectory) -> f64 {
    let m0 = traj.initial_mass;
    traj.steps
        .iter()
        .map(|s| ((s.mass - m0) / m0).abs())
        .fold(0.0, f64::max)
}

/// Largest increase of `F` over one accepted step.
pub fn max_entropy_increase(traj: &Trajectory) -> f64 {
    let mut prev = traj.reports.first().map_or(f64::INFINITY, |r| r.entropy);
    let mut worst = 0.0f64;
    for s in &traj.steps {
        worst = worst.max(s.entropy - prev);
        prev = s.entropy;
    }
    worst
}

/// Largest relative increase of `sigma` over one accepted step.
pub fn max_sigma_increase(traj: &Trajectory) -> f64 {
    let mut prev = traj.reports.first().map_or(0.0, |r| r.sigma);
    let mut worst = 0.0f64;
    for s in &traj.steps {
        worst = worst.max((s.sigma - prev) / prev);
        prev = s.sigma;
    }
    worst
}

/// Slope of `log R` against `log tau` over the last decade of `tau`.
pub fn r_tau_slope(traj: &Trajectory) -> Option<f64> {
    let tau_end = traj.reports.last()?.tau;
    let (x, y): (Vec<f64>, Vec<f64>) = traj
        .reports
        .iter()
        .filter(|r| r.tau >= 0.1 * tau_end && r.tau > 0.0)
        .map(|r| (r.tau.ln(), r.r_scale.ln()))
        .unzip();
    (x.len() >= 2).then(|| fit_slope(&x, &y).0)
}

/// Slope of `log(h - 1)` against `log F` over snapshots with `F >= f_min`.
pub fn relative_estimate_slope(traj: &Trajectory, f_min: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = traj
        .reports
        .iter()
        .filter(|r| r.entropy >= f_min && r.h > 1.0)
        .map(|r| (r.entropy.ln(), (r.h - 1.0).ln()))
        .unzip();
    (x.len() >= 3).then(|| fit_slope(&x, &y).0)
}

/// Decay rate of `|k - 1|` over the second half of the run.
pub fn k_decay_rate(traj: &Trajectory) -> Option<f64> {
    let t_end = traj.reports.last()?.t;
    let (x, y): (Vec<f64>, Vec<f64>) = traj
        .reports
        .iter()
        .filter(|r| r.t >= 0.5 * t_end && (r.k_ratio - 1.0).abs() > 0.0)
        .map(|r| (r.t, (r.k_ratio - 1.0).abs().ln()))
        .unzip();
    (x.len() >= 3).then(|| -fit_slope(&x, &y).0)
}

/// Log-F slope in rescaled time. Rates are positive numbers in the
/// `t`-convention: `F ~ exp(-slope t)`, compared against `2 gamma`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub t_a: f64,
    pub t_b: f64,
    pub slope: f64,
    pub efolds: f64,
    pub predicted_improved: Option<f64>,
    pub predicted_baseline: Option<f64>,
    /// `max R^gamma E` over the window with `gamma = gamma_improved`.
    pub r_gamma_e_max: Option<f64>,
    pub sigma_inf: f64,
    /// `R / tau^{1/q}` at the end of the run.
    pub c_inf: f64,
    pub points: usize,
}

pub const LATE_H_THRESHOLD: f64 = 1e-2;

/// Fits over `window`, or automatically over the last stretch where
/// `h - 1 < 1e-2` and `F >= f_min`.
pub fn fit_rate(traj: &Trajectory, window: Option<(f64, f64)>, f_min: f64) -> Result<RateFit> {
    let reports = &traj.reports;
    let usable = |r: &EntropyReport| r.entropy >= f_min && r.entropy > 0.0;
    let (t_a, t_b) = match window {
        Some(w) => w,
        None => {
            let last = reports
                .iter()
                .rposition(usable)
                .ok_or(Error::InsufficientDecay {
                    efolds: 0.0,
                    required: 2.0,
                })?;
            let mut first = last;
            while first > 0 && usable(&reports[first - 1]) && reports[first - 1].h - 1.0 < LATE_H_THRESHOLD
            {
                first -= 1;
            }
            (reports[first].t, reports[last].t)
        }
    };
    let chosen: Vec<&EntropyReport> = reports
        .iter()
        .filter(|r| r.t >= t_a && r.t <= t_b && usable(r))
        .collect();
    let efolds = match (chosen.first(), chosen.last()) {
        (Some(a), Some(b)) => (a.entropy / b.entropy).ln(),
        _ => 0.0,
    };
    if chosen.len() < 3 || !(efolds >= 2.0) {
        return Err(Error::InsufficientDecay {
            efolds,
            required: 2.0,
        });
    }
    let x: Vec<f64> = chosen.iter().map(|r| r.t).collect();
    let y: Vec<f64> = chosen.iter().map(|r| r.entropy.ln()).collect();
    let slope = -fit_slope(&x, &y).0;
    let p = &traj.params;
    let gi = gamma_improved(p.d, p.m).ok().map(|g| g.0);
    let gb = gamma_baseline(p.d, p.m).ok().map(|g| g.0);
    let last = reports.last().expect("nonempty trajectory");
    Ok(RateFit {
        t_a,
        t_b,
        slope,
        efolds,
        predicted_improved: gi.map(t_rate_from_gamma),
        predicted_baseline: gb.map(t_rate_from_gamma),
        r_gamma_e_max: gi.map(|g| {
            chosen
                .iter()
                .map(|r| r.r_scale.powf(g) * r.entropy_original)
                .fold(0.0, f64::max)
        }),
        sigma_inf: last.sigma,
        c_inf: last.r_scale / last.tau.powf(1.0 / p.q()),
        points: chosen.len(),
    })
}
