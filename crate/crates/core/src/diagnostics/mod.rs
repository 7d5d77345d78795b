//! Relative entropy, relative Fisher information, `h`-bounds and the
//! inequality monitors evaluated on single snapshots, plus trajectory-level
//! checks in [`monitors`].

pub mod monitors;

pub use monitors::{
    fit_rate, fit_slope, k_decay_rate, mass_drift, max_entropy_increase, max_sigma_increase,
    production_identity_check, r_tau_slope, relative_estimate_slope, sigma_ode_check, RateFit,
};

use serde::Serialize;
use std::path::Path;

use crate::barenblatt::{BarenblattProfile, DiscreteProfile};
use crate::dynamics::{Grid, Mode, SolutionState};
use crate::error::{Error, Result};
use crate::exponents::ModelParams;

/// Cells carrying less than this fraction of the mass are ignored by `h`.
pub const H_MASS_CUTOFF: f64 = 1e-12;

/// `w - 1 - (w^m - 1)/m` as a function of `e = w - 1`, accurate for small `e`.
fn phi(e: f64, m: f64) -> f64 {
    if e.abs() < 1e-3 {
        let c2 = -(m - 1.0) / 2.0;
        let c3 = c2 * (m - 2.0) / 3.0;
        let c4 = c3 * (m - 3.0) / 4.0;
        let c5 = c4 * (m - 4.0) / 5.0;
        e * e * (c2 + e * (c3 + e * (c4 + e * c5)))
    } else {
        e - (m * e.ln_1p()).exp_m1() / m
    }
}

/// `u^{m-1} - B^{m-1}` without cancellation.
fn pressure_gap(e: f64, b_pow_m1: f64, m: f64) -> f64 {
    b_pow_m1 * ((m - 1.0) * e.ln_1p()).exp_m1()
}

/// Reference values `B_sigma` at cell centers.
pub fn profile_values(profile: &BarenblattProfile, grid: &Grid) -> Vec<f64> {
    grid.centers.iter().map(|x| profile.evaluate(x.abs())).collect()
}

/// `F = (1/(m-1)) sum [u^m - B^m - m B^{m-1}(u - B)] V`.
pub fn relative_entropy(params: &ModelParams, grid: &Grid, u: &[f64], b: &[f64]) -> f64 {
    let m = params.m;
    let c = m / (1.0 - m);
    grid.integrate_with(|i| c * phi(u[i] / b[i] - 1.0, m) * b[i].powf(m))
}

/// `I = (1/(1-m)^2) int u |grad(u^{m-1} - B^{m-1})|^2` with face differences
/// and arithmetic face averages of `u`.
pub fn relative_fisher(params: &ModelParams, grid: &Grid, u: &[f64], b: &[f64]) -> f64 {
    let m = params.m;
    let g: Vec<f64> = u
        .iter()
        .zip(b)
        .map(|(ui, bi)| pressure_gap(ui / bi - 1.0, bi.powf(m - 1.0), m))
        .collect();
    let sum: f64 = (1..grid.len())
        .map(|f| {
            let dg = g[f] - g[f - 1];
            grid.face_areas[f] / grid.center_gap(f) * 0.5 * (u[f] + u[f - 1]) * dg * dg
        })
        .sum();
    sum / (1.0 - m).powi(2)
}

/// `(F, I)` against the grid equilibrium.
pub fn entropy_and_fisher(
    params: &ModelParams,
    grid: &Grid,
    u: &[f64],
    profile: &DiscreteProfile,
) -> (f64, f64) {
    (
        relative_entropy(params, grid, u, &profile.values),
        relative_fisher(params, grid, u, &profile.values),
    )
}

/// `X(h) = h^{5-2m} - 1`.
pub fn x_of_h(h: f64, m: f64) -> f64 {
    ((5.0 - 2.0 * m) * h.ln()).exp_m1()
}

/// `Y(h) = d(1-m)(h^{4(2-m)} - 1)`.
pub fn y_of_h(h: f64, m: f64, d: usize) -> f64 {
    d as f64 * (1.0 - m) * (4.0 * (2.0 - m) * h.ln()).exp_m1()
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub t: f64,
    pub tau: f64,
    pub r_scale: f64,
    pub sigma: f64,
    pub entropy: f64,
    pub fisher: f64,
    /// Original-variable entropy, equal to `F`.
    pub entropy_original: f64,
    pub h1: f64,
    pub h2: f64,
    pub h: f64,
    pub x_h: f64,
    pub y_h: f64,
    pub mass: f64,
    pub second_moment: f64,
    pub center_of_mass: f64,
    /// `int f B^{2-m}`, `int x f B^{2-m}`, `int |x|^2 f B^{2-m}`.
    pub orthogonality: [f64; 3],
    /// The same integrals with `|f|` and `|x|`, used to normalize.
    pub orthogonality_scale: [f64; 3],
    pub k_ratio: f64,
    /// `int f^2 B^{2-m}`.
    pub f_norm: f64,
    /// `int |grad f|^2 B`.
    pub grad_f_norm: f64,
    pub sigma_power: f64,
    pub matched: bool,
}

impl EntropyReport {
    pub fn compute(params: &ModelParams, state: &SolutionState) -> Self {
        let profile = DiscreteProfile::new(params, &state.grid, state.sigma);
        Self::against(params, state, &profile)
    }

    pub fn against(params: &ModelParams, state: &SolutionState, profile: &DiscreteProfile) -> Self {
        let grid = &state.grid;
        let u = &state.u;
        let b = &profile.values;
        let m = params.m;
        let n = grid.len();
        let e: Vec<f64> = u.iter().zip(b).map(|(ui, bi)| ui / bi - 1.0).collect();
        let f: Vec<f64> = e.iter().zip(&profile.pow_m1).map(|(ei, p)| ei * p).collect();

        let cutoff = H_MASS_CUTOFF * params.mass;
        let (mut h1, mut h2) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            if u[i] * grid.volumes[i] > cutoff {
                h1 = h1.min(1.0 + e[i]);
                h2 = h2.max(1.0 + e[i]);
            }
        }
        let h = h2.max(1.0 / h1).max(1.0);

        let radial_moment = |i: usize, power: i32| grid.centers[i].powi(power);
        let mut orth = [0.0; 3];
        let mut scale = [0.0; 3];
        for i in 0..n {
            let diff = (u[i] - b[i]) * grid.volumes[i];
            for (k, (o, s)) in orth.iter_mut().zip(scale.iter_mut()).enumerate() {
                let w = radial_moment(i, k as i32);
                *o += w * diff;
                *s += w.abs() * diff.abs();
            }
        }
        if !matches!(grid.kind, crate::dynamics::GridKind::FullLine) {
            orth[1] = 0.0;
        }
        let f_norm = grid.integrate_with(|i| e[i] * e[i] * b[i].powf(m));
        let grad_f_norm: f64 = (1..n)
            .map(|k| {
                let df = f[k] - f[k - 1];
                grid.face_areas[k] / grid.center_gap(k) * 0.5 * (b[k] + b[k - 1]) * df * df
            })
            .sum();
        let entropy = relative_entropy(params, grid, u, b);
        let consts = params.constants();
        let second_moment = grid.second_moment(u);
        let mass = grid.integrate(u);
        let mcm = params.mass * consts.c_m;
        Self {
            t: state.t,
            tau: state.tau,
            r_scale: state.r_scale,
            sigma: state.sigma,
            entropy,
            fisher: relative_fisher(params, grid, u, b),
            entropy_original: entropy,
            h1,
            h2,
            h,
            x_h: x_of_h(h, m),
            y_h: y_of_h(h, m, params.d),
            mass,
            second_moment,
            center_of_mass: grid.first_moment(u) / mass,
            orthogonality: orth,
            orthogonality_scale: scale,
            k_ratio: (second_moment + mcm) / (consts.k_m + mcm),
            f_norm,
            grad_f_norm,
            sigma_power: state.sigma.powf(params.p()),
            matched: state.mode == Mode::Matched,
        }
    }
}

/// Outcome of the three displayed inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsCheck {
    pub sandwich: bool,
    pub fisher_bound: bool,
    /// `None` when `Lambda - sigma^p Y(h) <= 0`, i.e. `h >= h*`.
    pub interpolation: Option<bool>,
}

impl BoundsCheck {
    pub fn all_hold(&self) -> bool {
        self.sandwich && self.fisher_bound && self.interpolation.unwrap_or(true)
    }
}

fn within(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs * (1.0 + slack) + f64::MIN_POSITIVE
}

/// Sandwich, generalized Fisher bound and interpolation inequality, each
/// allowed a relative `slack` for quadrature.
pub fn bounds_check(report: &EntropyReport, m: f64, lambda: f64, slack: f64) -> BoundsCheck {
    let h = report.h;
    let fn2 = report.f_norm;
    let two_f_over_m = 2.0 * report.entropy / m;
    let sandwich = within(h.powf(m - 2.0) * fn2, two_f_over_m, slack)
        && within(two_f_over_m, h.powf(2.0 - m) * fn2, slack);
    let fisher_bound = within(
        report.grad_f_norm,
        (1.0 + report.x_h) * report.fisher + report.y_h * fn2,
        slack,
    );
    let gap = lambda - report.sigma_power * report.y_h;
    let interpolation = (gap > 0.0).then(|| {
        let rhs = h.powf(2.0 - m) * (1.0 + report.x_h) / (2.0 * gap)
            * m
            * report.sigma_power
            * report.fisher;
        within(report.entropy, rhs, slack)
    });
    BoundsCheck {
        sandwich,
        fisher_bound,
        interpolation,
    }
}

/// `sigma^p int |grad f|^2 B / (Lambda int f^2 B^{2-m})`; at least one when
/// the scaled Hardy-Poincare inequality holds.
pub fn hardy_poincare_ratio(report: &EntropyReport, lambda: f64) -> f64 {
    report.sigma_power * report.grad_f_norm / (lambda * report.f_norm)
}

/// Orthogonality residuals, each relative to its absolute-value scale.
pub fn orthogonality_check(report: &EntropyReport) -> [f64; 3] {
    std::array::from_fn(|k| {
        let s = report.orthogonality_scale[k];
        if s > 0.0 {
            report.orthogonality[k].abs() / s
        } else {
            0.0
        }
    })
}

pub fn k_ratio(report: &EntropyReport) -> f64 {
    report.k_ratio
}

/// `(1/(m-1)) int u^m + e(sigma)/(1-m)` with
/// `e(sigma) = sigma^{d(1-m)/2} [M C_M + (1-m) K_M] + m sigma^{-p} int |x|^2 u`.
pub fn entropy_closed_form(params: &ModelParams, grid: &Grid, u: &[f64], sigma: f64) -> f64 {
    let m = params.m;
    let c = params.constants();
    let um: f64 = grid.integrate_with(|i| u[i].powf(m));
    let e = sigma.powf(0.5 * params.dim() * (1.0 - m)) * (params.mass * c.c_m + (1.0 - m) * c.k_m)
        + m * sigma.powf(-params.p()) * grid.second_moment(u);
    um / (m - 1.0) + e / (1.0 - m)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerScan {
    pub sigmas: Vec<f64>,
    pub entropies: Vec<f64>,
    pub argmin: f64,
    /// `(1/K_M) int |x|^2 u`.
    pub sigma_star: f64,
    pub cell: f64,
    /// `dF_sigma/dsigma` at `sigma*`, relative to its natural scale.
    pub derivative_residual: f64,
}

/// Scans `sigma -> F_sigma[u]` against the closed-form profiles on `n` equally
/// spaced points of `[lo, hi]`.
pub fn minimizer_scan(
    params: &ModelParams,
    grid: &Grid,
    u: &[f64],
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<MinimizerScan> {
    if !(lo > 0.0 && hi > lo) || n < 3 {
        return Err(Error::InvalidParameter {
            name: "scan",
            reason: format!("need 0 < lo < hi and n >= 3, got [{lo}, {hi}], n = {n}"),
        });
    }
    let k_m = params.constants().k_m;
    let sigma_star = grid.second_moment(u) / k_m;
    if !(sigma_star >= lo && sigma_star <= hi) {
        return Err(Error::BracketMiss {
            lo,
            hi,
            target: sigma_star,
        });
    }
    let cell = (hi - lo) / (n - 1) as f64;
    let sigmas: Vec<f64> = (0..n).map(|i| lo + cell * i as f64).collect();
    let entropies = sigmas
        .iter()
        .map(|&s| {
            let b = profile_values(&BarenblattProfile::new(*params, s)?, grid);
            Ok(relative_entropy(params, grid, u, &b))
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = entropies
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);

    // dF/dsigma = (m/(1-m)) int dD/dsigma (u - B), D = B^{m-1}
    let m = params.m;
    let p = params.p();
    let c_exp = 0.5 * params.dim() * (1.0 - m);
    let prof = BarenblattProfile::new(*params, sigma_star)?;
    let b = profile_values(&prof, grid);
    let c_m = params.constants().c_m;
    let d_c = c_exp * sigma_star.powf(c_exp - 1.0) * c_m;
    let d_r = -p * sigma_star.powf(-p - 1.0);
    let mut deriv = 0.0;
    let mut scale = 0.0;
    for i in 0..grid.len() {
        let r2 = grid.centers[i] * grid.centers[i];
        let dd = d_c + d_r * r2;
        deriv += dd * (u[i] - b[i]) * grid.volumes[i];
        scale += dd.abs() * (u[i] + b[i]) * grid.volumes[i];
    }
    Ok(MinimizerScan {
        argmin: sigmas[best],
        sigmas,
        entropies,
        sigma_star,
        cell,
        derivative_residual: deriv / scale,
    })
}

/// Per-snapshot CSV report.
pub fn write_reports(path: &Path, reports: &[EntropyReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "t",
        "tau",
        "R",
        "sigma",
        "F",
        "I",
        "h",
        "second_moment",
        "center_of_mass",
        "residual_mass",
        "residual_first",
        "residual_second",
        "k_ratio",
    ])?;
    for r in reports {
        let res = orthogonality_check(r);
        let row = [
            r.t,
            r.tau,
            r.r_scale,
            r.sigma,
            r.entropy,
            r.fisher,
            r.h,
            r.second_moment,
            r.center_of_mass,
            res[0],
            res[1],
            res[2],
            r.k_ratio,
        ];
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{init_state, InitialDatum, MixComponent};

    fn setup() -> (ModelParams, Grid) {
        (
            ModelParams::normalized(1, 0.7).unwrap(),
            Grid::full_line(16384, 400.0).unwrap(),
        )
    }

    #[test]
    fn phi_branches_agree() {
        for &m in &[0.4, 0.7, 0.95] {
            for &e in &[1e-3 * 0.999, -1e-3 * 0.999] {
                let direct = e - (m * f64::ln_1p(e)).exp_m1() / m;
                assert!((phi(e, m) - direct).abs() < 1e-9 * direct.abs());
            }
        }
    }

    #[test]
    fn entropy_of_b2_matches_closed_form() {
        let (p, g) = setup();
        let b1 = profile_values(&BarenblattProfile::new(p, 1.0).unwrap(), &g);
        let b2 = profile_values(&BarenblattProfile::new(p, 2.0).unwrap(), &g);
        let quad = relative_entropy(&p, &g, &b2, &b1);
        // closed form with the exact moments of B_2
        let m = p.m;
        let c = p.constants();
        let cexp = 0.5 * (1.0 - m);
        let um = 2f64.powf(cexp) * (p.mass * c.c_m + c.k_m);
        let e = p.mass * c.c_m + (1.0 - m) * c.k_m + m * 2.0 * c.k_m;
        let closed = um / (m - 1.0) + e / (1.0 - m);
        assert!(quad > 0.0);
        assert!(((quad - closed) / closed).abs() < 1e-6, "{quad} {closed}");
        let via_grid = entropy_closed_form(&p, &g, &b2, 1.0);
        assert!(((quad - via_grid) / closed).abs() < 1e-8);
    }

    #[test]
    fn zero_at_profile() {
        let (p, g) = setup();
        let b = profile_values(&BarenblattProfile::new(p, 1.3).unwrap(), &g);
        assert_eq!(relative_entropy(&p, &g, &b, &b), 0.0);
        assert_eq!(relative_fisher(&p, &g, &b, &b), 0.0);
    }

    #[test]
    fn translation_has_positive_fisher() {
        let (p, g) = setup();
        let prof = BarenblattProfile::new(p, 1.0).unwrap();
        let b = profile_values(&prof, &g);
        let shifted: Vec<f64> = g.centers.iter().map(|x| prof.evaluate((x - 0.05).abs())).collect();
        assert!(relative_fisher(&p, &g, &shifted, &b) > 0.0);
    }

    #[test]
    fn x_and_y_vanish_at_one() {
        assert_eq!(x_of_h(1.0, 0.7), 0.0);
        assert_eq!(y_of_h(1.0, 0.7, 3), 0.0);
    }

    #[test]
    fn barenblatt_report_is_trivial() {
        let (p, g) = setup();
        let s = init_state(&p, &InitialDatum::Barenblatt { sigma0: 1.0 }, &g, Mode::Matched, true)
            .unwrap();
        let r = EntropyReport::compute(&p, &s);
        assert!(r.entropy < 1e-12);
        assert!((r.h - 1.0).abs() < 1e-6);
        assert!((r.k_ratio - 1.0).abs() < 1e-6);
        let check = bounds_check(&r, p.m, 14.0, 1e-2);
        assert!(check.all_hold());
    }

    #[test]
    fn inflated_h_closes_the_gate() {
        let (p, g) = setup();
        let s = init_state(&p, &InitialDatum::Barenblatt { sigma0: 1.0 }, &g, Mode::Matched, true)
            .unwrap();
        let mut r = EntropyReport::compute(&p, &s);
        r.h = 10.0;
        r.y_h = y_of_h(r.h, p.m, 1);
        r.x_h = x_of_h(r.h, p.m);
        assert_eq!(bounds_check(&r, p.m, 14.0, 0.0).interpolation, None);
    }

    #[test]
    fn scan_finds_moment_value() {
        let (p, g) = setup();
        let datum = InitialDatum::GenericMix {
            components: vec![
                MixComponent {
                    weight: 0.5,
                    sigma: 1.0,
                    shift: 0.0,
                },
                MixComponent {
                    weight: 0.5,
                    sigma: 3.0,
                    shift: 0.0,
                },
            ],
        };
        let s = init_state(&p, &datum, &g, Mode::Matched, true).unwrap();
        let scan = minimizer_scan(&p, &g, &s.u, 1.0, 3.0, 201).unwrap();
        assert!((scan.sigma_star - 2.0).abs() < 1e-3);
        assert!((scan.argmin - scan.sigma_star).abs() <= scan.cell);
        assert!(scan.derivative_residual.abs() < 1e-8);
        assert!(matches!(
            minimizer_scan(&p, &g, &s.u, 2.5, 3.0, 11),
            Err(Error::BracketMiss { .. })
        ));
    }
}
