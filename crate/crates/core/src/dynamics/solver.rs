use serde::{Deserialize, Serialize};

use crate::barenblatt::DiscreteProfile;
use crate::diagnostics::{entropy_and_fisher, EntropyReport};
use crate::dynamics::datum::InitialDatum;
use crate::dynamics::grid::Grid;
use crate::error::{Error, Result};
use crate::exponents::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `sigma(t)` slaved to the second moment.
    Matched,
    /// `sigma = 1`.
    SelfSimilar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionState {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub t: f64,
    pub sigma: f64,
    /// `R = e^{2t}`.
    pub r_scale: f64,
    pub tau: f64,
    pub x0: f64,
    pub mode: Mode,
    pub steps: u64,
    /// Step size the controller will try next.
    pub dt_next: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub dt_initial: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// Disable the controller and always step by `dt_initial`.
    pub fixed_dt: bool,
    /// Largest accepted relative mismatch of `dF/dt = -m(1-m) sigma^p I` per step.
    pub production_budget: f64,
    /// No step-size control once `F` falls below this.
    pub entropy_floor: f64,
    /// Newton stops once `max |dz| < newton_tol` with `z = ln u`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Re-solve each step once with the updated `sigma`.
    pub sigma_sweep: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_initial: 1e-3,
            dt_max: 1e-2,
            dt_min: 1e-10,
            fixed_dt: false,
            production_budget: 2e-2,
            entropy_floor: 1e-22,
            newton_tol: 1e-11,
            newton_max_iter: 40,
            sigma_sweep: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("solver.{name}"), "must be positive and finite"))
            }
        };
        pos("dt_initial", self.dt_initial)?;
        pos("dt_max", self.dt_max)?;
        pos("dt_min", self.dt_min)?;
        pos("production_budget", self.production_budget)?;
        pos("newton_tol", self.newton_tol)?;
        if !(self.entropy_floor >= 0.0) {
            return Err(Error::config("solver.entropy_floor", "must be nonnegative"));
        }
        if self.dt_min > self.dt_max {
            return Err(Error::config("solver.dt_min", "exceeds dt_max"));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::config("solver.newton_max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "every", rename_all = "snake_case")]
pub enum Cadence {
    EveryStep,
    Interval(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub sigma: f64,
    pub mass: f64,
    pub entropy: f64,
    /// Relative mismatch of the production identity over the step.
    pub mismatch: Option<f64>,
    pub newton_iterations: usize,
    pub rejected: u32,
    /// Off-diagonal entries of the converged Jacobian were all nonpositive.
    pub m_matrix: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub mode: Mode,
    pub initial_mass: f64,
    pub reports: Vec<EntropyReport>,
    pub steps: Vec<StepRecord>,
    #[serde(skip)]
    pub final_state: Option<SolutionState>,
}

/// Samples the datum, recentres it (when asked) and fixes `sigma(0)`.
pub fn init_state(
    params: &ModelParams,
    datum: &InitialDatum,
    grid: &Grid,
    mode: Mode,
    recentre: bool,
) -> Result<SolutionState> {
    datum.validate(grid)?;
    let mut u = datum.sample(params, grid, 0.0)?;
    let mut x0 = 0.0;
    if recentre {
        for _ in 0..3 {
            let shift = grid.first_moment(&u) / params.mass;
            if shift.abs() < 1e-15 {
                break;
            }
            x0 += shift;
            u = datum.sample(params, grid, x0)?;
        }
    }
    let sigma = match mode {
        Mode::Matched => sigma_update(params, grid, &u),
        Mode::SelfSimilar => 1.0,
    };
    Ok(SolutionState {
        grid: grid.clone(),
        u,
        t: 0.0,
        sigma,
        r_scale: 1.0,
        tau: 0.0,
        x0,
        mode,
        steps: 0,
        dt_next: 0.0,
    })
}

/// `sigma` with `sum r^2 B_sigma V = sum r^2 u V` for the grid equilibrium.
pub fn sigma_update(params: &ModelParams, grid: &Grid, u: &[f64]) -> f64 {
    DiscreteProfile::matching_second_moment(params, grid, grid.second_moment(u)).sigma
}

struct Newton {
    u: Vec<f64>,
    iterations: usize,
    m_matrix: bool,
}

/// Thomas algorithm; overwrites `rhs` with the solution.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> bool {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return false;
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return false;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    true
}

/// Backward Euler for the well-balanced flux
/// `J_f = sigma^p A_f ubar_f (pi_R - pi_L) / h_f`, `pi = u^{m-1} - sigma^{-p} r^2`,
/// solved by Newton in `z = ln u`.
fn implicit_solve(
    params: &ModelParams,
    grid: &Grid,
    u_old: &[f64],
    sigma: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<Newton> {
    let n = grid.len();
    let m = params.m;
    let sp = sigma.powf(params.p());
    let inv_sp = 1.0 / sp;
    let r2: Vec<f64> = grid.centers.iter().map(|r| r * r).collect();
    let kappa: Vec<f64> = (0..=n)
        .map(|f| {
            if f == 0 || f == n {
                0.0
            } else {
                sp * grid.face_areas[f] / grid.center_gap(f)
            }
        })
        .collect();

    let mut z: Vec<f64> = u_old.iter().map(|v| v.ln()).collect();
    let mut u = u_old.to_vec();
    let mut um1 = vec![0.0; n];
    let mut flux = vec![0.0; n + 1];
    let mut d_left = vec![0.0; n + 1];
    let mut d_right = vec![0.0; n + 1];
    let (mut sub, mut diag, mut sup, mut rhs) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    let divergence = || Error::NewtonDivergence { dt, halvings: 0 };
    for iteration in 1..=cfg.newton_max_iter {
        for i in 0..n {
            u[i] = z[i].exp();
            um1[i] = ((m - 1.0) * z[i]).exp();
        }
        let mut m_matrix = true;
        for f in 1..n {
            let (l, r) = (f - 1, f);
            let dpi = (um1[r] - um1[l]) - inv_sp * (r2[r] - r2[l]);
            let ubar = 0.5 * (u[l] + u[r]);
            flux[f] = kappa[f] * ubar * dpi;
            d_left[f] = kappa[f] * (0.5 * dpi - ubar * (m - 1.0) * um1[l] / u[l]);
            d_right[f] = kappa[f] * (0.5 * dpi + ubar * (m - 1.0) * um1[r] / u[r]);
            if d_right[f] > 0.0 || d_left[f] < 0.0 {
                m_matrix = false;
            }
        }
        for i in 0..n {
            let g = grid.volumes[i] * (u[i] - u_old[i]) + dt * (flux[i + 1] - flux[i]);
            rhs[i] = -g;
            sub[i] = if i > 0 { -dt * d_left[i] * u[i - 1] } else { 0.0 };
            sup[i] = if i + 1 < n { dt * d_right[i + 1] * u[i + 1] } else { 0.0 };
            diag[i] = (grid.volumes[i] + dt * (d_left[i + 1] - d_right[i])) * u[i];
        }
        if !solve_tridiagonal(&sub, &diag, &sup, &mut rhs) {
            return Err(divergence());
        }
        let largest = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !largest.is_finite() {
            return Err(divergence());
        }
        let scale = if largest > 1.0 { 1.0 / largest } else { 1.0 };
        for (zi, dz) in z.iter_mut().zip(&rhs) {
            *zi += scale * dz;
        }
        if largest < cfg.newton_tol {
            for i in 0..n {
                u[i] = z[i].exp();
                if !(u[i] > 0.0 && u[i].is_finite()) {
                    return Err(Error::PositivityLoss { cell: i });
                }
            }
            return Ok(Newton {
                u,
                iterations: iteration,
                m_matrix,
            });
        }
    }
    Err(divergence())
}

/// One backward-Euler step of size `dt` (halved on Newton failure), followed
/// by the `sigma` update in matched mode and the `t`, `R`, `tau` bookkeeping.
pub fn step(
    params: &ModelParams,
    state: &SolutionState,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(SolutionState, usize, bool)> {
    let mut dt = dt;
    let mut halvings = 0u32;
    loop {
        match try_step(params, state, dt, cfg) {
            Ok(out) => return Ok(out),
            Err(Error::NewtonDivergence { .. }) if halvings < 12 => {
                dt *= 0.5;
                halvings += 1;
            }
            Err(Error::NewtonDivergence { .. }) => {
                return Err(Error::NewtonDivergence { dt, halvings })
            }
            Err(e) => return Err(e),
        }
    }
}

fn try_step(
    params: &ModelParams,
    state: &SolutionState,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(SolutionState, usize, bool)> {
    let grid = &state.grid;
    let mut solved = implicit_solve(params, grid, &state.u, state.sigma, dt, cfg)?;
    let mut sigma = state.sigma;
    if state.mode == Mode::Matched {
        sigma = sigma_update(params, grid, &solved.u);
        if cfg.sigma_sweep {
            let again = implicit_solve(params, grid, &state.u, sigma, dt, cfg)?;
            solved.iterations += again.iterations;
            solved.u = again.u;
            solved.m_matrix &= again.m_matrix;
            sigma = sigma_update(params, grid, &solved.u);
        }
    }
    let q = params.q();
    let t = state.t + dt;
    let sp_mean = 0.5 * (state.sigma.powf(params.p()) + sigma.powf(params.p()));
    let tau = state.tau
        + sp_mean * ((2.0 * q * t).exp() - (2.0 * q * state.t).exp()) / (2.0 * q);
    let next = SolutionState {
        grid: grid.clone(),
        u: solved.u,
        t,
        sigma,
        r_scale: (2.0 * t).exp(),
        tau,
        x0: state.x0,
        mode: state.mode,
        steps: state.steps + 1,
        dt_next: state.dt_next,
    };
    Ok((next, solved.iterations, solved.m_matrix))
}

fn reference(params: &ModelParams, state: &SolutionState) -> DiscreteProfile {
    DiscreteProfile::new(params, &state.grid, state.sigma)
}

fn production_mismatch(
    params: &ModelParams,
    dt: f64,
    before: (f64, f64, f64),
    after: (f64, f64, f64),
) -> f64 {
    let m = params.m;
    let p = params.p();
    let (f0, i0, s0) = before;
    let (f1, i1, s1) = after;
    let rhs = m * (1.0 - m) * 0.5 * (s0.powf(p) * i0 + s1.powf(p) * i1);
    ((f1 - f0) / dt + rhs).abs() / rhs.max(f64::MIN_POSITIVE)
}

/// Integrates from a fresh datum.
#[allow(clippy::too_many_arguments)]
pub fn run(
    params: &ModelParams,
    datum: &InitialDatum,
    grid: &Grid,
    mode: Mode,
    recentre: bool,
    t_end: f64,
    cadence: Cadence,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let state = init_state(params, datum, grid, mode, recentre)?;
    run_from(params, state, t_end, cadence, cfg, &mut |_| Ok(()))
}

/// Integrates an existing state up to `t_end`. `on_step` sees every accepted
/// state, which is how checkpoints are taken.
pub fn run_from(
    params: &ModelParams,
    mut state: SolutionState,
    t_end: f64,
    cadence: Cadence,
    cfg: &SolverConfig,
    on_step: &mut dyn FnMut(&SolutionState) -> Result<()>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t_end > state.t) {
        return Err(Error::config("t_end", "must exceed the start time"));
    }
    if let Cadence::Interval(every) = cadence {
        if !(every > 0.0) {
            return Err(Error::config("output.every", "must be positive"));
        }
    }
    if state.dt_next <= 0.0 {
        state.dt_next = cfg.dt_initial;
    }
    let initial_mass = state.grid.integrate(&state.u);
    let mut reports = vec![EntropyReport::compute(params, &state)];
    let mut records = Vec::new();
    let mut profile = reference(params, &state);
    let (f, i) = entropy_and_fisher(params, &state.grid, &state.u, &profile);
    let mut current = (f, i, state.sigma);
    let mut next_output = match cadence {
        Cadence::Interval(every) => every * ((state.t / every + 1e-9).floor() + 1.0),
        Cadence::EveryStep => state.t,
    };

    while state.t < t_end * (1.0 - 1e-14) {
        let mut dt = if cfg.fixed_dt { cfg.dt_initial } else { state.dt_next };
        let clamped = state.t + dt > t_end;
        if clamped {
            dt = t_end - state.t;
        }
        let mut rejected = 0u32;
        let (next, iterations, m_matrix, after, mismatch, dt_used) = loop {
            let (next, iterations, m_matrix) = step(params, &state, dt, cfg)?;
            let dt_used = next.t - state.t;
            if state.mode == Mode::Matched {
                profile = reference(params, &next);
            }
            let (f1, i1) = entropy_and_fisher(params, &next.grid, &next.u, &profile);
            let after = (f1, i1, next.sigma);
            let controlled = current.0 > cfg.entropy_floor;
            let mismatch = controlled.then(|| production_mismatch(params, dt_used, current, after));
            match mismatch {
                Some(mm) if !cfg.fixed_dt && mm > cfg.production_budget && dt_used > cfg.dt_min => {
                    rejected += 1;
                    dt = (dt_used * (0.8 * cfg.production_budget / mm).max(0.25)).max(cfg.dt_min);
                }
                _ => break (next, iterations, m_matrix, after, mismatch, dt_used),
            }
        };
        let mut next = next;
        next.dt_next = if cfg.fixed_dt {
            cfg.dt_initial
        } else {
            let grow = match mismatch {
                Some(mm) if mm > 0.0 => (0.8 * cfg.production_budget / mm).clamp(0.5, 2.0),
                _ => 2.0,
            };
            let proposal = (dt_used * grow).min(cfg.dt_max);
            // a step shortened only to land on t_end keeps the previous proposal
            if clamped && rejected == 0 {
                proposal.max(state.dt_next)
            } else {
                proposal
            }
        };
        records.push(StepRecord {
            t: next.t,
            dt: dt_used,
            sigma: next.sigma,
            mass: next.grid.integrate(&next.u),
            entropy: after.0,
            mismatch,
            newton_iterations: iterations,
            rejected,
            m_matrix,
        });
        current = after;
        state = next;
        on_step(&state)?;
        let emit = match cadence {
            Cadence::EveryStep => true,
            Cadence::Interval(every) => {
                if state.t >= next_output * (1.0 - 1e-12) {
                    next_output = every * ((state.t / every + 1e-9).floor() + 1.0);
                    true
                } else {
                    false
                }
            }
        };
        if emit || state.t >= t_end * (1.0 - 1e-14) {
            reports.push(EntropyReport::compute(params, &state));
        }
    }
    Ok(Trajectory {
        params: *params,
        mode: state.mode,
        initial_mass,
        reports,
        steps: records,
        final_state: Some(state),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ModelParams, Grid) {
        (
            ModelParams::normalized(1, 0.7).unwrap(),
            Grid::full_line(512, 40.0).unwrap(),
        )
    }

    #[test]
    fn thomas_solves_small_system() {
        let sub = [0.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0];
        let sup = [1.0, 1.0, 0.0];
        let mut rhs = [5.0, 6.0, 5.0];
        assert!(solve_tridiagonal(&sub, &diag, &sup, &mut rhs));
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn init_matched_sigma() {
        let (p, g) = setup();
        let s = init_state(&p, &InitialDatum::Barenblatt { sigma0: 2.0 }, &g, Mode::Matched, true)
            .unwrap();
        assert!((s.sigma - 2.0).abs() < 1e-6);
        assert_eq!(s.r_scale, 1.0);
        let s = init_state(&p, &InitialDatum::Barenblatt { sigma0: 2.0 }, &g, Mode::SelfSimilar, true)
            .unwrap();
        assert_eq!(s.sigma, 1.0);
    }

    #[test]
    fn recentring_zeroes_center_of_mass() {
        let (p, g) = setup();
        let datum = InitialDatum::ShiftedBarenblatt {
            sigma0: 1.0,
            shift: 0.3,
        };
        let s = init_state(&p, &datum, &g, Mode::Matched, true).unwrap();
        assert!((s.x0 - 0.3).abs() < 1e-6);
        assert!(g.first_moment(&s.u).abs() < 1e-10);
        let raw = init_state(&p, &datum, &g, Mode::Matched, false).unwrap();
        assert!((g.first_moment(&raw.u) / p.mass - 0.3).abs() < 1e-6);
    }

    #[test]
    fn step_conserves_mass_and_keeps_equilibrium() {
        let (p, g) = setup();
        let s = init_state(&p, &InitialDatum::Barenblatt { sigma0: 1.0 }, &g, Mode::Matched, true)
            .unwrap();
        let prof = DiscreteProfile::new(&p, &g, s.sigma);
        let mut s = s;
        s.u = prof.values.clone();
        let (next, _, _) = step(&p, &s, 0.01, &SolverConfig::default()).unwrap();
        let m0 = g.integrate(&s.u);
        assert!((g.integrate(&next.u) - m0).abs() < 1e-12 * m0);
        for (a, b) in next.u.iter().zip(&s.u) {
            assert!((a - b).abs() < 1e-9 * b);
        }
        assert!((next.sigma - s.sigma).abs() < 1e-12);
        assert!((next.r_scale - (0.02f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn entropy_decreases_for_perturbed_datum() {
        let (p, g) = setup();
        let datum = InitialDatum::DilationPerturbed {
            sigma0: 1.0,
            eps: 0.2,
        };
        let s = init_state(&p, &datum, &g, Mode::Matched, true).unwrap();
        let prof = DiscreteProfile::new(&p, &g, s.sigma);
        let (f0, _) = entropy_and_fisher(&p, &g, &s.u, &prof);
        let (next, _, _) = step(&p, &s, 0.01, &SolverConfig::default()).unwrap();
        let prof = DiscreteProfile::new(&p, &g, next.sigma);
        let (f1, _) = entropy_and_fisher(&p, &g, &next.u, &prof);
        assert!(f1 < f0, "{f0} {f1} {} {}", s.sigma, next.sigma);
        assert!(next.sigma <= s.sigma * (1.0 + 1e-12));
    }
}
