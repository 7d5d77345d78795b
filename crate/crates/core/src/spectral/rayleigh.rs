//! Discretized, constrained Rayleigh-quotient minimization per angular sector.
//!
//! The radial quadratic forms
//!
//! ```text
//! a(g) = int |g'|^2 mu_alpha r^{d-1} dr + l(l+d-2) int g^2 mu_alpha r^{d-3} dr
//! b(g) = int g^2 mu_{alpha-1} r^{d-1} dr
//! ```
//!
//! are discretized with three-point differences on a uniform mesh in `s`,
//! where `r = a sinh(s)` (nearly uniform near the origin, geometric far out).
//! Natural boundary at `r = 0` for the even sector, Dirichlet otherwise and
//! at the truncation radius. The pencil is symmetrized with the lumped mass
//! and the lowest eigenvalue of its compression onto the orthogonal
//! complement of the constraint vectors is found by Lanczos on the shifted
//! inverse. All weights are assembled in log space.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{continuous_bottom, sector_bottom};
use crate::error::{Error, Result};

/// Orthogonality conditions in `L^2(mu_{alpha-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Constraint {
    /// `int f dmu_{alpha-1} = 0`; acts on `l = 0`.
    Mass,
    /// `int x f dmu_{alpha-1} = 0`; acts on `l = 1`.
    FirstMoment,
    /// `int |x|^2 f dmu_{alpha-1} = 0`; acts on `l = 0`.
    SecondMoment,
}

impl Constraint {
    fn sector(self) -> u32 {
        match self {
            Constraint::Mass | Constraint::SecondMoment => 0,
            Constraint::FirstMoment => 1,
        }
    }

    fn power(self) -> i32 {
        match self {
            Constraint::Mass => 0,
            Constraint::FirstMoment => 1,
            Constraint::SecondMoment => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RayleighProblem {
    pub alpha: f64,
    pub d: usize,
    pub l: u32,
    pub constraints: Vec<Constraint>,
}

impl RayleighProblem {
    pub fn new(alpha: f64, d: usize, l: u32, constraints: &[Constraint]) -> Result<Self> {
        if !(alpha < 0.0) {
            return Err(Error::UnsupportedAlpha { alpha, d });
        }
        if d == 0 {
            return Err(Error::InvalidDimension);
        }
        if d == 1 && l > 1 {
            return Err(Error::InvalidParameter {
                name: "l",
                reason: "d = 1 has only the even (0) and odd (1) sectors".into(),
            });
        }
        Ok(Self {
            alpha,
            d,
            l,
            constraints: constraints.to_vec(),
        })
    }

    fn active_constraints(&self) -> Vec<Constraint> {
        let mut v: Vec<Constraint> = self
            .constraints
            .iter()
            .copied()
            .filter(|c| c.sector() == self.l)
            .collect();
        v.dedup();
        v
    }

    pub fn sector_bottom(&self) -> f64 {
        sector_bottom(self.alpha, self.d, self.l)
    }

    fn mesh_scale(&self) -> f64 {
        2.0 / (1.0 + self.alpha.abs()).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RayleighConfig {
    pub nodes: usize,
    /// First truncation radius; doubled until the eigenvalue settles.
    pub initial_radius: f64,
    /// Relative movement under doubling that ends the loop.
    pub radius_tol: f64,
    pub max_doublings: u32,
    pub lanczos_steps: usize,
    /// Relative separation from the sector bottom required to certify.
    pub separation: f64,
}

impl Default for RayleighConfig {
    fn default() -> Self {
        Self {
            nodes: 4000,
            initial_radius: 1e8,
            radius_tol: 1e-3,
            max_doublings: 40,
            lanczos_steps: 300,
            separation: 2e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RayleighResult {
    pub value: f64,
    pub sector_bottom: f64,
    pub radius: f64,
    pub nodes: usize,
    /// Relative change at the last radius doubling.
    pub movement: f64,
    /// Separated from the sector bottom.
    pub certified: bool,
    /// At or above the bottom of the full continuous spectrum.
    pub embedded: bool,
}

impl RayleighResult {
    pub fn require_discrete(&self) -> Result<f64> {
        if self.certified {
            Ok(self.value)
        } else {
            Err(Error::NoDiscreteEigenvalue {
                value: self.value,
                bottom: self.sector_bottom,
            })
        }
    }
}

/// Sector pencil `C y = lambda y` after symmetrization, plus constraint
/// vectors already mapped to `y = W^{1/2} g`.
struct SectorPencil {
    diag: Vec<f64>,
    off: Vec<f64>,
    constraints: Vec<Vec<f64>>,
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// `log int_lo^hi exp(f(s)) ds` by 4-point Gauss on one panel.
fn log_integral(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let vals: Vec<(f64, f64)> = GAUSS4
        .iter()
        .map(|&(x, w)| (f(mid + half * x), w))
        .collect();
    let peak = vals.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = vals.iter().map(|&(v, w)| w * (v - peak).exp()).sum();
    peak + (sum * half).ln()
}

fn assemble(problem: &RayleighProblem, radius: f64, nodes: usize) -> SectorPencil {
    let a = problem.mesh_scale();
    let d = problem.d as f64;
    let alpha = problem.alpha;
    let l = problem.l as f64;
    let s_max = (radius / a).asinh();
    let ds = s_max / nodes as f64;

    let r_of = |s: f64| a * s.sinh();
    let ln_mu = |r: f64, pow: f64| pow * (r * r).ln_1p();
    // ln of mu_alpha r^{d-1} / r_s
    let ln_p = |s: f64| {
        let r = r_of(s);
        ln_mu(r, alpha) + (d - 1.0) * r.ln() - (a * s.cosh()).ln()
    };
    // ln of mu_{alpha-1} r^{d-1} r_s
    let ln_q = |s: f64| {
        let r = r_of(s);
        ln_mu(r, alpha - 1.0) + (d - 1.0) * r.ln() + (a * s.cosh()).ln()
    };
    // ln of mu_alpha r^{d-3} r_s
    let ln_v = |s: f64| {
        let r = r_of(s);
        ln_mu(r, alpha) + (d - 3.0) * r.ln() + (a * s.cosh()).ln()
    };

    let even = problem.l == 0;
    let first = if even { 0 } else { 1 };
    // unknowns j = first..nodes-1 (node `nodes` is Dirichlet)
    let idx: Vec<usize> = (first..nodes).collect();
    let n = idx.len();
    let angular = l * (l + d - 2.0);

    let ln_w: Vec<f64> = idx
        .iter()
        .map(|&j| {
            let lo = ((j as f64) - 0.5).max(0.0) * ds;
            let hi = (j as f64 + 0.5) * ds;
            log_integral(lo, hi, ln_q)
        })
        .collect();
    // face j+1/2 between node j and j+1, coefficient integral / ds^2
    let ln_face = |j: usize| log_integral(j as f64 * ds, (j + 1) as f64 * ds, ln_p) - 2.0 * ds.ln();

    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (i, &j) in idx.iter().enumerate() {
        let mut acc = (ln_face(j) - ln_w[i]).exp();
        if j > 0 {
            acc += (ln_face(j - 1) - ln_w[i]).exp();
        }
        if angular > 0.0 {
            let lo = (j as f64 - 0.5) * ds;
            let hi = (j as f64 + 0.5) * ds;
            acc += angular * (log_integral(lo, hi, ln_v) - ln_w[i]).exp();
        }
        diag[i] = acc;
        if i + 1 < n {
            off[i] = -(ln_face(j) - 0.5 * (ln_w[i] + ln_w[i + 1])).exp();
        }
    }

    let constraints = problem
        .active_constraints()
        .into_iter()
        .map(|c| {
            let pw = c.power() as f64;
            idx.iter()
                .zip(&ln_w)
                .map(|(&j, &lw)| {
                    let r = r_of(j as f64 * ds);
                    if pw == 0.0 {
                        (0.5 * lw).exp()
                    } else if r == 0.0 {
                        0.0
                    } else {
                        (0.5 * lw + pw * r.ln()).exp()
                    }
                })
                .collect()
        })
        .collect();

    SectorPencil {
        diag,
        off,
        constraints,
    }
}

/// Thomas solve of `(T + shift I) x = rhs` for an SPD tridiagonal `T`.
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag[0] + shift;
    c[0] = if n > 1 { off[0] / denom } else { 0.0 };
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] + shift - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / denom;
        }
        x[i] = (rhs[i] - off[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Orthonormal basis of the constraint span.
fn orthonormalize(vecs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vecs {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let nrm = dot(&w, &w).sqrt();
        if nrm > 0.0 {
            w.iter_mut().for_each(|x| *x /= nrm);
            basis.push(w);
        }
    }
    basis
}

fn project(y: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(y, b);
        axpy(y, -c, b);
    }
}

const SHIFT: f64 = 1.0;

/// Largest Ritz value of the Lanczos matrix and its residual bound.
fn ritz_top(alphas: &[f64], betas: &[f64], b: f64) -> (f64, f64) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (imax, &top) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    (top, b * eig.eigenvectors[(m - 1, imax)].abs())
}

/// Lowest eigenvalue of the compressed pencil.
fn lowest_compressed(p: &SectorPencil, steps: usize) -> f64 {
    let n = p.diag.len();
    let basis = orthonormalize(&p.constraints);
    let k = basis.len();
    // (C + s)^{-1} V and the Schur complement G = V^T (C + s)^{-1} V
    let zv: Vec<Vec<f64>> = basis
        .iter()
        .map(|v| solve_shifted(&p.diag, &p.off, SHIFT, v))
        .collect();
    let g = DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &zv[j]));
    let g_inv = g.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(k, k));

    let apply = |y: &[f64]| -> Vec<f64> {
        let mut z = solve_shifted(&p.diag, &p.off, SHIFT, y);
        if k > 0 {
            let rhs: Vec<f64> = basis.iter().map(|v| dot(v, &z)).collect();
            for i in 0..k {
                let mu: f64 = (0..k).map(|j| g_inv[(i, j)] * rhs[j]).sum();
                axpy(&mut z, -mu, &zv[i]);
            }
            project(&mut z, &basis);
        }
        z
    };

    // deterministic, non-smooth start vector
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut q: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    project(&mut q, &basis);
    let nrm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= nrm);

    let steps = steps.min(n.saturating_sub(k)).max(1);
    let mut vs: Vec<Vec<f64>> = vec![q];
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    let mut theta_prev = f64::NAN;
    let mut theta = 0.0;
    for it in 0..steps {
        let mut w = apply(&vs[it]);
        let a = dot(&w, &vs[it]);
        alphas.push(a);
        axpy(&mut w, -a, &vs[it]);
        if it > 0 {
            axpy(&mut w, -betas[it - 1], &vs[it - 1]);
        }
        for _ in 0..2 {
            for v in &vs {
                let c = dot(&w, v);
                axpy(&mut w, -c, v);
            }
        }
        project(&mut w, &basis);
        let b = dot(&w, &w).sqrt();

        let last = it + 1 == steps || b < 1e-300;
        if (it + 1) % 10 == 0 || last {
            let (top, resid) = ritz_top(&alphas, &betas, b);
            theta = top;
            if last
                || resid < 1e-12 * theta.abs()
                || (theta - theta_prev).abs() < 1e-15 * theta
            {
                break;
            }
            theta_prev = theta;
        }
        if b < 1e-300 {
            break;
        }
        betas.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        vs.push(w);
    }
    1.0 / theta - SHIFT
}

/// Lowest constrained Rayleigh quotient in one sector, at a fixed radius.
pub fn rayleigh_at(problem: &RayleighProblem, radius: f64, nodes: usize, steps: usize) -> f64 {
    let pencil = assemble(problem, radius, nodes);
    lowest_compressed(&pencil, steps)
}

/// Lowest constrained Rayleigh quotient with the truncation radius doubled
/// until the value moves by less than `config.radius_tol`.
pub fn rayleigh_lowest(problem: &RayleighProblem, config: &RayleighConfig) -> RayleighResult {
    let mut radius = config.initial_radius;
    let mut value = rayleigh_at(problem, radius, config.nodes, config.lanczos_steps);
    let mut movement = f64::INFINITY;
    for _ in 0..config.max_doublings {
        let next = rayleigh_at(problem, 2.0 * radius, config.nodes, config.lanczos_steps);
        movement = ((next - value) / next).abs();
        radius *= 2.0;
        value = next;
        if movement < config.radius_tol {
            break;
        }
    }
    let bottom = problem.sector_bottom();
    RayleighResult {
        value,
        sector_bottom: bottom,
        radius,
        nodes: config.nodes,
        movement,
        certified: value < bottom * (1.0 - config.separation),
        embedded: value >= continuous_bottom(problem.alpha, problem.d),
    }
}

/// Constrained gap over all sectors up to `l_max`, with the constraints
/// applied to the sectors they act on.
pub fn constrained_gap(
    alpha: f64,
    d: usize,
    constraints: &[Constraint],
    l_max: u32,
    config: &RayleighConfig,
) -> Result<(f64, Vec<RayleighResult>)> {
    let l_max = if d == 1 { l_max.min(1) } else { l_max };
    let mut results = Vec::new();
    for l in 0..=l_max {
        let problem = RayleighProblem::new(alpha, d, l, constraints)?;
        results.push(rayleigh_lowest(&problem, config));
    }
    let best = results
        .iter()
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    Ok((best, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigenvalue;

    fn quick() -> RayleighConfig {
        RayleighConfig {
            nodes: 1500,
            ..RayleighConfig::default()
        }
    }

    #[test]
    fn thomas_matches_dense() {
        let diag = vec![4.0, 5.0, 6.0, 3.0];
        let off = vec![-1.0, -2.0, -0.5];
        let rhs = vec![1.0, 2.0, 3.0, 4.0];
        let x = solve_shifted(&diag, &off, 1.0, &rhs);
        for i in 0..4 {
            let mut r = (diag[i] + 1.0) * x[i];
            if i > 0 {
                r += off[i - 1] * x[i - 1];
            }
            if i < 3 {
                r += off[i] * x[i + 1];
            }
            assert!((r - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_constrained_d5_alpha_m8() {
        // lambda_01 = 22 is far below the sector bottom 42.25
        let p = RayleighProblem::new(-8.0, 5, 0, &[Constraint::Mass]).unwrap();
        let r = rayleigh_lowest(&p, &quick());
        let (want, _) = eigenvalue(0, 1, -8.0, 5);
        assert!(((r.value - want) / want).abs() < 1e-3, "{r:?}");
        assert!(r.certified);
    }

    #[test]
    fn first_moment_only_acts_on_odd_sector() {
        let p = RayleighProblem::new(-8.0, 5, 0, &[Constraint::FirstMoment]).unwrap();
        assert!(p.active_constraints().is_empty());
    }

    #[test]
    fn inapplicable_sector() {
        assert!(RayleighProblem::new(-3.0, 1, 2, &[]).is_err());
        assert!(RayleighProblem::new(0.5, 3, 0, &[]).is_err());
    }

    #[test]
    fn uncertified_reports_error() {
        let r = RayleighResult {
            value: 6.26,
            sector_bottom: 6.25,
            radius: 1.0,
            nodes: 10,
            movement: 0.0,
            certified: false,
            embedded: true,
        };
        assert!(matches!(
            r.require_discrete(),
            Err(Error::NoDiscreteEigenvalue { .. })
        ));
    }
}
