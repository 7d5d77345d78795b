//! Barenblatt profiles `B_sigma`, the self-similar comparator and the
//! grid-consistent discrete profile used by the solver and diagnostics.

use std::f64::consts::FRAC_PI_2;

use crate::dynamics::grid::{sphere_area, Grid};
use crate::error::{Error, Result};
use crate::exponents::{BarenblattConstants, ModelParams};

/// `B_sigma(x) = sigma^{-d/2} (C_M + |x|^2/sigma)^{1/(m-1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattProfile {
    pub params: ModelParams,
    pub constants: BarenblattConstants,
    pub sigma: f64,
}

impl BarenblattProfile {
    pub fn new(params: ModelParams, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be positive, got {sigma}"),
            });
        }
        Ok(Self {
            params,
            constants: params.constants(),
            sigma,
        })
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.params, sigma)
    }

    /// Value at radius `r = |x|`.
    pub fn evaluate(&self, r: f64) -> f64 {
        let d = self.params.dim();
        self.sigma.powf(-0.5 * d)
            * (self.constants.c_m + r * r / self.sigma).powf(self.params.alpha())
    }

    pub fn evaluate_point(&self, x: &[f64]) -> f64 {
        self.evaluate(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `B_sigma^{m-1}(r) = sigma^{d(1-m)/2} (C_M + r^2/sigma)`.
    pub fn pow_m1(&self, r: f64) -> f64 {
        let d = self.params.dim();
        let m = self.params.m;
        self.sigma.powf(0.5 * d * (1.0 - m)) * (self.constants.c_m + r * r / self.sigma)
    }

    /// Order 0 is the mass `M`, order 2 is `sigma K_M`.
    pub fn moment(&self, order: u32) -> Result<f64> {
        match order {
            0 => Ok(self.params.mass),
            2 => {
                let mt1 = self.params.exponents().m_tilde_1;
                if self.params.m <= mt1 {
                    Err(Error::DivergentSecondMoment {
                        m: self.params.m,
                        threshold: mt1,
                    })
                } else {
                    Ok(self.sigma * self.constants.k_m)
                }
            }
            _ => Err(Error::InvalidParameter {
                name: "order",
                reason: "only moments of order 0 and 2 are available".into(),
            }),
        }
    }

    /// Fraction of the mass outside the ball of radius `r`.
    pub fn tail_fraction(&self, r: f64) -> f64 {
        let z = r / (self.constants.c_m * self.sigma).sqrt();
        unit_tail_fraction(self.params.d, self.params.alpha(), z)
    }

    /// Smallest radius (to 1%) whose outside mass fraction is below `tol`.
    pub fn tail_radius(&self, tol: f64) -> f64 {
        let scale = (self.constants.c_m * self.sigma).sqrt();
        let frac = |z: f64| unit_tail_fraction(self.params.d, self.params.alpha(), z);
        let mut hi = 1.0;
        while frac(hi) > tol {
            hi *= 2.0;
        }
        let mut lo = hi / 2.0;
        while hi / lo > 1.01 {
            let mid = (lo * hi).sqrt();
            if frac(mid) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi * scale
    }
}

/// `int_{|z|>rho} (1+|z|^2)^alpha dz / int (1+|z|^2)^alpha dz`, via
/// `z = tan(theta)` and double-exponential quadrature.
pub fn unit_tail_fraction(d: usize, alpha: f64, rho: f64) -> f64 {
    let e = -2.0 * alpha - d as f64 - 1.0;
    let f = |t: f64| t.sin().powi(d as i32 - 1) * t.cos().powf(e);
    let lo = rho.atan();
    let tail = quadrature::integrate(f, lo, FRAC_PI_2, 1e-15).integral;
    let total = quadrature::integrate(f, 0.0, FRAC_PI_2, 1e-15).integral;
    (tail / total).max(0.0)
}

/// `M* = int (1+|x|^2)^{1/(m-1)} dx` by quadrature, independent of the
/// Gamma-function closed form.
pub fn m_star_quadrature(d: usize, m: f64) -> f64 {
    let alpha = 1.0 / (m - 1.0);
    let e = -2.0 * alpha - d as f64 - 1.0;
    let f = |t: f64| t.sin().powi(d as i32 - 1) * t.cos().powf(e);
    sphere_area(d) * quadrature::integrate(f, 0.0, FRAC_PI_2, 1e-15).integral
}

/// `B(tau, y) = (1+tau)^{-1/(m-m_c)} (D + (1+tau)^{-2/q} |y|^2 / (2q))^{-1/(1-m)}`
/// with `q = d(m - m_c)` and `D` fixed by the mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarComparator {
    pub params: ModelParams,
    pub d_const: f64,
}

impl SelfSimilarComparator {
    /// `D` from `||B(0, .)||_1 = M`:
    /// `M = (2q)^{d/2} D^{alpha + d/2} M*`.
    pub fn new(params: ModelParams) -> Self {
        let q = params.q();
        let d = params.dim();
        let base = params.mass / ((2.0 * q).powf(0.5 * d) * params.m_star());
        let d_const = base.powf(1.0 / (params.alpha() + 0.5 * d));
        Self { params, d_const }
    }

    pub fn evaluate(&self, tau: f64, r: f64) -> f64 {
        let q = self.params.q();
        let m = self.params.m;
        let mc = self.params.exponents().m_c;
        let s = 1.0 + tau;
        s.powf(-1.0 / (m - mc))
            * (self.d_const + s.powf(-2.0 / q) * r * r / (2.0 * q)).powf(-1.0 / (1.0 - m))
    }

    /// `R_0(tau) = (1 + 2 q tau)^{1/q}`.
    pub fn self_similar_scale(&self, tau: f64) -> f64 {
        let q = self.params.q();
        (1.0 + 2.0 * q * tau).powf(1.0 / q)
    }
}

/// Stationarity residual of an arbitrary density `u` (cell values) under
/// `div[u (sigma^p grad u^{m-1} - 2x)] = 0`, written as
/// `J = -((1-m)/m) sigma^p grad(u^m) - 2 x u` with face differences of `u^m`
/// and face-averaged `u`. Returns the grid `L^2` norm of the divergence.
pub fn flux_divergence_norm(params: &ModelParams, sigma: f64, grid: &Grid, u: &[f64]) -> f64 {
    let m = params.m;
    let sp = sigma.powf(params.p());
    let n = grid.len();
    let um: Vec<f64> = u.iter().map(|v| v.powf(m)).collect();
    let mut flux = vec![0.0; n + 1];
    for f in 1..n {
        let h = grid.center_gap(f);
        let grad = (um[f] - um[f - 1]) / h;
        let ubar = 0.5 * (u[f] + u[f - 1]);
        let xf = grid.faces[f];
        flux[f] = grid.face_areas[f] * (-(1.0 - m) / m * sp * grad - 2.0 * xf * ubar);
    }
    let sum: f64 = (0..n)
        .map(|i| {
            let div = (flux[i + 1] - flux[i]) / grid.volumes[i];
            div * div * grid.volumes[i]
        })
        .sum();
    sum.sqrt()
}

pub fn stationarity_residual(profile: &BarenblattProfile, grid: &Grid) -> f64 {
    let u: Vec<f64> = grid.centers.iter().map(|&r| profile.evaluate(r.abs())).collect();
    flux_divergence_norm(&profile.params, profile.sigma, grid, &u)
}

/// Exact discrete equilibrium of the well-balanced scheme:
/// `B^{m-1} = a + sigma^{-p} r^2` at cell centers, with `a` fixed so the
/// grid mass equals `M`. Agrees with [`BarenblattProfile`] up to the grid
/// quadrature error of the mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProfile {
    pub sigma: f64,
    pub offset: f64,
    pub values: Vec<f64>,
    /// `B^{m-1}` per cell.
    pub pow_m1: Vec<f64>,
}

impl DiscreteProfile {
    pub fn new(params: &ModelParams, grid: &Grid, sigma: f64) -> Self {
        let m = params.m;
        let alpha = params.alpha();
        let c = sigma.powf(-params.p());
        let r2: Vec<f64> = grid.centers.iter().map(|r| r * r).collect();
        let mut a = sigma.powf(0.5 * params.dim() * (1.0 - m)) * params.constants().c_m;
        for _ in 0..60 {
            let (mut g, mut dg) = (-params.mass, 0.0);
            for (x2, v) in r2.iter().zip(&grid.volumes) {
                let base = a + c * x2;
                let b = base.powf(alpha);
                g += v * b;
                dg += v * alpha * b / base;
            }
            let step = g / dg;
            // keep a > 0
            let next = if a - step > 0.0 { a - step } else { 0.5 * a };
            let done = ((next - a) / a).abs() < 1e-15;
            a = next;
            if done {
                break;
            }
        }
        let pow_m1: Vec<f64> = r2.iter().map(|x2| a + c * x2).collect();
        let values = pow_m1.iter().map(|b| b.powf(alpha)).collect();
        Self {
            sigma,
            offset: a,
            values,
            pow_m1,
        }
    }

    /// Profile whose grid second moment equals `m2`.
    pub fn matching_second_moment(params: &ModelParams, grid: &Grid, m2: f64) -> Self {
        let k_m = params.constants().k_m;
        let mut sigma = m2 / k_m;
        let mut prof = Self::new(params, grid, sigma);
        for _ in 0..60 {
            let have = grid.second_moment(&prof.values);
            let next = sigma * m2 / have;
            let done = ((next - sigma) / sigma).abs() < 1e-15;
            sigma = next;
            prof = Self::new(params, grid, sigma);
            if done {
                break;
            }
        }
        prof
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d1() -> ModelParams {
        ModelParams::normalized(1, 0.7).unwrap()
    }

    #[test]
    fn origin_value() {
        let p = ModelParams::new(3, 0.8, 2.0).unwrap();
        let b = BarenblattProfile::new(p, 1.0).unwrap();
        let want = p.constants().c_m.powf(1.0 / (0.8 - 1.0));
        assert!((b.evaluate(0.0) - want).abs() < 1e-14 * want);
    }

    #[test]
    fn plugin_at_unit_radius() {
        let b = BarenblattProfile::new(d1(), 1.0).unwrap();
        assert!((b.evaluate(1.0) - 2f64.powf(-10.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn scaling_identity() {
        let p = ModelParams::new(4, 0.8, 1.3).unwrap();
        let b1 = BarenblattProfile::new(p, 1.0).unwrap();
        for &(sigma, r) in &[(0.3, 0.7), (2.5, 3.1), (7.0, 0.01)] {
            let bs = b1.with_sigma(sigma).unwrap();
            let lhs = bs.evaluate(r);
            let rhs = sigma.powf(-2.0) * b1.evaluate(r / sigma.sqrt());
            assert!(((lhs - rhs) / rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn moments() {
        let b = BarenblattProfile::new(d1(), 2.0).unwrap();
        assert_eq!(b.moment(0).unwrap(), b.params.mass);
        assert!((b.moment(2).unwrap() - 2.0 * b.constants.k_m).abs() < 1e-14);
        let k = b.constants.k_m / b.params.mass;
        assert!((k - 0.3 / 3.0 / (0.7 - 1.0 / 3.0)).abs() < 1e-14);
        assert!(b.moment(1).is_err());
    }

    #[test]
    fn tail_radius_bounds_mass() {
        let b = BarenblattProfile::new(d1(), 1.0).unwrap();
        let l = b.tail_radius(1e-10);
        assert!(b.tail_fraction(l) <= 1e-10);
        assert!(b.tail_fraction(l / 1.05) > 1e-10);
    }

    #[test]
    fn discrete_profile_conserves_mass() {
        let p = ModelParams::new(5, 0.75, 1.0).unwrap();
        let g = Grid::radial(5, 400, 2000.0, 1.0).unwrap();
        let dp = DiscreteProfile::new(&p, &g, 1.7);
        assert!((g.integrate(&dp.values) - 1.0).abs() < 1e-13);
        let dm = DiscreteProfile::matching_second_moment(&p, &g, 3.0);
        assert!((g.second_moment(&dm.values) - 3.0).abs() < 1e-12);
    }
}
