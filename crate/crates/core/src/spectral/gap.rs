use serde::Serialize;

use super::rayleigh::{constrained_gap, Constraint, RayleighConfig};
use super::{eigenvalue, lambda_improved};
use crate::barenblatt::BarenblattProfile;
use crate::dynamics::Grid;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCheck {
    /// `Lambda int f^2 B^{2-m}`.
    pub lhs: f64,
    /// `sigma^p int |grad f|^2 B`.
    pub rhs: f64,
    pub lambda: f64,
    pub holds: bool,
}

impl GapCheck {
    pub fn ratio(&self) -> f64 {
        self.rhs / self.lhs
    }

    pub fn holds_within(&self, slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + slack)
    }
}

/// `Lambda int f^2 B_sigma^{2-m} <= sigma^p int |grad f|^2 B_sigma` on the
/// grid, with `Lambda = lambda_improved(1/(m-1), d)`.
pub fn scaled_gap_check(profile: &BarenblattProfile, grid: &Grid, f: &[f64]) -> Result<GapCheck> {
    let params = &profile.params;
    let m = params.m;
    let (lambda, _) = lambda_improved(params.alpha(), params.d)?;
    let b: Vec<f64> = grid.centers.iter().map(|x| profile.evaluate(x.abs())).collect();
    let f_norm = grid.integrate_with(|i| f[i] * f[i] * b[i].powf(2.0 - m));
    let grad: f64 = (1..grid.len())
        .map(|k| {
            let df = f[k] - f[k - 1];
            grid.face_areas[k] / grid.center_gap(k) * 0.5 * (b[k] + b[k - 1]) * df * df
        })
        .sum();
    let lhs = lambda * f_norm;
    let rhs = profile.sigma.powf(params.p()) * grad;
    Ok(GapCheck {
        lhs,
        rhs,
        lambda,
        holds: lhs <= rhs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianLimitRow {
    pub d: usize,
    pub m: f64,
    /// `(1-m) lambda_01`; tends to 4.
    pub scaled_lambda01: f64,
    /// `(1-m) lambda_20`; equal to 4.
    pub scaled_lambda20: f64,
    /// `(1-m)/2` times the discretized constrained gap; the constrained
    /// Gaussian Poincare constant in the limit.
    pub scaled_gap: f64,
    pub gaussian_target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianLimitReport {
    pub rows: Vec<GaussianLimitRow>,
    pub tolerance: f64,
    pub passed: bool,
}

/// With `1/sigma = 2(1-m)`, the scaled inequality tends to
/// `2 int f^2 dgamma <= int |grad f|^2 dgamma` for `d >= 2` (the `l = 2`
/// quadratics are not removed by the constraints) and to `3` in `d = 1`.
pub fn gaussian_limit_check(d: usize, tolerance: f64, config: &RayleighConfig) -> Result<GaussianLimitReport> {
    let constraints = [Constraint::Mass, Constraint::FirstMoment, Constraint::SecondMoment];
    let target = if d == 1 { 3.0 } else { 2.0 };
    let mut rows = Vec::new();
    let mut passed = true;
    for &m in &[0.99, 0.999] {
        let alpha = 1.0 / (m - 1.0);
        let (gap, _) = constrained_gap(alpha, d, &constraints, 2, config)?;
        let (l01, _) = eigenvalue(0, 1, alpha, d);
        let (l20, _) = eigenvalue(2, 0, alpha, d);
        let row = GaussianLimitRow {
            d,
            m,
            scaled_lambda01: (1.0 - m) * l01,
            scaled_lambda20: (1.0 - m) * l20,
            scaled_gap: 0.5 * (1.0 - m) * gap,
            gaussian_target: target,
        };
        if m == 0.999 {
            passed &= ((row.scaled_gap - target) / target).abs() <= tolerance;
            passed &= ((row.scaled_lambda01 - 4.0) / 4.0).abs() <= tolerance;
            if d >= 2 {
                passed &= (row.scaled_lambda20 - 4.0).abs() <= 1e-9;
            }
        }
        rows.push(row);
    }
    Ok(GaussianLimitReport {
        rows,
        tolerance,
        passed,
    })
}
