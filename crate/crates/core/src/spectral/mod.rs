//! Spectrum of `L_{alpha,d} = -mu_{1-alpha} div(mu_alpha grad .)` on
//! `L^2(mu_{alpha-1})`, `mu_alpha = (1+|x|^2)^alpha`, together with the
//! sharp and improved Hardy-Poincare constants.
//!
//! In `d = 1` the two sectors are the even (`l = 0`) and odd (`l = 1`)
//! functions, and `lambda_{l k}` is the eigenvalue `lambda_n = n (1 - 2 alpha - n)`
//! with `n = l + 2k`.

mod gap;
mod rayleigh;

pub use gap::{
    gaussian_limit_check, scaled_gap_check, GapCheck, GaussianLimitReport, GaussianLimitRow,
};
pub use rayleigh::{
    constrained_gap, rayleigh_lowest, Constraint, RayleighConfig, RayleighProblem,
    RayleighResult,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{critical_exponents, Branch};

/// Closed-form `lambda_{l k}` and whether it belongs to the discrete spectrum.
pub fn eigenvalue(l: u32, k: u32, alpha: f64, d: usize) -> (f64, bool) {
    let (lf, kf) = (l as f64, k as f64);
    let dd = d as f64;
    let value = -2.0 * alpha * (lf + 2.0 * kf) - 4.0 * kf * (kf + lf + 0.5 * dd - 1.0);
    let valid = if (l, k) == (0, 0) || alpha >= 0.0 {
        false
    } else if d == 1 {
        l <= 1 && lf + 2.0 * kf <= 0.5 - alpha
    } else {
        lf + 2.0 * kf - 1.0 < -(dd + 2.0 * alpha) / 2.0
    };
    (value, valid)
}

/// `(alpha - alpha_*)^2`.
pub fn continuous_bottom(alpha: f64, d: usize) -> f64 {
    let a = if d == 1 {
        0.5
    } else {
        critical_exponents(d).alpha_star
    };
    (alpha - a).powi(2)
}

/// Bottom of the essential spectrum restricted to angular sector `l`.
pub fn sector_bottom(alpha: f64, d: usize, l: u32) -> f64 {
    let lf = l as f64;
    continuous_bottom(alpha, d) + lf * (lf + d as f64 - 2.0).max(0.0)
}

fn mode(l: u32, k: u32, d: usize) -> Branch {
    if d == 1 {
        Branch::Mode1d { k: l + 2 * k }
    } else {
        Branch::Mode { l, k }
    }
}

/// Sharp constant under the mass condition alone.
pub fn lambda_sharp(alpha: f64, d: usize) -> Result<(f64, Branch)> {
    let unsupported = Error::UnsupportedAlpha { alpha, d };
    if d == 0 {
        return Err(Error::InvalidDimension);
    }
    if !(alpha < 0.0) {
        return Err(unsupported);
    }
    let dd = d as f64;
    let cont = continuous_bottom(alpha, d);
    match d {
        1 => Ok(if alpha < -0.5 {
            (-2.0 * alpha, mode(1, 0, 1))
        } else {
            (cont, Branch::Continuum)
        }),
        2 => Ok(if alpha >= -2.0 {
            (alpha * alpha, Branch::Continuum)
        } else {
            (-2.0 * alpha, mode(1, 0, 2))
        }),
        _ => {
            if alpha == critical_exponents(d).alpha_star {
                Err(unsupported)
            } else if alpha >= -(dd + 2.0) / 2.0 {
                Ok((0.25 * (dd - 2.0 + 2.0 * alpha).powi(2), Branch::Continuum))
            } else if alpha >= -dd {
                Ok((-4.0 * alpha - 2.0 * dd, mode(0, 1, d)))
            } else {
                Ok((-2.0 * alpha, mode(1, 0, d)))
            }
        }
    }
}

/// Improved constant under vanishing mass, first and second moments.
pub fn lambda_improved(alpha: f64, d: usize) -> Result<(f64, Branch)> {
    if d == 0 {
        return Err(Error::InvalidDimension);
    }
    let dd = d as f64;
    let limit = match d {
        1 => -0.5,
        2 => -2.0,
        _ => -(dd + 2.0) / 2.0,
    };
    if !(alpha < limit) {
        return Err(Error::UnsupportedAlpha { alpha, d });
    }
    Ok(match d {
        1 => {
            if alpha >= -2.5 {
                ((alpha - 0.5).powi(2), Branch::Continuum)
            } else {
                (-6.0 * (alpha + 1.0), mode(1, 1, 1))
            }
        }
        2 => {
            if alpha >= -4.0 {
                (alpha * alpha, Branch::Continuum)
            } else {
                (-4.0 * alpha, mode(2, 0, 2))
            }
        }
        _ => {
            if alpha >= -(dd + 6.0) / 2.0 {
                (0.25 * (dd - 2.0 + 2.0 * alpha).powi(2), Branch::Continuum)
            } else if alpha >= -(dd + 2.0) {
                (-8.0 * alpha - 4.0 * (dd + 2.0), mode(0, 2, d))
            } else {
                (-4.0 * alpha, mode(2, 0, d))
            }
        }
    })
}

/// One row of a spectrum table.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEntry {
    pub l: u32,
    pub k: u32,
    pub lambda: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumTable {
    pub alpha: f64,
    pub d: usize,
    pub discrete: Vec<SpectrumEntry>,
    pub continuous_bottom: f64,
    pub lambda_sharp: Option<(f64, Branch)>,
    pub lambda_improved: Option<(f64, Branch)>,
}

impl SpectrumTable {
    /// Every `(l, k)` with `l <= l_max`, `k <= k_max` (`l <= 1` in `d = 1`).
    pub fn new(alpha: f64, d: usize, l_max: u32, k_max: u32) -> Self {
        let l_max = if d == 1 { l_max.min(1) } else { l_max };
        let mut discrete = Vec::new();
        for l in 0..=l_max {
            for k in 0..=k_max {
                let (lambda, valid) = eigenvalue(l, k, alpha, d);
                discrete.push(SpectrumEntry { l, k, lambda, valid });
            }
        }
        Self {
            alpha,
            d,
            discrete,
            continuous_bottom: continuous_bottom(alpha, d),
            lambda_sharp: lambda_sharp(alpha, d).ok(),
            lambda_improved: lambda_improved(alpha, d).ok(),
        }
    }

    /// Smallest valid eigenvalue outside `excluded`, or the continuous bottom.
    pub fn gap_excluding(&self, excluded: &[(u32, u32)]) -> f64 {
        self.discrete
            .iter()
            .filter(|e| e.valid && !excluded.contains(&(e.l, e.k)))
            .map(|e| e.lambda)
            .fold(self.continuous_bottom, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(eigenvalue(0, 1, -4.0, 5), (6.0, true));
        assert_eq!(eigenvalue(0, 0, -4.0, 5), (0.0, false));
        let (v, ok) = eigenvalue(0, 2, -4.0, 5);
        assert_eq!(v, 4.0);
        assert!(!ok);
    }

    #[test]
    fn one_dimensional_indexing() {
        let alpha = -10.0 / 3.0;
        let (v, ok) = eigenvalue(1, 1, alpha, 1);
        assert!((v - 14.0).abs() < 1e-12);
        assert!(ok);
        for n in 1..6u32 {
            let (v, _) = eigenvalue(n % 2, n / 2, alpha, 1);
            let nf = n as f64;
            assert!((v - nf * (1.0 - 2.0 * alpha - nf)).abs() < 1e-12);
        }
        assert!(!eigenvalue(2, 0, alpha, 1).1);
    }

    #[test]
    fn continuous_bottom_examples() {
        assert_eq!(continuous_bottom(-4.0, 5), 6.25);
        assert_eq!(continuous_bottom(-1.5, 5), 0.0);
        assert!((continuous_bottom(-10.0 / 3.0, 1) - 529.0 / 36.0).abs() < 1e-12);
    }

    #[test]
    fn sharp_examples() {
        assert_eq!(lambda_sharp(-4.0, 5).unwrap().0, 6.0);
        assert_eq!(lambda_sharp(-10.0, 5).unwrap().0, 20.0);
        assert_eq!(lambda_sharp(-3.0, 1).unwrap().0, 6.0);
        assert!(lambda_sharp(-1.5, 5).is_err());
        assert!(lambda_sharp(0.5, 2).is_err());
    }

    #[test]
    fn improved_examples() {
        assert_eq!(lambda_improved(-4.0, 5).unwrap(), (6.25, Branch::Continuum));
        assert_eq!(lambda_improved(-6.0, 5).unwrap().0, 20.0);
        assert!((lambda_improved(-10.0 / 3.0, 1).unwrap().0 - 14.0).abs() < 1e-12);
        assert_eq!(lambda_improved(-3.0, 2).unwrap().0, 9.0);
        assert!(lambda_improved(-3.0, 5).is_err());
    }

    #[test]
    fn table_gap_matches_closed_form_d5() {
        let t = SpectrumTable::new(-6.0, 5, 6, 6);
        let g = t.gap_excluding(&[(0, 0), (1, 0), (0, 1)]);
        assert_eq!(g, 20.0);
    }
}
