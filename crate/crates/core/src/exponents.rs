//! Problem instance, critical exponents and closed-form rate tables.
//!
//! Rates are stored in the entropy convention: `gamma` is the exponent of
//! `R(tau)` in `R^gamma E(tau)`. Since `t = log(R) / 2`, the corresponding
//! decay rate of `log F` in rescaled time `t` is `2 * gamma`; see
//! [`t_rate_from_gamma`].

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral;

/// Distance kept from the endpoints `m~1` and `1`.
pub const ENDPOINT_MARGIN: f64 = 1e-6;

/// Which closed-form piece a rate or constant was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Bottom of the continuous spectrum.
    Continuum,
    /// Discrete eigenvalue `lambda_{l k}` (d >= 2).
    Mode { l: u32, k: u32 },
    /// Discrete eigenvalue `lambda_k` (d = 1).
    Mode1d { k: u32 },
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Continuum => write!(f, "continuum"),
            Branch::Mode { l, k } => write!(f, "lambda_{l}{k}"),
            Branch::Mode1d { k } => write!(f, "lambda_{k}"),
        }
    }
}

/// `(d, m, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub m: f64,
    pub mass: f64,
}

impl ModelParams {
    pub fn new(d: usize, m: f64, mass: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension);
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mass",
                reason: format!("must be positive and finite, got {mass}"),
            });
        }
        let ex = critical_exponents(d);
        let lo = ex.m_tilde_1;
        if !(m.is_finite() && m > lo + ENDPOINT_MARGIN && m < 1.0 - ENDPOINT_MARGIN) {
            if m.is_finite() && m <= lo && m < 1.0 {
                return Err(Error::DivergentSecondMoment { m, threshold: lo });
            }
            return Err(Error::UnsupportedExponent { d, m, lo, hi: 1.0 });
        }
        Ok(Self { d, m, mass })
    }

    /// Parameters with `M = M*`, so that `C_M = 1`.
    pub fn normalized(d: usize, m: f64) -> Result<Self> {
        let p = Self::new(d, m, 1.0)?;
        Ok(Self {
            mass: p.m_star(),
            ..p
        })
    }

    pub fn exponents(&self) -> CriticalExponents {
        critical_exponents(self.d).bind(self.m)
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    /// `alpha = 1/(m-1)`.
    pub fn alpha(&self) -> f64 {
        1.0 / (self.m - 1.0)
    }

    /// `q = d (m - m_c)`, so that `sigma^p` has `p = q/2`.
    pub fn q(&self) -> f64 {
        self.dim() * self.m - self.dim() + 2.0
    }

    /// Exponent of `sigma` in the rescaled diffusion coefficient.
    pub fn p(&self) -> f64 {
        0.5 * self.q()
    }

    pub fn m_star(&self) -> f64 {
        let d = self.dim();
        let m = self.m;
        PI.powf(0.5 * d) * gamma(self.q() / (2.0 * (1.0 - m))) / gamma(1.0 / (1.0 - m))
    }

    pub fn constants(&self) -> BarenblattConstants {
        barenblatt_constants(self)
    }
}

/// `m_c, m_1, m~1, m_2, m~2, alpha_*` for a dimension, plus `alpha` and `p`
/// once bound to an exponent `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalExponents {
    pub d: usize,
    pub m_c: f64,
    pub m_1: f64,
    pub m_tilde_1: f64,
    pub m_2: f64,
    pub m_tilde_2: f64,
    pub alpha_star: f64,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
}

impl CriticalExponents {
    pub fn bind(mut self, m: f64) -> Self {
        let d = self.d as f64;
        self.alpha = Some(1.0 / (m - 1.0));
        self.p = Some(0.5 * d * (m - self.m_c));
        self
    }
}

pub fn critical_exponents(d: usize) -> CriticalExponents {
    let dd = d as f64;
    CriticalExponents {
        d,
        m_c: (dd - 2.0) / dd,
        m_1: (dd - 1.0) / dd,
        m_tilde_1: dd / (dd + 2.0),
        m_2: (dd + 1.0) / (dd + 2.0),
        m_tilde_2: (dd + 4.0) / (dd + 6.0),
        alpha_star: -(dd - 2.0) / 2.0,
        alpha: None,
        p: None,
    }
}

fn check_range(d: usize, m: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension);
    }
    let lo = critical_exponents(d).m_tilde_1;
    if m.is_finite() && m > lo && m < 1.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent { d, m, lo, hi: 1.0 })
    }
}

/// Improved exponent `gamma(m)` for moment-matched rescaling, as a
/// piecewise closed form in `m`.
pub fn gamma_improved(d: usize, m: f64) -> Result<(f64, Branch)> {
    check_range(d, m)?;
    let ex = critical_exponents(d);
    if d == 1 {
        return Ok(if m <= 0.6 {
            ((3.0 - m).powi(2) / (4.0 * (1.0 - m)), Branch::Continuum)
        } else {
            (6.0 * m, Branch::Mode1d { k: 3 })
        });
    }
    let dd = d as f64;
    Ok(if m <= ex.m_tilde_2 {
        (
            ((dd - 2.0) * m - (dd - 4.0)).powi(2) / (4.0 * (1.0 - m)),
            Branch::Continuum,
        )
    } else if m <= ex.m_2 {
        (4.0 * (dd + 2.0) * m - 4.0 * dd, Branch::Mode { l: 0, k: 2 })
    } else {
        (4.0, Branch::Mode { l: 2, k: 0 })
    })
}

/// Exponent obtained without any moment or centring condition.
pub fn gamma_baseline(d: usize, m: f64) -> Result<(f64, Branch)> {
    if d < 2 {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: "the baseline table is stated for d >= 2".into(),
        });
    }
    check_range(d, m)?;
    let ex = critical_exponents(d);
    let dd = d as f64;
    Ok(if m <= ex.m_1 {
        (2.0 * dd * m - 2.0 * (dd - 2.0), Branch::Mode { l: 0, k: 1 })
    } else {
        (2.0, Branch::Mode { l: 1, k: 0 })
    })
}

/// `gamma` to log-F slope in rescaled time.
pub fn t_rate_from_gamma(gamma: f64) -> f64 {
    2.0 * gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarenblattConstants {
    pub m_star: f64,
    pub c_m: f64,
    pub k_m: f64,
}

pub fn barenblatt_constants(params: &ModelParams) -> BarenblattConstants {
    let m = params.m;
    let m_star = params.m_star();
    let c_m = (params.mass / m_star).powf(-2.0 * (1.0 - m) / params.q());
    let mt1 = critical_exponents(params.d).m_tilde_1;
    let k_m = (1.0 - m) * mt1 / (m - mt1) * params.mass * c_m;
    BarenblattConstants { m_star, c_m, k_m }
}

/// Closed-form rates for one `(d, m)`.
#[derive(Debug, Clone, Serialize)]
pub struct RateTable {
    pub d: usize,
    pub m: f64,
    pub gamma_improved: f64,
    pub gamma_improved_branch: Branch,
    /// Not defined for `d = 1`.
    pub gamma_baseline: Option<f64>,
    pub gamma_baseline_branch: Option<Branch>,
    pub lambda_improved: f64,
    pub lambda_improved_branch: Branch,
    pub lambda_sharp: f64,
    pub lambda_sharp_branch: Branch,
}

impl RateTable {
    pub fn new(d: usize, m: f64) -> Result<Self> {
        let (gi, gib) = gamma_improved(d, m)?;
        let (gb, gbb) = match gamma_baseline(d, m) {
            Ok((v, b)) => (Some(v), Some(b)),
            Err(_) if d == 1 => (None, None),
            Err(e) => return Err(e),
        };
        let alpha = 1.0 / (m - 1.0);
        let (li, lib) = spectral::lambda_improved(alpha, d)?;
        let (ls, lsb) = spectral::lambda_sharp(alpha, d)?;
        Ok(Self {
            d,
            m,
            gamma_improved: gi,
            gamma_improved_branch: gib,
            gamma_baseline: gb,
            gamma_baseline_branch: gbb,
            lambda_improved: li,
            lambda_improved_branch: lib,
            lambda_sharp: ls,
            lambda_sharp_branch: lsb,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn exponents_d5() {
        let e = critical_exponents(5);
        assert!(close(e.m_c, 0.6, 1e-15));
        assert!(close(e.m_1, 0.8, 1e-15));
        assert!(close(e.m_tilde_1, 5.0 / 7.0, 1e-15));
        assert!(close(e.m_2, 6.0 / 7.0, 1e-15));
        assert!(close(e.m_tilde_2, 9.0 / 11.0, 1e-15));
    }

    #[test]
    fn exponents_low_dims() {
        let e2 = critical_exponents(2);
        assert_eq!(e2.m_c, 0.0);
        assert_eq!(e2.alpha_star, 0.0);
        let e1 = critical_exponents(1);
        assert_eq!(e1.m_c, -1.0);
        assert!(close(e1.m_tilde_1, 1.0 / 3.0, 1e-15));
        let bound = e1.bind(0.7);
        assert!(close(bound.alpha.unwrap(), -10.0 / 3.0, 1e-14));
        assert!(close(bound.p.unwrap(), 0.85, 1e-14));
    }

    #[test]
    fn ordering_of_exponents() {
        for d in 2..8 {
            let e = critical_exponents(d);
            assert!(e.m_c < e.m_tilde_1 && e.m_tilde_1 <= e.m_1);
            assert!(e.m_1 < e.m_2 && e.m_2 < 1.0);
        }
    }

    #[test]
    fn gamma_examples() {
        let (g, b) = gamma_improved(5, 0.9).unwrap();
        assert_eq!(g, 4.0);
        assert_eq!(b, Branch::Mode { l: 2, k: 0 });
        assert!(close(gamma_improved(5, 0.75).unwrap().0, 1.5625, 1e-14));
        assert!(close(gamma_improved(1, 0.7).unwrap().0, 4.2, 1e-14));
        assert!(close(gamma_improved(5, 0.83).unwrap().0, 3.24, 1e-13));
        assert!(matches!(
            gamma_improved(5, 0.7),
            Err(Error::UnsupportedExponent { .. })
        ));
        assert!(gamma_improved(5, 1.0).is_err());
    }

    #[test]
    fn baseline_examples() {
        assert!(close(gamma_baseline(5, 0.75).unwrap().0, 1.5, 1e-14));
        assert_eq!(gamma_baseline(5, 0.9).unwrap().0, 2.0);
        let at = critical_exponents(5).m_1;
        assert!(close(2.0 * 5.0 * at - 6.0, 2.0, 1e-14));
        assert!(close(gamma_baseline(5, at).unwrap().0, 2.0, 1e-14));
        assert!(gamma_baseline(1, 0.7).is_err());
    }

    #[test]
    fn normalized_mass_has_unit_c() {
        let p = ModelParams::normalized(3, 0.8).unwrap();
        assert!(close(p.constants().c_m, 1.0, 1e-14));
    }

    #[test]
    fn k_m_plugin_d5() {
        let p = ModelParams::normalized(5, 0.75).unwrap();
        let c = p.constants();
        assert!(close(c.k_m, 5.0 * p.mass * c.c_m, 1e-13));
    }

    #[test]
    fn m_star_gamma_form_d1() {
        let p = ModelParams::new(1, 0.7, 1.0).unwrap();
        let want = PI.sqrt() * gamma(17.0 / 6.0) / gamma(10.0 / 3.0);
        assert!(close(p.m_star(), want, 1e-14));
    }

    #[test]
    fn rejects_near_endpoints() {
        assert!(matches!(
            ModelParams::new(3, 0.6, 1.0),
            Err(Error::DivergentSecondMoment { .. })
        ));
        assert!(ModelParams::new(3, 0.6 + 1e-7, 1.0).is_err());
        assert!(ModelParams::new(3, 1.0 - 1e-7, 1.0).is_err());
        assert!(ModelParams::new(3, 0.8, -1.0).is_err());
        assert!(ModelParams::new(0, 0.8, 1.0).is_err());
    }
}
