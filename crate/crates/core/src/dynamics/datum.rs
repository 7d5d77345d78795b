use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::barenblatt::BarenblattProfile;
use crate::dynamics::grid::{Grid, GridKind};
use crate::error::{Error, Result};
use crate::exponents::ModelParams;

/// `weight * B_sigma(x - shift)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixComponent {
    pub weight: f64,
    pub sigma: f64,
    #[serde(default)]
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum InitialDatum {
    Barenblatt { sigma0: f64 },
    ShiftedBarenblatt { sigma0: f64, shift: f64 },
    /// `(1 - eps) B_sigma0 + eps B_{4 sigma0}`. A pure mass-preserving
    /// dilation would stay inside the Barenblatt family.
    DilationPerturbed { sigma0: f64, eps: f64 },
    GenericMix { components: Vec<MixComponent> },
    /// One value per cell, whitespace or comma separated.
    FromFile { path: PathBuf },
}

impl InitialDatum {
    fn components(&self) -> Option<Vec<MixComponent>> {
        let c = |weight, sigma, shift| MixComponent {
            weight,
            sigma,
            shift,
        };
        match self {
            InitialDatum::Barenblatt { sigma0 } => Some(vec![c(1.0, *sigma0, 0.0)]),
            InitialDatum::ShiftedBarenblatt { sigma0, shift } => {
                Some(vec![c(1.0, *sigma0, *shift)])
            }
            InitialDatum::DilationPerturbed { sigma0, eps } => Some(vec![
                c(1.0 - eps, *sigma0, 0.0),
                c(*eps, 4.0 * sigma0, 0.0),
            ]),
            InitialDatum::GenericMix { components } => Some(components.clone()),
            InitialDatum::FromFile { .. } => None,
        }
    }

    /// Largest Barenblatt scale in the datum (`None` for file data).
    pub fn max_sigma(&self) -> Option<f64> {
        self.components()
            .map(|cs| cs.iter().map(|c| c.sigma).fold(0.0, f64::max))
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let radial = matches!(grid.kind, GridKind::Radial { .. });
        if let InitialDatum::DilationPerturbed { eps, .. } = self {
            if !(*eps > 0.0 && *eps < 1.0) {
                return Err(Error::config("datum.eps", "must lie in (0, 1)"));
            }
        }
        if let Some(cs) = self.components() {
            if cs.is_empty() {
                return Err(Error::config("datum.components", "at least one component"));
            }
            for (i, c) in cs.iter().enumerate() {
                if !(c.weight > 0.0 && c.sigma > 0.0) {
                    return Err(Error::config(
                        format!("datum.components[{i}]"),
                        "weight and sigma must be positive",
                    ));
                }
                if radial && c.shift != 0.0 {
                    return Err(Error::config(
                        format!("datum.components[{i}].shift"),
                        "shifts are not representable on a radial grid",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Cell values with total mass `M`, translated so their center of mass
    /// sits at the origin when `offset` is the datum's center of mass.
    pub fn sample(&self, params: &ModelParams, grid: &Grid, offset: f64) -> Result<Vec<f64>> {
        let mut u = match self.components() {
            Some(cs) => {
                let total: f64 = cs.iter().map(|c| c.weight).sum();
                let profiles = cs
                    .iter()
                    .map(|c| BarenblattProfile::new(*params, c.sigma).map(|b| (b, c)))
                    .collect::<Result<Vec<_>>>()?;
                grid.centers
                    .iter()
                    .map(|&x| {
                        profiles
                            .iter()
                            .map(|(b, c)| {
                                c.weight / total * b.evaluate((x + offset - c.shift).abs())
                            })
                            .sum()
                    })
                    .collect::<Vec<f64>>()
            }
            None => {
                let InitialDatum::FromFile { path } = self else {
                    unreachable!("every preset but from_file has components")
                };
                let raw = load_values(path)?;
                if raw.len() != grid.len() {
                    return Err(Error::config(
                        "datum.path",
                        format!("file has {} values, grid has {} cells", raw.len(), grid.len()),
                    ));
                }
                shift_linear(grid, &raw, offset)
            }
        };
        for (i, v) in u.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteMoment);
            }
            if *v <= 0.0 {
                return Err(Error::NegativeDensity { cell: i, value: *v });
            }
        }
        let mass = grid.integrate(&u);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::NonFiniteMoment);
        }
        let scale = params.mass / mass;
        u.iter_mut().for_each(|v| *v *= scale);
        if !grid.second_moment(&u).is_finite() {
            return Err(Error::NonFiniteMoment);
        }
        Ok(u)
    }

    /// `(c1, c2)` with `c1 B_sigma <= u0 <= c2 B_sigma` on the grid.
    pub fn sandwich(u0: &[f64], params: &ModelParams, grid: &Grid, sigma: f64) -> Result<(f64, f64)> {
        let b = BarenblattProfile::new(*params, sigma)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (v, &x) in u0.iter().zip(&grid.centers) {
            let w = v / b.evaluate(x.abs());
            lo = lo.min(w);
            hi = hi.max(w);
        }
        if lo > 0.0 && hi.is_finite() {
            Ok((lo, hi))
        } else {
            Err(Error::NonFiniteMoment)
        }
    }
}

fn load_values(path: &std::path::Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::config("datum.path", format!("bad value `{s}`: {e}")))
        })
        .collect()
}

/// `u(x + offset)` by linear interpolation between cell centers, clamped at the ends.
fn shift_linear(grid: &Grid, u: &[f64], offset: f64) -> Vec<f64> {
    if offset == 0.0 {
        return u.to_vec();
    }
    let n = u.len();
    let x0 = grid.centers[0];
    let h = grid.centers[1] - grid.centers[0];
    grid.centers
        .iter()
        .map(|&x| {
            let s = ((x + offset - x0) / h).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            let frac = s - i as f64;
            u[i] * (1.0 - frac) + u[i + 1] * frac
        })
        .collect()
}
