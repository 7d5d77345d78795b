//! TOML experiment configuration. Every section has defaults, unknown keys
//! are rejected, and [`ExperimentConfig::validate`] names the offending field.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::barenblatt::BarenblattProfile;
use crate::dynamics::{Cadence, Grid, InitialDatum, MixComponent, Mode, SolverConfig};
use super::random::random_mixture;
use crate::error::{Error, Result};
use crate::exponents::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSpec {
    pub d: usize,
    pub m: f64,
    /// Total mass; `M*` (so `C_M = 1`) when absent.
    pub mass: Option<f64>,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self {
            d: 1,
            m: 0.7,
            mass: None,
        }
    }
}

impl ParamsSpec {
    pub fn build(&self) -> Result<ModelParams> {
        let wrap = |e: Error| match e {
            Error::InvalidDimension => Error::config("params.d", e.to_string()),
            Error::InvalidParameter { .. } => Error::config("params.mass", e.to_string()),
            _ => Error::config("params.m", e.to_string()),
        };
        match self.mass {
            Some(mass) => ModelParams::new(self.d, self.m, mass).map_err(wrap),
            None => ModelParams::normalized(self.d, self.m).map_err(wrap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKindSpec {
    FullLine,
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKindSpec,
    pub cells: usize,
    /// Truncation radius; chosen from `tail_tol` when absent.
    pub radius: Option<f64>,
    /// Outside mass fraction of the widest datum profile at the boundary.
    pub tail_tol: f64,
    /// Radial mapping scale.
    pub core: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            kind: GridKindSpec::FullLine,
            cells: 4096,
            radius: None,
            tail_tol: 1e-10,
            core: 0.5,
        }
    }
}

impl GridSpec {
    pub fn build(&self, params: &ModelParams, datum: &InitialDatum) -> Result<Grid> {
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::config("grid.tail_tol", "must lie in (0, 1)"));
        }
        let radius = match self.radius {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(_) => return Err(Error::config("grid.radius", "must be positive")),
            None => {
                let sigma = datum.max_sigma().unwrap_or(1.0);
                BarenblattProfile::new(*params, sigma)
                    .map_err(|e| Error::config("datum", e.to_string()))?
                    .tail_radius(self.tail_tol)
            }
        };
        let grid = match self.kind {
            GridKindSpec::FullLine => {
                if params.d != 1 {
                    return Err(Error::config("grid.kind", "full_line grids need d = 1"));
                }
                Grid::full_line(self.cells, radius)
            }
            GridKindSpec::Radial => Grid::radial(params.d, self.cells, radius, self.core),
        };
        grid.map_err(|e| Error::config("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub mode: Mode,
    pub recentre: bool,
    pub t_end: f64,
    /// Snapshot spacing in `t`; every step when zero.
    pub output_every: f64,
    /// Write a checkpoint every this many steps (never when zero).
    pub checkpoint_every: u64,
    pub resume_from: Option<PathBuf>,
    /// Rate-fit window; automatic when absent.
    pub fit_window: Option<[f64; 2]>,
    /// Snapshots with `F` below this are left out of fits and identity checks.
    pub fit_floor: f64,
    /// When positive, the datum is replaced by a mixture of this many
    /// Barenblatt profiles drawn from `seed`.
    pub random_mixture: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            mode: Mode::Matched,
            recentre: true,
            t_end: 3.0,
            output_every: 0.02,
            checkpoint_every: 0,
            resume_from: None,
            fit_window: None,
            fit_floor: 1e-12,
            random_mixture: 0,
        }
    }
}

impl RunSpec {
    pub fn cadence(&self) -> Cadence {
        if self.output_every == 0.0 {
            Cadence::EveryStep
        } else {
            Cadence::Interval(self.output_every)
        }
    }
}

/// Pinned tolerances of the monitors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack of the sandwich, Fisher and interpolation bounds and of
    /// the scaled Hardy-Poincare inequality.
    pub bound_slack: f64,
    /// Mass and second-moment orthogonality, relative to their scales.
    pub orthogonality: f64,
    /// `|int x u| / M`.
    pub center_of_mass: f64,
    /// The Hardy-Poincare and interpolation bounds are enforced where the
    /// first-moment residual, relative to its scale, is below this.
    pub first_moment_hypothesis: f64,
    /// Allowed relative increase of `sigma` over one step.
    pub sigma_step: f64,
    /// Allowed increase of `F` over one step, relative to `F(0)`.
    pub entropy_step: f64,
    pub mass_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bound_slack: 1e-2,
            orthogonality: 1e-6,
            center_of_mass: 1e-4,
            first_moment_hypothesis: 0.1,
            sigma_step: 1e-8,
            entropy_step: 1e-12,
            mass_drift: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSpec {
    pub d: usize,
    pub alphas: Vec<f64>,
    pub l_max: u32,
    pub k_max: u32,
    /// Run the Rayleigh verifier on the rows it can reach.
    pub certify: bool,
    pub nodes: usize,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self {
            d: 5,
            alphas: vec![-4.0, -6.0, -8.0, -10.0],
            l_max: 2,
            k_max: 2,
            certify: true,
            nodes: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesSpec {
    pub d: usize,
    /// Sample points of the analytic curves.
    pub m_grid: Vec<f64>,
    /// Exponents at which the three cases are also simulated (d = 1 only).
    pub simulate: Vec<f64>,
    pub cells: usize,
}

impl Default for RatesSpec {
    fn default() -> Self {
        Self {
            d: 5,
            m_grid: (1..100).map(|i| 5.0 / 7.0 + (2.0 / 7.0) * i as f64 / 100.0).collect(),
            simulate: vec![],
            cells: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub params: ParamsSpec,
    pub grid: GridSpec,
    pub datum: InitialDatum,
    pub run: RunSpec,
    pub solver: SolverConfig,
    pub tolerances: Tolerances,
    pub spectrum: SpectrumSpec,
    pub rates: RatesSpec,
}

/// The asymmetric two-bump datum used by the rate experiments.
pub fn generic_datum() -> InitialDatum {
    InitialDatum::GenericMix {
        components: vec![
            MixComponent {
                weight: 0.75,
                sigma: 1.0,
                shift: 0.3,
            },
            MixComponent {
                weight: 0.25,
                sigma: 2.0,
                shift: -0.5,
            },
        ],
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            params: ParamsSpec::default(),
            grid: GridSpec::default(),
            datum: generic_datum(),
            run: RunSpec::default(),
            solver: SolverConfig::default(),
            tolerances: Tolerances::default(),
            spectrum: SpectrumSpec::default(),
            rates: RatesSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(String::new, |s| {
                let line = text[..s.start].matches('\n').count() + 1;
                format!("line {line}")
            });
            Error::config(field, e.message().to_string())
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text form, which is also what the manifest hashes.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The datum actually run, after seeding a random mixture if asked.
    pub fn resolved_datum(&self) -> InitialDatum {
        if self.run.random_mixture > 0 {
            let shifted = self.grid.kind == GridKindSpec::FullLine;
            random_mixture(self.seed, self.run.random_mixture, shifted)
        } else {
            self.datum.clone()
        }
    }

    /// Checks every section used by `simulate` before anything runs.
    pub fn validate(&self) -> Result<(ModelParams, Grid)> {
        let params = self.params.build()?;
        let datum = self.resolved_datum();
        let grid = self.grid.build(&params, &datum)?;
        datum.validate(&grid)?;
        self.solver.validate()?;
        let run = &self.run;
        if !(run.t_end > 0.0 && run.t_end.is_finite()) {
            return Err(Error::config("run.t_end", "must be positive"));
        }
        if !(run.output_every >= 0.0) {
            return Err(Error::config("run.output_every", "must be nonnegative"));
        }
        if let Some([a, b]) = run.fit_window {
            if !(a < b) {
                return Err(Error::config("run.fit_window", "needs start < end"));
            }
        }
        if !(run.fit_floor >= 0.0) {
            return Err(Error::config("run.fit_floor", "must be nonnegative"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("bound_slack", t.bound_slack),
            ("orthogonality", t.orthogonality),
            ("center_of_mass", t.center_of_mass),
            ("first_moment_hypothesis", t.first_moment_hypothesis),
            ("sigma_step", t.sigma_step),
            ("entropy_step", t.entropy_step),
            ("mass_drift", t.mass_drift),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("tolerances.{name}"), "must be nonnegative"));
            }
        }
        Ok((params, grid))
    }

    pub fn validate_spectrum(&self) -> Result<()> {
        let s = &self.spectrum;
        if s.d == 0 {
            return Err(Error::config("spectrum.d", "must be at least 1"));
        }
        if let Some(i) = s.alphas.iter().position(|a| !(*a < 0.0)) {
            return Err(Error::config(format!("spectrum.alphas[{i}]"), "alpha must be negative"));
        }
        if s.certify && s.nodes < 100 {
            return Err(Error::config("spectrum.nodes", "need at least 100 nodes"));
        }
        Ok(())
    }

    pub fn validate_rates(&self) -> Result<()> {
        let r = &self.rates;
        for (name, list) in [("m_grid", &r.m_grid), ("simulate", &r.simulate)] {
            for (i, &m) in list.iter().enumerate() {
                ModelParams::new(r.d, m, 1.0)
                    .map_err(|e| Error::config(format!("rates.{name}[{i}]"), e.to_string()))?;
            }
        }
        if !r.simulate.is_empty() && r.d != 1 {
            return Err(Error::config("rates.simulate", "simulated cases need d = 1"));
        }
        if r.cells < 16 {
            return Err(Error::config("rates.cells", "need at least 16 cells"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_names_line() {
        let err = ExperimentConfig::parse("seed = 1\n[params]\nd = 1\nwat = 3\n").unwrap_err();
        match err {
            Error::Config { field, message } => {
                assert_eq!(field, "line 4");
                assert!(message.contains("wat"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut cfg = ExperimentConfig::default();
        cfg.params.m = 0.2;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "params.m"));
        let mut cfg = ExperimentConfig::default();
        cfg.run.t_end = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "run.t_end"));
        let mut cfg = ExperimentConfig::default();
        cfg.grid.kind = GridKindSpec::Radial;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "grid"));
        let mut cfg = ExperimentConfig::default();
        cfg.spectrum.alphas = vec![-3.0, 0.5];
        assert!(
            matches!(cfg.validate_spectrum(), Err(Error::Config { field, .. }) if field == "spectrum.alphas[1]")
        );
    }

    #[test]
    fn datum_presets_parse() {
        let text = "[datum]\npreset = \"dilation_perturbed\"\nsigma0 = 1.0\neps = 0.2\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.datum, InitialDatum::DilationPerturbed { sigma0: 1.0, eps: 0.2 });
    }
}
