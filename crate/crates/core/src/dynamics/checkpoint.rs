//! Text checkpoints. `serde_json` with `float_roundtrip` writes every `f64`
//! in shortest round-trip form, so a reloaded state is bit-identical.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::dynamics::solver::SolutionState;
use crate::error::{Error, Result};
use crate::exponents::ModelParams;

pub const FORMAT: &str = "fdlab-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub params: ModelParams,
    pub state: SolutionState,
}

impl Checkpoint {
    pub fn new(params: ModelParams, state: SolutionState) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            params,
            state,
        }
    }

    pub fn to_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_str(text)?;
        if cp.format != FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", cp.format)));
        }
        if cp.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "version {} is not supported (expected {VERSION})",
                cp.version
            )));
        }
        if cp.state.u.len() != cp.state.grid.len() {
            return Err(Error::Checkpoint("state and grid sizes differ".into()));
        }
        Ok(cp)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{init_state, Grid, InitialDatum, Mode};

    #[test]
    fn round_trip_is_bit_exact() {
        let p = ModelParams::normalized(1, 0.7).unwrap();
        let g = Grid::full_line(64, 10.0).unwrap();
        let mut s = init_state(
            &p,
            &InitialDatum::ShiftedBarenblatt {
                sigma0: 1.3,
                shift: 0.1,
            },
            &g,
            Mode::Matched,
            true,
        )
        .unwrap();
        s.t = 0.1 + 0.2;
        s.tau = std::f64::consts::PI / 7.0;
        let cp = Checkpoint::new(p, s.clone());
        let back = Checkpoint::parse(&cp.to_string().unwrap()).unwrap();
        for (a, b) in back.state.u.iter().zip(&s.u) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back, cp);
    }

    #[test]
    fn rejects_other_versions() {
        let p = ModelParams::normalized(1, 0.7).unwrap();
        let g = Grid::full_line(8, 10.0).unwrap();
        let s = init_state(&p, &InitialDatum::Barenblatt { sigma0: 1.0 }, &g, Mode::Matched, true)
            .unwrap();
        let mut cp = Checkpoint::new(p, s);
        cp.version = 99;
        let text = serde_json::to_string(&cp).unwrap();
        assert!(matches!(Checkpoint::parse(&text), Err(Error::Checkpoint(_))));
    }
}
