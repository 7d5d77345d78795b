//! Conservative implicit solver for the rescaled flow
//! `du/dt + div[u (sigma^p grad u^{m-1} - 2x)] = 0`.

pub mod checkpoint;
pub mod datum;
pub mod grid;
mod solver;

pub use checkpoint::Checkpoint;
pub use datum::{InitialDatum, MixComponent};
pub use grid::{sphere_area, Grid, GridKind};
pub use solver::{
    init_state, run, run_from, sigma_update, step, Cadence, Mode, SolutionState, SolverConfig,
    StepRecord, Trajectory,
};
