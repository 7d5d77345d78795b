//! Interrupt a run at a checkpoint, resume it, compare with the straight run.

use fdlab::dynamics::{run, run_from, Cadence, Checkpoint, Grid, InitialDatum, Mode, SolverConfig};
use fdlab::ModelParams;

fn main() -> fdlab::Result<()> {
    let params = ModelParams::normalized(1, 0.7)?;
    let grid = Grid::full_line(512, 60.0)?;
    let datum = InitialDatum::ShiftedBarenblatt { sigma0: 1.0, shift: 0.3 };
    let cfg = SolverConfig::default();
    let straight = run(&params, &datum, &grid, Mode::Matched, true, 1.0, Cadence::EveryStep, &cfg)?;

    let half = run(&params, &datum, &grid, Mode::Matched, true, 0.5, Cadence::EveryStep, &cfg)?;
    let dir = std::env::temp_dir().join("fdlab-checkpoint-example.json");
    Checkpoint::new(params, half.final_state.expect("final state")).save(&dir)?;
    let restored = Checkpoint::load(&dir)?;
    let resumed = run_from(&params, restored.state, 1.0, Cadence::EveryStep, &cfg, &mut |_| Ok(()))?;

    let a = straight.final_state.expect("final state");
    let b = resumed.final_state.expect("final state");
    let gap = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("t {:.4} vs {:.4}, max |u - u'| = {gap:.2e}", a.t, b.t);
    Ok(())
}
