//! Profile moments and the discrete stationarity residual under refinement.

use fdlab::barenblatt::{stationarity_residual, BarenblattProfile};
use fdlab::dynamics::Grid;
use fdlab::ModelParams;

fn main() -> fdlab::Result<()> {
    for (d, m) in [(1, 0.7), (3, 0.8), (5, 0.75)] {
        let params = ModelParams::normalized(d, m)?;
        let b = BarenblattProfile::new(params, 1.0)?;
        let radius = b.tail_radius(1e-10);
        println!("d {d} m {m}: M* {:.6} K_M {:.6} L {radius:.1}", params.m_star(), b.moment(2)?);
        for cells in [512, 1024, 2048] {
            let grid = if d == 1 {
                Grid::full_line(cells, radius)?
            } else {
                Grid::radial(d, cells, radius, 0.5)?
            };
            println!("  {cells:5} cells  residual {:.3e}", stationarity_residual(&b, &grid));
        }
    }
    Ok(())
}
