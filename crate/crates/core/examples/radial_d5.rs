//! Matched-mode run of a radial perturbed Barenblatt in d = 5, m = 0.75.

use fdlab::barenblatt::BarenblattProfile;
use fdlab::diagnostics::fit_rate;
use fdlab::dynamics::{run, Cadence, Grid, InitialDatum, Mode, SolverConfig};
use fdlab::exponents::{gamma_improved, t_rate_from_gamma};
use fdlab::ModelParams;

fn main() -> fdlab::Result<()> {
    let params = ModelParams::normalized(5, 0.75)?;
    let datum = InitialDatum::DilationPerturbed { sigma0: 1.0, eps: 0.2 };
    let radius = BarenblattProfile::new(params, 4.0)?.tail_radius(1e-10);
    let grid = Grid::radial(5, 4096, radius, 0.5)?;
    let traj = run(
        &params,
        &datum,
        &grid,
        Mode::Matched,
        true,
        6.0,
        Cadence::Interval(0.05),
        &SolverConfig::default(),
    )?;
    for r in traj.reports.iter().step_by(10) {
        println!("t {:.2}  F {:.4e}  sigma {:.8}", r.t, r.entropy, r.sigma);
    }
    let fit = fit_rate(&traj, None, 1e-12)?;
    let bound = t_rate_from_gamma(gamma_improved(5, 0.75)?.0);
    println!("slope {:.4} on [{:.2}, {:.2}], predicted {bound}", fit.slope, fit.t_a, fit.t_b);
    Ok(())
}
