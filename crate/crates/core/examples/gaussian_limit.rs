//! Scaled gaps as m -> 1 approach the constrained Gaussian constants.

use fdlab::spectral::{gaussian_limit_check, RayleighConfig};

fn main() -> fdlab::Result<()> {
    for d in [1, 3] {
        let report = gaussian_limit_check(d, 0.05, &RayleighConfig::default())?;
        for r in &report.rows {
            println!(
                "d {} m {:.3}  (1-m)l01 {:.4}  (1-m)l20 {:.4}  gap {:.4}  target {}",
                r.d, r.m, r.scaled_lambda01, r.scaled_lambda20, r.scaled_gap, r.gaussian_target
            );
        }
        println!("d {d}: passed = {}", report.passed);
    }
    Ok(())
}
