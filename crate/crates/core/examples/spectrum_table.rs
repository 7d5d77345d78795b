//! Closed-form spectrum in d = 5 with the Rayleigh-certified column.

use fdlab::harness::spectrum::spectrum_rows;
use fdlab::spectral::RayleighConfig;

fn main() -> fdlab::Result<()> {
    let rows = spectrum_rows(5, &[-4.0, -6.0, -8.0], 2, 2, Some(&RayleighConfig::default()))?;
    println!("alpha   l k     lambda  valid   numeric   rel.err");
    for r in &rows {
        let numeric = r.numeric.map_or("-".to_string(), |v| format!("{v:.5}"));
        let err = r.relative_error.map_or("-".to_string(), |e| format!("{e:.1e}"));
        println!(
            "{:5} {:3} {} {:10.4} {:6} {:>9} {:>9}",
            r.alpha, r.l, r.k, r.lambda, r.valid, numeric, err
        );
    }
    Ok(())
}
