//! Analytic rates of the three cases across the fast-diffusion range.

use fdlab::harness::experiments::gamma_curves;

fn main() -> fdlab::Result<()> {
    let ms: Vec<f64> = (1..10).map(|i| 5.0 / 7.0 + (2.0 / 7.0) * i as f64 / 10.0).collect();
    println!("     m   case1   case2   case3  baseline");
    for r in gamma_curves(5, &ms)? {
        let base = r.gamma_baseline.map_or("-".into(), |g| format!("{g:.4}"));
        println!(
            "{:.4} {:7.4} {:7.4} {:7.4} {base:>9}",
            r.m, r.gamma_case1, r.gamma_case2, r.gamma_case3
        );
    }
    Ok(())
}
