//! Late-time entropy slopes of the three cases in d = 1, m = 0.7, with the
//! analytic `gamma` curves for comparison.

use fdlab::harness::experiments::compare_cases;

fn main() -> fdlab::Result<()> {
    let report = compare_cases(1, &[0.6, 0.7, 0.8, 0.9], &[0.7], 4096)?;
    for c in &report.cases {
        match &c.fit {
            Some(f) => println!(
                "case {}: slope {:.3} (predicted {:.2}) over t in [{:.2}, {:.2}], {:.1} e-folds",
                c.case, f.slope, c.predicted_slope, f.t_a, f.t_b, f.efolds
            ),
            None => println!("case {}: {}", c.case, c.warning.as_deref().unwrap_or("")),
        }
    }
    println!("ordering 3 > 2 > 1: {}", report.ordering_holds(0.0));
    println!("\n   m  gamma_1  gamma_2  gamma_3");
    for r in &report.curves {
        println!("{:.2}  {:7.3}  {:7.3}  {:7.3}", r.m, r.gamma_case1, r.gamma_case2, r.gamma_case3);
    }
    Ok(())
}
