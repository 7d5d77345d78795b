//! Invariants over sampled parameters.

use proptest::prelude::*;

use fdlab::barenblatt::BarenblattProfile;
use fdlab::diagnostics::{profile_values, relative_entropy};
use fdlab::dynamics::{Checkpoint, Grid, Mode};
use fdlab::exponents::{critical_exponents, gamma_improved, ModelParams};
use fdlab::harness::experiments::Case;
use fdlab::harness::random::random_mixture;
use fdlab::spectral::{lambda_improved, lambda_sharp, SpectrumTable};

fn improved_limit(d: usize) -> f64 {
    match d {
        1 => -0.5,
        2 => -2.0,
        _ => -(d as f64 + 2.0) / 2.0,
    }
}

fn interior_m(d: usize, s: f64) -> f64 {
    let lo = critical_exponents(d).m_tilde_1;
    lo + (1.0 - lo) * (0.001 + 0.998 * s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_nonnegative(seed in 0u64..10_000, sigma in 0.3f64..4.0, n in 1usize..5) {
        let params = ModelParams::normalized(1, 0.7).unwrap();
        let grid = Grid::full_line(512, 60.0).unwrap();
        let u = random_mixture(seed, n, true).sample(&params, &grid, 0.0).unwrap();
        let b = profile_values(&BarenblattProfile::new(params, sigma).unwrap(), &grid);
        prop_assert!(relative_entropy(&params, &grid, &u, &b) >= 0.0);
    }

    #[test]
    fn improved_constant_is_constrained_table_minimum(d in 1usize..=5, s in 0.0f64..1.0) {
        let alpha = improved_limit(d) - 1e-6 - 20.0 * s;
        let (lambda, _) = lambda_improved(alpha, d).unwrap();
        let table = SpectrumTable::new(alpha, d, 3, 3);
        let min = table.gap_excluding(&[(0, 0), (1, 0), (0, 1)]);
        prop_assert!((lambda - min).abs() <= 1e-9 * min.max(1.0), "{lambda} vs {min}");
    }

    #[test]
    fn sharp_constant_is_mass_constrained_table_minimum(d in 1usize..=5, s in 0.0f64..1.0) {
        let alpha = -0.01 - 20.0 * s;
        prop_assume!(d < 3 || (alpha - critical_exponents(d).alpha_star).abs() > 1e-9);
        let (lambda, _) = lambda_sharp(alpha, d).unwrap();
        let min = SpectrumTable::new(alpha, d, 3, 3).gap_excluding(&[(0, 0)]);
        prop_assert!((lambda - min).abs() <= 1e-9 * min.max(1.0), "{lambda} vs {min}");
    }

    #[test]
    fn rate_identity(d in 1usize..=5, s in 0.0f64..1.0) {
        let m = interior_m(d, s);
        let (g, _) = gamma_improved(d, m).unwrap();
        let (l, _) = lambda_improved(1.0 / (m - 1.0), d).unwrap();
        prop_assert!((g - (1.0 - m) * l).abs() <= 1e-12 * g.max(1.0));
    }

    #[test]
    fn improved_rate_is_monotone_and_dominates(d in 1usize..=5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (m1, m2) = (interior_m(d, a.min(b)), interior_m(d, a.max(b)));
        let g1 = gamma_improved(d, m1).unwrap().0;
        prop_assert!(g1 <= gamma_improved(d, m2).unwrap().0 + 1e-12);
        let c1 = Case::OffCenter.gamma(d, m1).unwrap();
        let c2 = Case::Centered.gamma(d, m1).unwrap();
        prop_assert!(c1 <= c2 + 1e-12 && c2 <= g1 + 1e-12, "{c1} {c2} {g1}");
    }

    #[test]
    fn checkpoint_round_trip(seed in 0u64..1000) {
        let params = ModelParams::normalized(1, 0.7).unwrap();
        let grid = Grid::full_line(128, 40.0).unwrap();
        let datum = random_mixture(seed, 2, true);
        let state = fdlab::dynamics::init_state(&params, &datum, &grid, Mode::Matched, true).unwrap();
        let cp = Checkpoint::new(params, state);
        let back = Checkpoint::parse(&cp.to_string().unwrap()).unwrap();
        prop_assert_eq!(back, cp);
    }
}
