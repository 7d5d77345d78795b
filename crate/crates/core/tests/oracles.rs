//! Closed forms against independent quadrature and grid refinement.

use std::f64::consts::FRAC_PI_2;

use fdlab::barenblatt::{m_star_quadrature, stationarity_residual, BarenblattProfile, SelfSimilarComparator};
use fdlab::dynamics::{sphere_area, Grid};
use fdlab::exponents::{critical_exponents, ModelParams};

#[test]
fn m_star_matches_quadrature() {
    for d in 1..=6 {
        let lo = critical_exponents(d).m_tilde_1;
        for i in 1..8 {
            let m = lo + (1.0 - lo) * i as f64 / 8.0;
            let p = ModelParams::new(d, m, 1.0).unwrap();
            let (a, b) = (p.m_star(), m_star_quadrature(d, m));
            assert!(((a - b) / b).abs() < 1e-10, "d={d} m={m}: {a} vs {b}");
        }
    }
}

/// `int S r^{d-1} u(r) dr` with `r = tan(theta)`.
fn radial_mass(d: usize, u: impl Fn(f64) -> f64) -> f64 {
    let f = |t: f64| {
        let r = t.tan();
        let c = t.cos();
        r.powi(d as i32 - 1) * u(r) / (c * c)
    };
    sphere_area(d) * quadrature::integrate(f, 0.0, FRAC_PI_2 - 1e-12, 1e-13).integral
}

#[test]
fn comparator_keeps_its_mass() {
    for (d, m) in [(1, 0.7), (3, 0.8), (5, 0.9)] {
        let p = ModelParams::new(d, m, 2.5).unwrap();
        let c = SelfSimilarComparator::new(p);
        for tau in [0.0, 1.0, 50.0] {
            let mass = radial_mass(d, |r| c.evaluate(tau, r));
            assert!((mass / 2.5 - 1.0).abs() < 1e-8, "d={d} tau={tau}: {mass}");
        }
    }
}

#[test]
fn profile_mass_and_second_moment() {
    let p = ModelParams::normalized(3, 0.85).unwrap();
    let b = BarenblattProfile::new(p, 1.7).unwrap();
    let mass = radial_mass(3, |r| b.evaluate(r));
    assert!((mass / p.mass - 1.0).abs() < 1e-9);
    let m2 = radial_mass(3, |r| r * r * b.evaluate(r));
    assert!((m2 / b.moment(2).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn stationarity_residual_is_second_order() {
    let p = ModelParams::normalized(1, 0.7).unwrap();
    let b = BarenblattProfile::new(p, 1.0).unwrap();
    let coarse = Grid::full_line(512, 30.0).unwrap();
    let fine = coarse.refine().unwrap();
    let ratio = stationarity_residual(&b, &coarse) / stationarity_residual(&b, &fine);
    assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
}
