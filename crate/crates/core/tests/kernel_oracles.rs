//! Kernel constants and potentials against values computed independently
//! at 30 digits, plus structural properties of the angular kernel.

// reference values keep every digit they were computed with
#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use fraclap::kernel::{
    diagonal_coefficient, dyda_constant, normalization_constant, phi_boundary_constant, FracOrder,
    KernelEvaluator,
};
use fraclap::special::gamma;
use proptest::prelude::*;

fn order(s: f64, dim: usize) -> FracOrder {
    FracOrder::new(s, dim).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn normalization_constants() {
    let cases = [
        (0.25, 2, 0.0832419838754250655),
        (0.5, 2, 0.159154943091895336),
        (0.5, 3, 0.101321183642337771),
        (0.25, 3, 0.0476202269506807273),
    ];
    for (s, n, expect) in cases {
        assert!(rel(normalization_constant(order(s, n)), expect) < 1e-13, "c({n},{s})");
    }
}

#[test]
fn full_space_constants() {
    let cases = [
        (0.25, 2, 1.16186900235024173),
        (0.5, 2, std::f64::consts::FRAC_PI_2),
        (0.5, 3, 2.0),
        (0.25, 3, 1.32934038817913702),
    ];
    for (s, n, expect) in cases {
        assert!(rel(dyda_constant(order(s, n)), expect) < 1e-13, "B({n},{s})");
    }
}

#[test]
fn boundary_constants() {
    let cases = [
        (0.25, 2, 4.79256093894236883),
        (0.5, 2, 2.0),
        (0.5, 3, PI),
        (0.25, 3, 8.37758040957278197),
    ];
    for (s, n, expect) in cases {
        assert!(rel(phi_boundary_constant(order(s, n)), expect) < 1e-13, "c1({n},{s})");
    }
}

#[test]
fn boundary_constant_is_diagonal_coefficient_over_two_s() {
    for (s, n) in [(0.1, 2), (0.3, 3), (0.5, 4)] {
        let o = order(s, n);
        assert!(rel(phi_boundary_constant(o), diagonal_coefficient(o) / (2.0 * s)) < 1e-14);
    }
}

#[test]
fn potential_near_the_boundary() {
    let d = 1e-4;
    for (s, expect) in [(0.25, 486.648737032767750), (0.5, 20011.2905662039291)] {
        let ke = KernelEvaluator::new(order(s, 2));
        let got = ke.phi_raw(1.0 - d).unwrap();
        assert!(rel(got, expect) < 1e-8, "phi(1 - 1e-4), s = {s}: {got}");
    }
}

#[test]
fn gamma_agrees_with_statrs() {
    for k in 1..400 {
        let x = 0.013 + 0.0421 * k as f64;
        let a = gamma(x);
        let b = statrs::function::gamma::gamma(x);
        assert!(rel(a, b) < 1e-12, "gamma({x}): {a} vs {b}");
    }
    for x in [-0.5, -1.5, -2.25] {
        assert!(rel(gamma(x), statrs::function::gamma::gamma(x)) < 1e-13);
    }
}

#[test]
fn potential_increases_toward_the_boundary() {
    let ke = KernelEvaluator::new(order(0.3, 2));
    let mut prev = 0.0;
    for k in 0..50 {
        let r = 1.0 - 0.8f64.powi(k);
        let v = ke.phi_raw(r).unwrap();
        assert!(v > prev, "phi not increasing at r = {r}");
        prev = v;
    }
}

/// Closed form of the angular kernel in three dimensions.
fn j3(s: f64, r: f64, rho: f64) -> f64 {
    2.0 * PI / ((1.0 + 2.0 * s) * r * rho)
        * ((r - rho).abs().powf(-1.0 - 2.0 * s) - (r + rho).powf(-1.0 - 2.0 * s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn angular_kernel_is_symmetric(s in 0.05f64..0.5, r in 0.0f64..2.0, rho in 0.0f64..2.0, dim in 2usize..5) {
        prop_assume!((r - rho).abs() > 1e-3);
        let ke = KernelEvaluator::new(order(s, dim));
        let a = ke.angular_kernel(r, rho).unwrap();
        let b = ke.angular_kernel(rho, r).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(rel(a, b) < 1e-12);
    }

    #[test]
    fn angular_kernel_three_dimensional(s in 0.05f64..0.5, r in 0.01f64..1.0, gap in 1e-5f64..1.0) {
        let rho = r + gap;
        let ke = KernelEvaluator::new(order(s, 3));
        let got = ke.angular_kernel(r, rho).unwrap();
        prop_assert!(rel(got, j3(s, r, rho)) < 1e-9, "{} vs {}", got, j3(s, r, rho));
    }

    #[test]
    fn angular_kernel_decreases_away_from_the_diagonal(s in 0.05f64..0.5, r in 0.05f64..0.9, t in 1e-4f64..0.05) {
        let ke = KernelEvaluator::new(order(s, 2));
        let near = ke.angular_kernel(r, r + t).unwrap();
        let far = ke.angular_kernel(r, r + 2.0 * t).unwrap();
        prop_assert!(far < near);
    }
}
