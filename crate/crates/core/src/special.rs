//! Gamma function and the geometric constants of spheres and balls.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;

// Lanczos coefficients for g = 7, n = 9 (the set published with the
// Numerical Recipes / GSL style approximation). Relative accuracy is
// about 1e-15 for real arguments >= 1/2.
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments.
///
/// Arguments below 1/2 go through the reflection formula
/// `Γ(x)Γ(1-x) = π / sin(πx)`. Non-positive integers return NaN.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Surface area of the unit sphere S^{n-1} embedded in R^n.
///
/// `sphere_area(1) = 2` counts the two points of S^0.
pub fn sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Lebesgue measure of the unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}
