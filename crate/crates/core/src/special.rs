//! Gamma and beta functions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7, nine terms).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "beta function needs positive finite arguments, got ({a}, {b})"
        )));
    }
    Ok(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// `B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)`.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// `Gamma(n/2)` for integer `n >= 1`, by the exact half-integer recurrence.
fn gamma_half_integer(n: usize) -> f64 {
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = n as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface measure of the unit sphere in `R^n`: `2 pi^{n/2} / Gamma(n/2)`.
pub fn surface_area(n: usize) -> f64 {
    assert!(n >= 1, "surface_area needs n >= 1");
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_integers() {
        let mut fact = 1.0_f64;
        for n in 1..20 {
            let rel = (ln_gamma(n as f64).exp() - fact).abs() / fact;
            assert!(rel < 1e-13, "n={n} rel={rel}");
            fact *= n as f64;
        }
    }

    #[test]
    fn gamma_half() {
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
        // Gamma(1e-3) = 999.4237724845955
        assert!((ln_gamma(1e-3).exp() / 999.423_772_484_595_5 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gamma_large_against_stirling_series() {
        for &x in &[50.0_f64, 1e3, 1e5, 1e6] {
            let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x)
                - 1.0 / (360.0 * x.powi(3))
                + 1.0 / (1260.0 * x.powi(5));
            let rel = ((ln_gamma(x) - stirling) / stirling).abs();
            assert!(rel < 1e-13, "x={x} rel={rel}");
        }
    }

    #[test]
    fn beta_identities() {
        assert!((beta(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((beta(2.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((beta(0.5, 0.5).unwrap() - PI).abs() < 1e-13);
        assert!(beta(0.0, 1.0).is_err());
        assert!(beta(1.0, -2.0).is_err());
    }

    #[test]
    fn beta_large_first_argument() {
        // B(x, y) ~ Gamma(y) x^{-y}
        let x = 1e3;
        let r = beta(x, 3.0).unwrap() * x.powi(3);
        assert!((r - 2.0).abs() < 0.2, "ratio {r}");
    }

    #[test]
    fn sphere_areas() {
        assert!((surface_area(1) - 2.0).abs() < 1e-15);
        assert!((surface_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((surface_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((surface_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }
}
