//! Independent quadrature oracle for radial integrals.
#![allow(dead_code)]

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Gauss-Kronrod 7/15 on `[a, b]`: `(kronrod, |kronrod - gauss|)`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let d = h * XGK[j];
        let s = f(c - d) + f(c + d);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive bisection until the local error estimate is below `tol`.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || err <= 1e-14 * v.abs() || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// `|S^{n-1}|` for the dimensions used in the tests.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => panic!("sphere area tabulated for n = 2, 3, 4 only"),
    }
}

/// `int_{B_R} g(|x|) dx` in `R^n`, via `r = R e^{-s}` on unit panels in `s`
/// until the panel contributions are negligible or `r` nears underflow.
pub fn radial_integral<G: Fn(f64) -> f64>(n: usize, radius: f64, g: G) -> f64 {
    let nf = n as f64;
    let integrand = |s: f64| {
        let r = radius * (-s).exp();
        let v = g(r) * r.powf(nf);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut total = 0.0f64;
    let mut quiet = 0;
    let mut s = 0.0;
    // r underflows near s = 745; the tail beyond s = 700 is below e^{-700 a}
    while quiet < 5 && s < 700.0 {
        let part = adaptive(&integrand, s, s + 1.0, 1e-15 * (1.0 + total.abs()), 30);
        total += part;
        quiet = if part.abs() <= 1e-16 * total.abs() { quiet + 1 } else { 0 };
        s += 1.0;
    }
    sphere_area(n) * total
}

/// `(int_{B_R} |g|^p)^{1/p}`.
pub fn radial_lp<G: Fn(f64) -> f64>(n: usize, radius: f64, p: f64, g: G) -> f64 {
    radial_integral(n, radius, |r| g(r).abs().powf(p)).powf(1.0 / p)
}
