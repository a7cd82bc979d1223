mod common;

use common::radial_lp;
use pucci::counterexample::{
    analytic_hessian_norm_halfball, analytic_profile_norm, analytic_rhs_norm, critical_theta, estimate_ratio,
    max_principle_ratio, pucci_exponent, NormSpec, RadialProfile, Ratio,
};
use pucci::{pucci_minus, Ellipticity};

fn ell(a: f64, b: f64) -> Ellipticity {
    Ellipticity::new(a, b).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn hessian_matches_central_differences() {
    let step = 1e-4;
    for (n, theta) in [(2, 0.5), (3, -0.5), (3, 0.3), (4, -1.2)] {
        let prof = RadialProfile::full(n, theta).unwrap();
        for x in [[0.3, -0.2, 0.25, 0.1], [-0.6, 0.1, -0.05, 0.4]] {
            let x = &x[..n];
            let h = prof.hessian(x).unwrap();
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let at = |di: f64, dj: f64| {
                        let mut y = x.to_vec();
                        y[i] += di;
                        y[j] += dj;
                        prof.value(&y).unwrap()
                    };
                    let fd = (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step))
                        / (4.0 * step * step);
                    worst = worst.max((fd - h.get(i, j)).abs());
                }
            }
            assert!(worst <= 1e-6 * h.frobenius(), "n={n} theta={theta}: {worst}");
        }
    }
}

#[test]
fn closed_form_pucci_matches_eigen_route() {
    let e = ell(1.0, 3.0);
    let prof = RadialProfile::full(3, -0.4).unwrap();
    let x = [0.2, -0.3, 0.5];
    let a = prof.pucci_minus_at(&x, &e).unwrap();
    let b = pucci_minus(&prof.hessian(&x).unwrap(), &e);
    assert!(rel(a, b) < 1e-12);
}

#[test]
fn rhs_norm_matches_quadrature() {
    let e = ell(1.0, 2.0);
    for (n, theta, p) in [(2, 0.5, 1.0), (2, 0.7, 4.0 / 3.0), (3, -0.5, 1.0), (3, 0.4, 1.2), (3, -0.8, 0.5)] {
        let prof = RadialProfile::full(n, theta).unwrap();
        let c = prof.coefficient(&e);
        let oracle = radial_lp(n, 1.0, p, |r| theta.abs() * c * r.powf(theta - 2.0));
        let closed = analytic_rhs_norm(&prof, &e, &NormSpec::unit_ball(p).unwrap()).unwrap();
        assert!(rel(closed, oracle) < 1e-6, "n={n} theta={theta} p={p}: {closed} vs {oracle}");
    }
}

#[test]
fn profile_norm_matches_quadrature() {
    for (n, theta, p) in [(2, 0.5, 1.0), (2, 0.3, 2.0), (3, -0.5, 1.0), (3, -0.9, 1.5), (3, 0.6, 0.7)] {
        let prof = RadialProfile::full(n, theta).unwrap();
        let s = if theta > 0.0 { 1.0 } else { -1.0 };
        let oracle = radial_lp(n, 1.0, p, |r| s * (r.powf(theta) - 1.0));
        let closed = analytic_profile_norm(&prof, &NormSpec::unit_ball(p).unwrap()).unwrap();
        assert!(rel(closed, oracle) < 1e-6, "n={n} theta={theta} p={p}: {closed} vs {oracle}");
    }
}

#[test]
fn hessian_norm_matches_quadrature() {
    let e = ell(1.0, 2.0);
    for (n, theta, p) in [(2, 0.7, 1.0), (2, 0.9, 4.0 / 3.0), (3, 0.4, 1.5), (3, 0.2, 1.0)] {
        let prof = RadialProfile::full(n, theta).unwrap();
        let nf = n as f64;
        let oracle = radial_lp(n, 0.5, p, |r| theta.abs() * (nf - theta) * r.powf(theta - 2.0));
        let closed = analytic_hessian_norm_halfball(&prof, &e, &NormSpec::half_ball(p).unwrap()).unwrap();
        assert!(rel(closed, oracle) < 1e-6, "n={n} theta={theta} p={p}: {closed} vs {oracle}");
    }
}

#[test]
fn exponents_and_critical_values() {
    let e = ell(1.0, 2.0);
    assert_eq!(pucci_exponent(2, &e).unwrap().value, 4.0 / 3.0);
    assert_eq!(pucci_exponent(3, &e).unwrap().value, 1.5);
    assert_eq!(critical_theta(2, &e).unwrap(), 0.5);
    assert!((critical_theta(3, &ell(1.0, 3.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn negative_branch_max_principle_unbounded() {
    let prof = RadialProfile::full(3, -0.5).unwrap();
    assert_eq!(max_principle_ratio(&prof, &ell(1.0, 2.0)).unwrap(), Ratio::Unbounded);
}

#[test]
fn estimate_ratio_grows_toward_critical() {
    let e = ell(1.0, 2.0);
    let star = critical_theta(2, &e).unwrap();
    let near = estimate_ratio(&RadialProfile::full(2, star + 1e-3).unwrap(), &e).unwrap();
    let far = estimate_ratio(&RadialProfile::full(2, star + 1e-1).unwrap(), &e).unwrap();
    assert!(near > far);
}

#[test]
fn isotropic_ratio_is_reciprocal_rhs_norm() {
    let e = ell(1.0, 1.0);
    let prof = RadialProfile::full(2, 0.5).unwrap();
    let den = analytic_rhs_norm(&prof, &e, &NormSpec::unit_ball(1.0).unwrap()).unwrap();
    let oracle = radial_lp(2, 1.0, 1.0, |r| 0.5 * prof.coefficient(&e) * r.powf(-1.5));
    assert!(rel(den, oracle) < 1e-6);
    match max_principle_ratio(&prof, &e).unwrap() {
        Ratio::Finite(v) => assert!(rel(v, 1.0 / den) < 1e-14),
        Ratio::Unbounded => panic!("finite ratio expected"),
    }
}
