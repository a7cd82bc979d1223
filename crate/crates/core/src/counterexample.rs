//! The singular radial family `U_theta`, its Hessian, and closed-form norms.
//!
//! For `r = |x~|` (the norm of the first `k` coordinates),
//!
//! ```text
//! U(x) = s (r^theta - 1),   s = +1 for theta in (0, 1), s = -1 for theta < 0.
//! ```
//!
//! The Hessian has the tangential eigenvalue `|theta| r^{theta-2}` with
//! multiplicity `k - 1`, the radial eigenvalue `-|theta| (1 - theta) r^{theta-2}`,
//! and `0` on the `n - k` inactive coordinates. Hence
//! `P^-(D^2 U) = |theta| (lambda (k-1) - Lambda (1-theta)) r^{theta-2}`, which
//! vanishes identically at `theta* = 1 - lambda (k-1) / Lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::operator::Ellipticity;
use crate::special::{beta, surface_area};
use crate::sum::loglog_slope;
use crate::table::{Cell, Table};

/// Sign convention of the profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `|x~|^theta - 1`, `0 < theta < 1`.
    Positive,
    /// `1 - |x~|^theta`, `theta < 0`.
    Negative,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// Parameters `(n, k, theta)` of `U_theta^k` on `R^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    n: usize,
    k: usize,
    theta: f64,
}

impl RadialProfile {
    /// Requires `2 <= k <= n` and `2 - k < theta < 1`, `theta != 0`.
    pub fn new(n: usize, k: usize, theta: f64) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::InvalidInput(format!("need 2 <= k <= n, got k={k}, n={n}")));
        }
        if !theta.is_finite() || theta == 0.0 || theta >= 1.0 || theta <= 2.0 - k as f64 {
            return Err(Error::Domain(format!(
                "theta = {theta} outside the admissible range (2 - k, 1) \\ {{0}} for k = {k}"
            )));
        }
        Ok(RadialProfile { n, k, theta })
    }

    /// Profile with all coordinates active (`k = n`).
    pub fn full(n: usize, theta: f64) -> Result<Self> {
        Self::new(n, n, theta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn branch(&self) -> Branch {
        if self.theta > 0.0 {
            Branch::Positive
        } else {
            Branch::Negative
        }
    }

    /// `theta^- = max(-theta, 0)`.
    fn theta_minus(&self) -> f64 {
        (-self.theta).max(0.0)
    }

    /// `lambda (k-1) - Lambda (1 - theta)`.
    pub fn coefficient(&self, e: &Ellipticity) -> f64 {
        e.lower() * (self.k as f64 - 1.0) - e.upper() * (1.0 - self.theta)
    }

    fn active_radius(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Shape(format!(
                "point has {} coordinates, profile lives in R^{}",
                x.len(),
                self.n
            )));
        }
        Ok(x[..self.k].iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `U(x)`. The value at `x~ = 0` is `-1` on the positive branch and a
    /// singular-point error on the negative one.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let r = self.active_radius(x)?;
        if r == 0.0 {
            return match self.branch() {
                Branch::Positive => Ok(-1.0),
                Branch::Negative => Err(Error::SingularPoint),
            };
        }
        Ok(self.branch().sign() * (r.powf(self.theta) - 1.0))
    }

    /// Closed-form Hessian `s theta r^{theta-2} (I_k + (theta-2) w w^T)` with
    /// `w = x~ / r`, embedded in the leading `k x k` block.
    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let r = self.active_radius(x)?;
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        let c = self.branch().sign() * self.theta * r.powf(self.theta - 2.0);
        let w: Vec<f64> = x[..self.k].iter().map(|v| v / r).collect();
        let mut h = SymMatrix::zeros(self.n);
        for i in 0..self.k {
            for j in i..self.k {
                let delta = if i == j { 1.0 } else { 0.0 };
                h.set(i, j, c * (delta + (self.theta - 2.0) * w[i] * w[j]));
            }
        }
        Ok(h)
    }

    /// `(radial, tangential)` eigenvalues at radius `r`.
    pub fn hessian_eigenvalues(&self, r: f64) -> (f64, f64) {
        let m = self.theta.abs() * r.powf(self.theta - 2.0);
        (-(1.0 - self.theta) * m, m)
    }

    /// `|D^2 U|(x) = |theta| (k - theta) r^{theta-2}`.
    pub fn hessian_abs_sum(&self, x: &[f64]) -> Result<f64> {
        let r = self.active_radius(x)?;
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(self.theta.abs() * (self.k as f64 - self.theta) * r.powf(self.theta - 2.0))
    }

    /// `P^-(D^2 U)(x)` in closed form.
    pub fn pucci_minus_at(&self, x: &[f64], e: &Ellipticity) -> Result<f64> {
        let r = self.active_radius(x)?;
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(self.theta.abs() * self.coefficient(e) * r.powf(self.theta - 2.0))
    }

    fn require_full(&self) -> Result<()> {
        if self.k != self.n {
            return Err(Error::Unsupported(format!(
                "closed-form ball norms need k = n (got k = {}, n = {})",
                self.k, self.n
            )));
        }
        Ok(())
    }
}

/// `p_k = k Lambda / (lambda (k-1) + Lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PucciExponent {
    pub k: usize,
    pub value: f64,
}

pub fn pucci_exponent(k: usize, e: &Ellipticity) -> Result<PucciExponent> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("Pucci exponent needs k >= 2, got {k}")));
    }
    let kf = k as f64;
    Ok(PucciExponent {
        k,
        // k / ((lambda/Lambda)(k-1) + 1) is exactly 1 when lambda == Lambda
        value: kf / (e.lower() / e.upper() * (kf - 1.0) + 1.0),
    })
}

/// `theta* = 1 - lambda (k-1) / Lambda`, where `P^-(D^2 U_theta) = 0`.
pub fn critical_theta(k: usize, e: &Ellipticity) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("critical theta needs k >= 2, got {k}")));
    }
    Ok(1.0 - e.lower() * (k as f64 - 1.0) / e.upper())
}

/// Integration region of an analytic norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormDomain {
    UnitBall,
    HalfBall,
}

/// `L_p` (quasi-)norm request; `p < 1` is allowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    p: f64,
    domain: NormDomain,
}

impl NormSpec {
    pub fn new(p: f64, domain: NormDomain) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("norm exponent must be positive, got {p}")));
        }
        Ok(NormSpec { p, domain })
    }

    pub fn unit_ball(p: f64) -> Result<Self> {
        Self::new(p, NormDomain::UnitBall)
    }

    pub fn half_ball(p: f64) -> Result<Self> {
        Self::new(p, NormDomain::HalfBall)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn domain(&self) -> NormDomain {
        self.domain
    }

    fn expect(&self, domain: NormDomain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::InvalidInput(format!(
                "norm requested over {:?}, this closed form integrates over {:?}",
                self.domain, domain
            )));
        }
        Ok(())
    }
}

/// `||P^-(D^2 U)||_{L_p(B_1)} = |theta| |c| (|dB_1| / (n - p(2-theta)))^{1/p}`.
pub fn analytic_rhs_norm(profile: &RadialProfile, e: &Ellipticity, spec: &NormSpec) -> Result<f64> {
    profile.require_full()?;
    spec.expect(NormDomain::UnitBall)?;
    let c = profile.coefficient(e).abs();
    if c == 0.0 {
        // the integrand vanishes identically
        return Ok(0.0);
    }
    let n = profile.n as f64;
    let p = spec.p;
    let a = n - p * (2.0 - profile.theta);
    if !(a > 0.0) {
        return Err(Error::Domain(format!(
            "|x|^(theta-2) is not L_{p} integrable on B_1 (n - p(2 - theta) = {a})"
        )));
    }
    Ok(profile.theta.abs() * c * (surface_area(profile.n) / a).powf(1.0 / p))
}

/// The same norm at `p = p_n`, in the simplified form
/// `|theta| c^{1-1/p_n} (|dB_1| (lambda(n-1) + Lambda) / n)^{1/p_n}`.
pub fn rhs_norm_at_pucci_exponent(profile: &RadialProfile, e: &Ellipticity) -> Result<f64> {
    profile.require_full()?;
    let c = profile.coefficient(e);
    if !(c > 0.0) {
        return Err(Error::Domain(format!(
            "theta = {} is not above the critical value",
            profile.theta
        )));
    }
    let n = profile.n as f64;
    let p = pucci_exponent(profile.n, e)?.value;
    let inner = surface_area(profile.n) * (e.lower() * (n - 1.0) + e.upper()) / n;
    Ok(profile.theta.abs() * c.powf(1.0 - 1.0 / p) * inner.powf(1.0 / p))
}

/// `||U||_{L_p(B_1)} = (|dB_1| / |theta| B((n - p theta^-)/|theta|, p + 1))^{1/p}`.
pub fn analytic_profile_norm(profile: &RadialProfile, spec: &NormSpec) -> Result<f64> {
    profile.require_full()?;
    spec.expect(NormDomain::UnitBall)?;
    let p = spec.p;
    let t = profile.theta.abs();
    let first = (profile.n as f64 - p * profile.theta_minus()) / t;
    let b = beta(first, p + 1.0)?;
    Ok((surface_area(profile.n) / t * b).powf(1.0 / p))
}

/// `||D^2 U||_{L_p(B_{1/2})} = |theta| (n - theta) (|dB_1| 2^{-a} / a)^{1/p}`
/// with `a = n - p(2 - theta)`. At `p = p_n`, `a = n c / (lambda(n-1) + Lambda)`.
///
/// Rejects `theta` at or below the critical value, where the ratio family
/// degenerates.
pub fn analytic_hessian_norm_halfball(
    profile: &RadialProfile,
    e: &Ellipticity,
    spec: &NormSpec,
) -> Result<f64> {
    profile.require_full()?;
    spec.expect(NormDomain::HalfBall)?;
    if !(profile.coefficient(e) > 0.0) {
        return Err(Error::Domain(format!(
            "theta = {} is not above the critical value {}",
            profile.theta,
            critical_theta(profile.k, e)?
        )));
    }
    let n = profile.n as f64;
    let p = spec.p;
    let a = n - p * (2.0 - profile.theta);
    if !(a > 0.0) {
        return Err(Error::Domain(format!(
            "|x|^(theta-2) is not L_{p} integrable on B_1/2 (n - p(2 - theta) = {a})"
        )));
    }
    let radial = surface_area(profile.n) * 0.5_f64.powf(a) / a;
    Ok(profile.theta.abs() * (n - profile.theta) * radial.powf(1.0 / p))
}

/// Ratio value that may be unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Ratio {
    Finite(f64),
    Unbounded,
}

impl Ratio {
    pub fn finite(self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(v),
            Ratio::Unbounded => None,
        }
    }
}

/// `(||U||_inf(B_1) - ||U||_inf(dB_1)) / ||P^-(D^2 U)||_{L_{p_n}(B_1)}`.
///
/// The numerator is 1 on the positive branch and unbounded on the negative one.
pub fn max_principle_ratio(profile: &RadialProfile, e: &Ellipticity) -> Result<Ratio> {
    profile.require_full()?;
    if profile.branch() == Branch::Negative {
        return Ok(Ratio::Unbounded);
    }
    let p = pucci_exponent(profile.n, e)?.value;
    let den = analytic_rhs_norm(profile, e, &NormSpec::unit_ball(p)?)?;
    if den == 0.0 {
        return Ok(Ratio::Unbounded);
    }
    Ok(Ratio::Finite(1.0 / den))
}

/// `||D^2 U||_{L_{p_n}(B_{1/2})} / (||P^- (D^2 U)||_{L_{p_n}(B_1)} + ||U||_{L_{p_n}(B_1)})`.
pub fn estimate_ratio(profile: &RadialProfile, e: &Ellipticity) -> Result<f64> {
    let p = pucci_exponent(profile.n, e)?.value;
    let num = analytic_hessian_norm_halfball(profile, e, &NormSpec::half_ball(p)?)?;
    let rhs = analytic_rhs_norm(profile, e, &NormSpec::unit_ball(p)?)?;
    let prof = analytic_profile_norm(profile, &NormSpec::unit_ball(p)?)?;
    Ok(num / (rhs + prof))
}

/// One row of a blow-up table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupRow {
    pub theta: f64,
    pub coefficient: f64,
    pub ratio_p4: Option<Ratio>,
    pub ratio_p5: Option<f64>,
}

/// Maximum-principle and estimate ratios of `U_theta^k` on `R^k` for each
/// `theta`. Inadmissible rows keep their coefficient and leave the ratios
/// empty.
pub fn blowup_curve(e: &Ellipticity, k: usize, thetas: &[f64]) -> Result<Vec<BlowupRow>> {
    critical_theta(k, e)?;
    Ok(thetas
        .iter()
        .map(|&theta| {
            let coefficient = e.lower() * (k as f64 - 1.0) - e.upper() * (1.0 - theta);
            let profile = RadialProfile::full(k, theta);
            let ratio_p4 = profile
                .as_ref()
                .ok()
                .and_then(|p| max_principle_ratio(p, e).ok());
            let ratio_p5 = profile.as_ref().ok().and_then(|p| estimate_ratio(p, e).ok());
            BlowupRow {
                theta,
                coefficient,
                ratio_p4,
                ratio_p5,
            }
        })
        .collect())
}

/// Log-log slopes of the finite p4 and p5 ratios against the coefficient.
pub fn blowup_slopes(rows: &[BlowupRow]) -> (Option<f64>, Option<f64>) {
    let (c4, r4): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| Some((r.coefficient, r.ratio_p4?.finite()?)))
        .unzip();
    let (c5, r5): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| Some((r.coefficient, r.ratio_p5?)))
        .unzip();
    (loglog_slope(&c4, &r4), loglog_slope(&c5, &r5))
}

pub fn blowup_table(rows: &[BlowupRow]) -> Table {
    let mut t = Table::new(["theta", "coefficient", "ratio_p4", "ratio_p5"]);
    for r in rows {
        let p4 = match r.ratio_p4 {
            Some(Ratio::Finite(v)) => Cell::Num(v),
            Some(Ratio::Unbounded) => Cell::Text("unbounded".into()),
            None => Cell::Empty,
        };
        t.push(vec![r.theta.into(), r.coefficient.into(), p4, r.ratio_p5.into()]);
    }
    t
}

/// `theta = theta* + c / Lambda` for each coefficient value `c`, i.e. the
/// parameters whose coefficient `lambda(k-1) - Lambda(1-theta)` equals `c`.
pub fn thetas_for_coefficients(k: usize, e: &Ellipticity, coefficients: &[f64]) -> Result<Vec<f64>> {
    let star = critical_theta(k, e)?;
    Ok(coefficients.iter().map(|c| star + c / e.upper()).collect())
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
