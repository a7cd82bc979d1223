//! Pucci extremal operators and their Bellman representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{jacobi, Spectrum, SymMatrix};

/// Ellipticity bounds `0 < lambda <= Lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipticity {
    lower: f64,
    upper: f64,
}

impl Ellipticity {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower <= 0.0 || lower > upper {
            return Err(Error::InvalidInput(format!(
                "ellipticity requires 0 < lambda <= Lambda, got ({lower}, {upper})"
            )));
        }
        Ok(Ellipticity { lower, upper })
    }

    /// `lambda`.
    #[inline]
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// `Lambda`.
    #[inline]
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// True when `lambda < Lambda`.
    pub fn strict_gap(&self) -> bool {
        self.lower < self.upper
    }

    /// `(Lambda + lambda) / 2`.
    pub fn mean(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }

    /// `(Lambda - lambda) / 2`.
    pub fn half_gap(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }
}

/// Which extremal operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extremal {
    Plus,
    Minus,
}

impl Extremal {
    pub fn apply(self, x: &SymMatrix, e: &Ellipticity) -> f64 {
        match self {
            Extremal::Plus => pucci_plus(x, e),
            Extremal::Minus => pucci_minus(x, e),
        }
    }
}

/// `Lambda Tr(X^+) - lambda Tr(X^-)` from precomputed eigen-data.
pub fn pucci_plus_spectrum(s: &Spectrum, e: &Ellipticity) -> f64 {
    let (pos, neg) = s.trace_parts();
    e.upper * pos - e.lower * neg
}

/// `lambda Tr(X^+) - Lambda Tr(X^-)` from precomputed eigen-data.
pub fn pucci_minus_spectrum(s: &Spectrum, e: &Ellipticity) -> f64 {
    let (pos, neg) = s.trace_parts();
    e.lower * pos - e.upper * neg
}

/// Maximal Pucci operator. Non-finite entries propagate to a NaN result.
pub fn pucci_plus(x: &SymMatrix, e: &Ellipticity) -> f64 {
    pucci_plus_spectrum(&jacobi(x), e)
}

/// Minimal Pucci operator. Non-finite entries propagate to a NaN result.
pub fn pucci_minus(x: &SymMatrix, e: &Ellipticity) -> f64 {
    pucci_minus_spectrum(&jacobi(x), e)
}

/// Admissible diffusion matrix attaining `P^-(X) = min Tr(AX)`.
///
/// `A* = Q diag(a) Q^T` with `a_i = lambda` on positive and zero
/// eigenvalues and `a_i = Lambda` on negative ones.
pub fn bellman_minimizer(x: &SymMatrix, e: &Ellipticity) -> SymMatrix {
    bellman_minimizer_spectrum(&jacobi(x), e)
}

pub fn bellman_minimizer_spectrum(s: &Spectrum, e: &Ellipticity) -> SymMatrix {
    let (lo, hi) = (e.lower, e.upper);
    // Q diag(a) Q^T = lo*I + (hi - lo) * (projection onto negative eigenspace)
    let mut a = s.map_eigenvalues(|ev| if ev < 0.0 { hi - lo } else { 0.0 });
    for i in 0..s.dim() {
        a.set(i, i, a.get(i, i) + lo);
    }
    a
}

/// `|P^-(X) - (Lambda+lambda)/2 Tr(X) + (Lambda-lambda)/2 |X||`.
///
/// The trace is read off the diagonal, the other two terms come from the
/// spectrum, so the residual compares two independent routes.
pub fn identity_residual(x: &SymMatrix, e: &Ellipticity) -> f64 {
    let s = jacobi(x);
    let lhs = pucci_minus_spectrum(&s, e);
    let rhs = e.mean() * x.trace() - e.half_gap() * s.abs_sum();
    (lhs - rhs).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ell(a: f64, b: f64) -> Ellipticity {
        Ellipticity::new(a, b).unwrap()
    }

    #[test]
    fn ellipticity_validation() {
        assert!(Ellipticity::new(0.0, 1.0).is_err());
        assert!(Ellipticity::new(2.0, 1.0).is_err());
        assert!(Ellipticity::new(1.0, f64::INFINITY).is_err());
        assert!(ell(1.0, 1.0).strict_gap() == false);
        assert!(ell(1.0, 2.0).strict_gap());
    }

    #[test]
    fn pucci_on_diagonals() {
        let e = ell(1.0, 2.0);
        let x = SymMatrix::diag(&[1.0, -1.0]);
        assert_eq!(pucci_plus(&x, &e), 1.0);
        assert_eq!(pucci_minus(&x, &e), -1.0);
        assert_eq!(pucci_minus(&SymMatrix::diag(&[3.0, -2.0]), &e), -1.0);
    }

    #[test]
    fn laplacian_degeneration() {
        let e = ell(1.0, 1.0);
        let x = SymMatrix::from_upper(3, &[0.3, -1.2, 0.7, 2.0, 0.1, -4.0]).unwrap();
        assert!((pucci_plus(&x, &e) - x.trace()).abs() < 1e-14);
        assert!((pucci_minus(&x, &e) - x.trace()).abs() < 1e-14);
    }

    #[test]
    fn bellman_on_diagonal_and_zero() {
        let e = ell(1.0, 2.0);
        let x = SymMatrix::diag(&[3.0, -2.0]);
        let a = bellman_minimizer(&x, &e);
        assert_eq!(a, SymMatrix::diag(&[1.0, 2.0]));
        assert_eq!(a.trace_product(&x), -1.0);
        let z = SymMatrix::zeros(3);
        assert_eq!(bellman_minimizer(&z, &e), SymMatrix::identity(3));
    }

    #[test]
    fn identity_examples() {
        let x = SymMatrix::diag(&[2.0, -3.0]);
        let e = ell(1.0, 3.0);
        assert_eq!(pucci_minus(&x, &e), -7.0);
        assert_eq!(identity_residual(&x, &e), 0.0);
        assert_eq!(identity_residual(&x, &ell(2.0, 2.0)), 0.0);
    }

    #[test]
    fn extremal_dispatch() {
        let e = ell(1.0, 4.0);
        let x = SymMatrix::diag(&[1.0, -1.0]);
        assert_eq!(Extremal::Plus.apply(&x, &e), 3.0);
        assert_eq!(Extremal::Minus.apply(&x, &e), -3.0);
    }
}
