//! Fixed-order reductions.
//!
//! Every norm, mean and total in the crate goes through [`pairwise_sum`], so
//! results depend only on the input order and never on evaluation strategy.

const BLOCK: usize = 8;

/// Pairwise (cascade) summation with a fixed split point.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(x)` over `values`.
pub fn pairwise_sum_by<F>(values: &[f64], f: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let mapped: Vec<f64> = values.iter().map(|&v| f(v)).collect();
    pairwise_sum(&mapped)
}

/// Least-squares slope of `ys` against `xs`.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let den = pairwise_sum(&sxx);
    if den == 0.0 {
        return None;
    }
    Some(pairwise_sum(&sxy) / den)
}

/// Slope of `ln y` against `ln x`, skipping pairs where either is not positive.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    linear_slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = (1..10).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.75)).collect();
        let s = loglog_slope(&xs, &ys).unwrap();
        assert!((s + 0.75).abs() < 1e-12);
    }

    #[test]
    fn slope_needs_two_points() {
        assert!(linear_slope(&[1.0], &[2.0]).is_none());
        assert!(loglog_slope(&[1.0, 2.0], &[0.0, 0.0]).is_none());
    }
}
