//! Linear sub-solves for `tau u - Tr(A D^2_h u) = f` at a frozen policy.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::Policy;
use crate::grid::{Grid, HessianStencil};

/// Assembled operator in compressed-row form.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    grid: Grid,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    coefs: Vec<f64>,
    diag: Vec<f64>,
}

impl LinearSystem {
    pub fn assemble(stencil: &HessianStencil, policy: &Policy, tau: f64) -> Self {
        let grid = *stencil.grid();
        let d = grid.dim();
        let h2 = grid.spacing().powi(2);
        let mut row_start = Vec::with_capacity(grid.len() + 1);
        let mut cols = Vec::new();
        let mut coefs = Vec::new();
        let mut diag = Vec::with_capacity(grid.len());
        let mut entries: Vec<(usize, f64)> = Vec::new();
        row_start.push(0);
        for i in 0..grid.len() {
            let a = policy.node(i);
            let ix = stencil.node_indices(i);
            entries.clear();
            entries.push((i, tau));
            for k in 0..d {
                let w = a.get(k, k) / h2;
                entries.extend_from_slice(&[(ix[3 * k], 2.0 * w), (ix[3 * k + 1], -w), (ix[3 * k + 2], -w)]);
            }
            let mut s = 3 * d;
            for k in 0..d {
                for l in k + 1..d {
                    // off-diagonal pair counted twice in Tr(AX), cross stencil carries 1/(4h^2)
                    let w = a.get(k, l) / (2.0 * h2);
                    entries.extend_from_slice(&[(ix[s], -w), (ix[s + 1], w), (ix[s + 2], w), (ix[s + 3], -w)]);
                    s += 4;
                }
            }
            entries.sort_by_key(|e| e.0);
            let mut dii = 0.0;
            let mut k = 0;
            while k < entries.len() {
                let col = entries[k].0;
                let mut c = 0.0;
                while k < entries.len() && entries[k].0 == col {
                    c += entries[k].1;
                    k += 1;
                }
                if col == i {
                    dii = c;
                }
                cols.push(col);
                coefs.push(c);
            }
            diag.push(dii);
            row_start.push(cols.len());
        }
        LinearSystem {
            grid,
            row_start,
            cols,
            coefs,
            diag,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_start[i]..self.row_start[i + 1] {
                s += self.coefs[k] * x[self.cols[k]];
            }
            *o = s;
        }
    }

    pub fn residual(&self, x: &[f64], b: &[f64], out: &mut [f64]) {
        self.apply(x, out);
        for (o, bi) in out.iter_mut().zip(b) {
            *o = bi - *o;
        }
    }

    /// `min_i h^2 (|a_ii| - sum_{j != i} |a_ij|)`; negative when some row is
    /// not diagonally dominant.
    pub fn dominance_margin(&self) -> f64 {
        let h2 = self.grid.spacing().powi(2);
        (0..self.grid.len())
            .map(|i| {
                let off: f64 = (self.row_start[i]..self.row_start[i + 1])
                    .filter(|&k| self.cols[k] != i)
                    .map(|k| self.coefs[k].abs())
                    .sum();
                h2 * (self.diag[i].abs() - off)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Dense copy, for small test grids.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.grid.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for k in self.row_start[i]..self.row_start[i + 1] {
                row[self.cols[k]] += self.coefs[k];
            }
        }
        m
    }
}

/// Exact inverse of `tau - a Laplacian_h` on the torus by FFT.
pub struct FftPreconditioner {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    symbol: Vec<f64>,
}

impl FftPreconditioner {
    pub fn new(grid: &Grid, tau: f64, a: f64) -> Self {
        let n = grid.res();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let h2 = grid.spacing().powi(2);
        let s1: Vec<f64> = (0..n)
            .map(|k| 4.0 / h2 * (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2))
            .collect();
        let symbol = (0..grid.len())
            .map(|i| {
                let m = grid.multi_index(i);
                tau + a * m[..grid.dim()].iter().map(|&k| s1[k]).sum::<f64>()
            })
            .collect();
        FftPreconditioner {
            grid: *grid,
            forward,
            inverse,
            symbol,
        }
    }

    fn transform(&self, buf: &mut [Complex<f64>], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.res();
        let d = self.grid.dim();
        let mut line = vec![Complex::new(0.0, 0.0); n];
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            for start in 0..self.grid.len() {
                if self.grid.multi_index(start)[axis] != 0 {
                    continue;
                }
                for (k, l) in line.iter_mut().enumerate() {
                    *l = buf[start + k * stride];
                }
                fft.process(&mut line);
                for (k, l) in line.iter().enumerate() {
                    buf[start + k * stride] = *l;
                }
            }
        }
    }

    pub fn apply(&self, r: &[f64], out: &mut [f64]) {
        let mut buf: Vec<Complex<f64>> = r.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b /= *s;
        }
        self.transform(&mut buf, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re * scale;
        }
    }
}

/// Outcome of a linear sub-solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Restarted GMRES, right-preconditioned, until `sup |b - Ax| <= target`.
pub fn gmres(
    sys: &LinearSystem,
    pre: &FftPreconditioner,
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    target: f64,
    max_iter: usize,
) -> LinearOutcome {
    let n = b.len();
    let m = restart.max(1);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut precond: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut hess = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    let mut total = 0;
    let mut last = f64::INFINITY;
    let rms = (n as f64).sqrt();
    loop {
        sys.residual(x, b, &mut r);
        let res = sup(&r);
        if res <= target {
            return LinearOutcome {
                iterations: total,
                residual: res,
                converged: true,
            };
        }
        if total >= max_iter || res > 0.999 * last {
            return LinearOutcome {
                iterations: total,
                residual: res,
                converged: false,
            };
        }
        last = res;
        let beta = dot(&r, &r).sqrt();
        basis.clear();
        precond.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            let mut z = vec![0.0; n];
            pre.apply(&basis[j], &mut z);
            sys.apply(&z, &mut w);
            precond.push(z);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                hess[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hn = dot(&w, &w).sqrt();
            hess[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let den = hess[j][j].hypot(hess[j + 1][j]);
            cs[j] = hess[j][j] / den;
            sn[j] = hess[j + 1][j] / den;
            hess[j][j] = den;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            total += 1;
            if g[j + 1].abs() / rms <= 0.25 * target || hn == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| hess[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&precond[k]) {
                *xi += yk * zi;
            }
        }
    }
}

/// Gauss-Seidel sweeps, red nodes (even index sum) before black, until
/// `sup |b - Ax| <= target`.
pub fn red_black(sys: &LinearSystem, b: &[f64], x: &mut [f64], target: f64, max_sweeps: usize) -> LinearOutcome {
    let g = sys.grid;
    let color: Vec<usize> = (0..g.len())
        .map(|i| g.multi_index(i)[..g.dim()].iter().sum::<usize>() % 2)
        .collect();
    let order: Vec<usize> = (0..2)
        .flat_map(|c| (0..g.len()).filter(|&i| color[i] == c).collect::<Vec<_>>())
        .collect();
    let mut r = vec![0.0; b.len()];
    for sweep in 0..=max_sweeps {
        sys.residual(x, b, &mut r);
        let res = sup(&r);
        if res <= target || sweep == max_sweeps {
            return LinearOutcome {
                iterations: sweep,
                residual: res,
                converged: res <= target,
            };
        }
        for &i in &order {
            let mut s = b[i];
            for k in sys.row_start[i]..sys.row_start[i + 1] {
                let j = sys.cols[k];
                if j != i {
                    s -= sys.coefs[k] * x[j];
                }
            }
            x[i] = s / sys.diag[i];
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, HessianStencil};
    use crate::matrix::SymMatrix;
    use crate::operator::Ellipticity;
    use std::f64::consts::PI;

    fn system(grid: &Grid, a: SymMatrix, tau: f64) -> LinearSystem {
        let e = Ellipticity::new(1.0, 2.0).unwrap();
        let p = Policy::constant(grid, a, &e).unwrap();
        LinearSystem::assemble(&HessianStencil::new(grid), &p, tau)
    }

    #[test]
    fn rows_sum_to_tau() {
        let g = Grid::torus(2, 8).unwrap();
        let a = SymMatrix::from_upper(2, &[1.5, 0.3, 1.2]).unwrap();
        let sys = system(&g, a, 0.7);
        for row in sys.to_dense() {
            assert!((row.iter().sum::<f64>() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_term_breaks_dominance() {
        let g = Grid::torus(2, 8).unwrap();
        let diagonal = system(&g, SymMatrix::diag(&[1.0, 2.0]), 0.5);
        assert!(diagonal.dominance_margin() > 0.0);
        let mixed = system(&g, SymMatrix::from_upper(2, &[1.5, 0.4, 1.5]).unwrap(), 0.5);
        assert!(mixed.dominance_margin() < 0.0);
    }

    #[test]
    fn preconditioner_inverts_laplacian() {
        let g = Grid::torus(2, 16).unwrap();
        let sys = system(&g, SymMatrix::scalar(2, 1.5), 0.3);
        let pre = FftPreconditioner::new(&g, 0.3, 1.5);
        let u = sample(&g, |x| (2.0 * PI * x[0]).sin() + x[1] * (1.0 - x[1])).unwrap();
        let mut f = vec![0.0; g.len()];
        sys.apply(u.values(), &mut f);
        let mut back = vec![0.0; g.len()];
        pre.apply(&f, &mut back);
        for (a, b) in back.iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn krylov_and_sweeps_agree() {
        let g = Grid::torus(2, 16).unwrap();
        let a = SymMatrix::from_upper(2, &[1.6, 0.2, 1.1]).unwrap();
        let sys = system(&g, a, 1.0);
        let pre = FftPreconditioner::new(&g, 1.0, 1.5);
        let b = sample(&g, |x| (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin() + 0.5).unwrap();
        let mut x1 = vec![0.0; g.len()];
        let o1 = gmres(&sys, &pre, b.values(), &mut x1, 30, 1e-11, 500);
        assert!(o1.converged, "{o1:?}");
        let mut x2 = vec![0.0; g.len()];
        let o2 = red_black(&sys, b.values(), &mut x2, 1e-11, 20_000);
        assert!(o2.converged, "{o2:?}");
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}
