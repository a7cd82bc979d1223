//! Periodic mollification of fields and of discrete measures.

use super::{Grid, ScalarField, MAX_GRID_DIM};
use crate::error::{Error, Result};
use crate::sum::pairwise_sum;

/// `exp(-1/(1 - s^2))` for `s < 1`, zero otherwise.
fn bump(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn check_radius(grid: &Grid, delta: f64) -> Result<()> {
    if !grid.is_torus() {
        return Err(Error::InvalidInput("mollification is defined on the torus only".into()));
    }
    if !delta.is_finite() || delta >= 0.5 {
        return Err(Error::InvalidInput(format!(
            "mollifier radius must be finite and below 1/2, got {delta}"
        )));
    }
    if delta < 2.0 * grid.spacing() {
        return Err(Error::UnderResolved {
            delta,
            spacing: grid.spacing(),
        });
    }
    Ok(())
}

/// Smooth bump of radius `delta` sampled on the grid offsets, unit discrete mass.
#[derive(Clone, Debug)]
pub struct Mollifier {
    grid: Grid,
    delta: f64,
    offsets: Vec<[isize; MAX_GRID_DIM]>,
    weights: Vec<f64>,
}

impl Mollifier {
    pub fn new(grid: &Grid, delta: f64) -> Result<Self> {
        check_radius(grid, delta)?;
        let h = grid.spacing();
        let reach = (delta / h).ceil() as isize;
        let d = grid.dim();
        let side = (2 * reach + 1) as usize;
        let mut offsets = Vec::new();
        let mut raw = Vec::new();
        for flat in 0..side.pow(d as u32) {
            let mut k = [0isize; MAX_GRID_DIM];
            let mut rest = flat;
            for a in (0..d).rev() {
                k[a] = (rest % side) as isize - reach;
                rest /= side;
            }
            let r = k.iter().map(|&c| (c as f64 * h).powi(2)).sum::<f64>().sqrt();
            let w = bump(r / delta);
            if w > 0.0 {
                offsets.push(k);
                raw.push(w);
            }
        }
        // normalized weights stand for h^n eta^delta(k h)
        let total = pairwise_sum(&raw);
        let weights = raw.iter().map(|w| w / total).collect();
        Ok(Mollifier {
            grid: *grid,
            delta,
            offsets,
            weights,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Normalized kernel samples `h^n eta^delta(k h)`, in offset order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offsets(&self) -> &[[isize; MAX_GRID_DIM]] {
        &self.offsets
    }

    /// Discrete mass `sum_k h^n eta^delta(k h)`.
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

/// `u^delta(x_i) = sum_k w_k u(x_i - k h)` with periodic wrap.
pub fn mollify(u: &ScalarField, m: &Mollifier) -> Result<ScalarField> {
    if *u.grid() != m.grid {
        return Err(Error::Shape("mollifier built for another grid".into()));
    }
    let g = m.grid;
    let vals = u.values();
    let mut out = Vec::with_capacity(g.len());
    let mut terms = vec![0.0; m.weights.len()];
    for i in 0..g.len() {
        for (t, (k, w)) in terms.iter_mut().zip(m.offsets.iter().zip(&m.weights)) {
            let neg = [-k[0], -k[1], -k[2]];
            *t = w * vals[g.offset(i, &neg).expect("torus wraps")];
        }
        out.push(pairwise_sum(&terms));
    }
    Ok(ScalarField::from_values_unchecked(g, out))
}

/// Point mass of nonnegative weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Finite nonnegative measure on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if a.point.len() != dim {
                return Err(Error::Shape(format!("atom {i} has {} coordinates, expected {dim}", a.point.len())));
            }
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidInput(format!("atom {i} has weight {}", a.weight)));
            }
            if a.point.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("atom {i} has a non-finite coordinate")));
            }
        }
        Ok(DiscreteMeasure { dim, atoms })
    }

    /// Single atom of the given weight.
    pub fn dirac(point: &[f64], weight: f64) -> Result<Self> {
        Self::new(point.len(), vec![Atom { point: point.to_vec(), weight }])
    }

    /// Total mass spread evenly over the grid nodes, one atom per node.
    pub fn uniform(grid: &Grid, mass: f64) -> Result<Self> {
        let w = mass / grid.len() as f64;
        let atoms = (0..grid.len())
            .map(|i| Atom {
                point: grid.coords(i)[..grid.dim()].to_vec(),
                weight: w,
            })
            .collect();
        Self::new(grid.dim(), atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        let w: Vec<f64> = self.atoms.iter().map(|a| a.weight).collect();
        pairwise_sum(&w)
    }
}

/// Density `f^delta(x) = sum_atoms w eta^delta(x - y)` on the grid.
///
/// Each atom's kernel is renormalized on the grid, so the discrete integral
/// of the output equals the total mass.
pub fn mollify_measure(mu: &DiscreteMeasure, grid: &Grid, delta: f64) -> Result<ScalarField> {
    check_radius(grid, delta)?;
    if mu.dim() != grid.dim() {
        return Err(Error::Shape("measure and grid dimensions differ".into()));
    }
    let d = grid.dim();
    let h = grid.spacing();
    let n = grid.res() as isize;
    let reach = (delta / h).ceil() as isize + 1;
    let side = (2 * reach + 1) as usize;
    let vol = grid.cell_volume();
    let mut out = vec![0.0; grid.len()];
    let mut nodes = Vec::new();
    let mut raw = Vec::new();
    for atom in mu.atoms() {
        if atom.weight == 0.0 {
            continue;
        }
        // nearest node below the atom along each axis
        let mut base = [0isize; MAX_GRID_DIM];
        for a in 0..d {
            let y = atom.point[a].rem_euclid(1.0);
            base[a] = ((y / h) - 0.5).floor() as isize;
        }
        nodes.clear();
        raw.clear();
        for flat in 0..side.pow(d as u32) {
            let mut m = [0usize; MAX_GRID_DIM];
            let mut r2 = 0.0;
            let mut rest = flat;
            for a in (0..d).rev() {
                let j = base[a] + (rest % side) as isize - reach;
                rest /= side;
                let x = (j as f64 + 0.5) * h;
                let mut diff = (x - atom.point[a].rem_euclid(1.0)).rem_euclid(1.0);
                if diff > 0.5 {
                    diff -= 1.0;
                }
                r2 += diff * diff;
                m[a] = j.rem_euclid(n) as usize;
            }
            let w = bump(r2.sqrt() / delta);
            if w > 0.0 {
                nodes.push(grid.linear_index(&m));
                raw.push(w);
            }
        }
        let total = pairwise_sum(&raw);
        if total == 0.0 {
            return Err(Error::UnderResolved {
                delta,
                spacing: h,
            });
        }
        for (&i, &w) in nodes.iter().zip(&raw) {
            out[i] += atom.weight * w / (total * vol);
        }
    }
    Ok(ScalarField::from_values_unchecked(*grid, out))
}
