//! Sampled fields on the flat torus `T^n` and on the unit cube `Q_1`.
//!
//! Nodes sit at cell centers: `x_i = (i + 1/2) h` on the torus and
//! `x_i = -1/2 + (i + 1/2) h` on the cube, with `h = 1/N`. On a cube with
//! even `N` no node lies on a coordinate hyperplane through the origin, so
//! singular radial profiles can be sampled directly.

mod io;
mod mollify;
mod paraboloid;

pub use io::{read_field, write_field, FIELD_MAGIC};
pub use mollify::{mollify, mollify_measure, Atom, DiscreteMeasure, Mollifier};
pub use paraboloid::{
    interior_mask, measure_decay_curve, paraboloid_touch_set, DecayCurve, ParaboloidQuery, TouchSet,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{jacobi, SymMatrix};
use crate::sum::{pairwise_sum, pairwise_sum_by};

/// Largest supported spatial dimension.
pub const MAX_GRID_DIM: usize = 3;

/// Periodic torus or the (non-periodic) unit cube centered at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Torus,
    Box,
}

/// Uniform grid with `res` cell-centered nodes per axis and spacing `1/res`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    res: usize,
    domain: Domain,
}

impl Grid {
    /// Torus grid; `dim` in 1..=3 and `res >= 8`.
    pub fn torus(dim: usize, res: usize) -> Result<Self> {
        if !(1..=MAX_GRID_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!("grid dimension {dim} outside 1..=3")));
        }
        if res < 8 {
            return Err(Error::InvalidInput(format!("torus grids need N >= 8, got {res}")));
        }
        Ok(Grid {
            dim,
            res,
            domain: Domain::Torus,
        })
    }

    /// Grid on `Q_1 = (-1/2, 1/2)^dim`; `res >= 4`.
    pub fn unit_box(dim: usize, res: usize) -> Result<Self> {
        if !(1..=MAX_GRID_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!("grid dimension {dim} outside 1..=3")));
        }
        if res < 4 {
            return Err(Error::InvalidInput(format!("box grids need N >= 4, got {res}")));
        }
        Ok(Grid {
            dim,
            res,
            domain: Domain::Box,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_torus(&self) -> bool {
        self.domain == Domain::Torus
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.res as f64
    }

    /// `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.res.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn origin(&self) -> f64 {
        match self.domain {
            Domain::Torus => 0.0,
            Domain::Box => -0.5,
        }
    }

    /// Per-axis indices of a node (unused axes are 0).
    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_GRID_DIM] {
        let mut out = [0; MAX_GRID_DIM];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.res;
            idx /= self.res;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi[..self.dim].iter().fold(0, |acc, &i| acc * self.res + i)
    }

    /// Coordinates of a node (unused axes are 0).
    pub fn coords(&self, idx: usize) -> [f64; MAX_GRID_DIM] {
        let m = self.multi_index(idx);
        let h = self.spacing();
        let mut x = [0.0; MAX_GRID_DIM];
        for a in 0..self.dim {
            x[a] = self.origin() + (m[a] as f64 + 0.5) * h;
        }
        x
    }

    /// Index of the node displaced by `shift` cells along each axis: wraps on
    /// the torus, `None` outside the cube.
    pub fn offset(&self, idx: usize, shift: &[isize]) -> Option<usize> {
        let mut m = self.multi_index(idx);
        let n = self.res as isize;
        for a in 0..self.dim {
            let s = shift.get(a).copied().unwrap_or(0);
            let j = m[a] as isize + s;
            let j = match self.domain {
                Domain::Torus => j.rem_euclid(n),
                Domain::Box if (0..n).contains(&j) => j,
                Domain::Box => return None,
            };
            m[a] = j as usize;
        }
        Some(self.linear_index(&m))
    }
}

/// Sampled scalar function with all values finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid has {} nodes, got {} values",
                grid.len(),
                values.len()
            )));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("node {i} at {:?}", &grid.coords(i)[..grid.dim()]),
                value: v,
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete integral `h^n sum u_i`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * pairwise_sum(&self.values)
    }

    /// Average over the nodes (equals the integral on the unit-volume domains).
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(h^n sum |u_i|^p)^{1/p}`; a quasi-norm for `p < 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_of(&self.grid, &self.values, p, None)
    }

    /// `L_p` norm restricted to the nodes where `mask` is true.
    pub fn lp_norm_masked(&self, p: f64, mask: &[bool]) -> Result<f64> {
        lp_norm_of(&self.grid, &self.values, p, Some(mask))
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &ScalarField, f: F) -> Result<ScalarField> {
        self.require_same_grid(other)?;
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn require_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!(
                "fields live on different grids: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// `v(x) = u(x - cells h e_axis)` on the torus.
    pub fn shifted(&self, axis: usize, cells: isize) -> Result<ScalarField> {
        if !self.grid.is_torus() || axis >= self.grid.dim() {
            return Err(Error::InvalidInput("shift needs a torus field and a valid axis".into()));
        }
        let mut shift = [0isize; MAX_GRID_DIM];
        shift[axis] = -cells;
        let values = (0..self.len())
            .map(|i| self.values[self.grid.offset(i, &shift).expect("torus wraps")])
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }
}

fn lp_norm_of(grid: &Grid, values: &[f64], p: f64, mask: Option<&[bool]>) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("norm exponent must be positive, got {p}")));
    }
    if let Some(m) = mask {
        if m.len() != values.len() {
            return Err(Error::Shape("mask length differs from field length".into()));
        }
    }
    let terms: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| mask.is_none_or(|m| m[*i]))
        .map(|(_, v)| v.abs())
        .collect();
    let s = if p == 1.0 {
        pairwise_sum(&terms)
    } else {
        pairwise_sum_by(&terms, |v| v.powf(p))
    };
    Ok((grid.cell_volume() * s).powf(1.0 / p))
}

/// Evaluates `f` at every node. A non-finite sample is an error naming the node.
pub fn sample<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F) -> Result<ScalarField> {
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.coords(i);
        let v = f(&x[..grid.dim()]);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                location: format!("node {i} at {:?}", &x[..grid.dim()]),
                value: v,
            });
        }
        values.push(v);
    }
    Ok(ScalarField {
        grid: *grid,
        values,
    })
}

/// Fallible variant of [`sample`].
pub fn try_sample<F: Fn(&[f64]) -> Result<f64>>(grid: &Grid, f: F) -> Result<ScalarField> {
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.coords(i);
        values.push(f(&x[..grid.dim()])?);
    }
    ScalarField::from_values(*grid, values)
}

/// Node indices used by the second-difference stencils.
///
/// Pure second derivatives use the 3-point stencil and mixed ones the
/// 4-point cross `(u(+i+j) - u(+i-j) - u(-i+j) + u(-i-j)) / 4h^2`. On the
/// torus indices wrap; on the cube the stencil center is moved inward at the
/// boundary layer, which keeps it exact on quadratics.
#[derive(Clone, Debug)]
pub struct HessianStencil {
    grid: Grid,
    width: usize,
    indices: Vec<usize>,
}

impl HessianStencil {
    pub fn new(grid: &Grid) -> Self {
        let d = grid.dim();
        let width = 3 * d + 4 * d * (d - 1) / 2;
        let n = grid.res() as isize;
        let mut indices = Vec::with_capacity(width * grid.len());
        for idx in 0..grid.len() {
            let m = grid.multi_index(idx);
            // center of the stencil along the given axes
            let centered = |axes: &[usize]| -> usize {
                match grid.domain() {
                    Domain::Torus => idx,
                    Domain::Box => {
                        let mut c = m;
                        for &a in axes {
                            c[a] = (c[a] as isize).clamp(1, n - 2) as usize;
                        }
                        grid.linear_index(&c)
                    }
                }
            };
            let at = |center: usize, shift: [isize; MAX_GRID_DIM]| -> usize {
                grid.offset(center, &shift).expect("stencil stays inside the grid")
            };
            for a in 0..d {
                let c = centered(&[a]);
                let mut e = [0isize; MAX_GRID_DIM];
                e[a] = 1;
                let mut me = [0isize; MAX_GRID_DIM];
                me[a] = -1;
                indices.extend_from_slice(&[c, at(c, e), at(c, me)]);
            }
            for a in 0..d {
                for b in a + 1..d {
                    let c = centered(&[a, b]);
                    let mut s = [0isize; MAX_GRID_DIM];
                    for (sa, sb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        s[a] = sa;
                        s[b] = sb;
                        indices.push(at(c, s));
                    }
                }
            }
        }
        HessianStencil {
            grid: *grid,
            width,
            indices,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Stencil nodes of `idx`: `(center, +e_a, -e_a)` per axis, then
    /// `(++, +-, -+, --)` per axis pair `a < b`.
    pub fn node_indices(&self, idx: usize) -> &[usize] {
        &self.indices[idx * self.width..(idx + 1) * self.width]
    }

    /// Discrete Hessian of `values` at node `idx`.
    #[inline]
    pub fn hessian_at(&self, values: &[f64], idx: usize) -> SymMatrix {
        let d = self.grid.dim();
        let h2 = self.grid.spacing().powi(2);
        let ix = &self.indices[idx * self.width..(idx + 1) * self.width];
        let mut m = SymMatrix::zeros(d);
        for a in 0..d {
            let (c, p, q) = (ix[3 * a], ix[3 * a + 1], ix[3 * a + 2]);
            m.set(a, a, (values[p] - 2.0 * values[c] + values[q]) / h2);
        }
        let mut k = 3 * d;
        for a in 0..d {
            for b in a + 1..d {
                let (pp, pm, mp, mm) = (ix[k], ix[k + 1], ix[k + 2], ix[k + 3]);
                m.set(a, b, (values[pp] - values[pm] - values[mp] + values[mm]) / (4.0 * h2));
                k += 4;
            }
        }
        m
    }

    /// `Tr(A D^2_h u)` at node `idx`, without forming the Hessian.
    #[inline]
    pub fn trace_at(&self, values: &[f64], idx: usize, a: &SymMatrix) -> f64 {
        a.trace_product(&self.hessian_at(values, idx))
    }
}

/// Per-node discrete Hessians.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianField {
    grid: Grid,
    nodes: Vec<SymMatrix>,
}

impl HessianField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[SymMatrix] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &SymMatrix {
        &self.nodes[idx]
    }

    /// Field of `|X|` (sum of absolute eigenvalues) per node.
    pub fn abs_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.nodes.iter().map(|x| jacobi(x).abs_sum()).collect(),
        }
    }

    /// `L_p` norm of the pointwise `|X|`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        self.abs_field().lp_norm(p)
    }

    pub fn lp_norm_masked(&self, p: f64, mask: &[bool]) -> Result<f64> {
        self.abs_field().lp_norm_masked(p, mask)
    }
}

/// Second-order discrete Hessian at every node.
pub fn discrete_hessian(u: &ScalarField) -> HessianField {
    let stencil = HessianStencil::new(u.grid());
    hessian_with(&stencil, u)
}

pub fn hessian_with(stencil: &HessianStencil, u: &ScalarField) -> HessianField {
    assert_eq!(stencil.grid(), u.grid(), "stencil built for another grid");
    HessianField {
        grid: *u.grid(),
        nodes: (0..u.len()).map(|i| stencil.hessian_at(u.values(), i)).collect(),
    }
}

/// Symbol of the 3-point second difference on `cos(2 pi x / h...)`:
/// `s_h = (2/h^2)(1 - cos(2 pi h))`, so that `D_11 cos(2 pi x_1) = -s_h cos(2 pi x_1)`.
pub fn cosine_symbol(h: f64) -> f64 {
    2.0 / (h * h) * (1.0 - (2.0 * std::f64::consts::PI * h).cos())
}
