//! Sets of nodes touched from above by concave paraboloids of opening `h`.
//!
//! A node `x0` is touched when some slope `q` satisfies
//! `u(x) - u(x0) - (h/2)|x - x0|^2 <= q . (x - x0)` at every node `x`. For
//! each node this is a feasibility problem in `q`: an interval intersection
//! in 1-D and a half-plane intersection (polygon clipping) in 2-D.

use super::{Grid, ScalarField};
use crate::error::{Error, Result};
use crate::sum::loglog_slope;
use crate::table::{Cell, Table};

/// Opening and the nodes to classify.
///
/// `candidates` restricts which nodes are tested and counted; competitors
/// always range over every node of the cube. `None` tests all nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ParaboloidQuery {
    pub opening: f64,
    pub candidates: Option<Vec<bool>>,
}

impl ParaboloidQuery {
    pub fn new(opening: f64) -> Result<Self> {
        if !(opening > 0.0 && opening.is_finite()) {
            return Err(Error::InvalidInput(format!("opening must be finite and positive, got {opening}")));
        }
        Ok(ParaboloidQuery {
            opening,
            candidates: None,
        })
    }

    pub fn with_candidates(mut self, mask: Vec<bool>) -> Self {
        self.candidates = Some(mask);
        self
    }
}

/// Nodes at distance at least `layers` cells from the boundary of the cube.
pub fn interior_mask(grid: &Grid, layers: usize) -> Vec<bool> {
    (0..grid.len())
        .map(|i| {
            let m = grid.multi_index(i);
            m[..grid.dim()]
                .iter()
                .all(|&j| j >= layers && j + layers < grid.res())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TouchSet {
    pub opening: f64,
    /// Touched candidates; non-candidates are `false`.
    pub touched: Vec<bool>,
    /// `h^n` times the number of untouched candidates.
    pub bad_measure: f64,
}

impl TouchSet {
    pub fn touched_count(&self) -> usize {
        self.touched.iter().filter(|&&t| t).count()
    }
}

pub fn paraboloid_touch_set(u: &ScalarField, q: &ParaboloidQuery) -> Result<TouchSet> {
    let grid = u.grid();
    if grid.is_torus() {
        return Err(Error::InvalidInput("touching sets are computed on the cube".into()));
    }
    if !(q.opening > 0.0 && q.opening.is_finite()) {
        return Err(Error::InvalidInput(format!("opening must be finite and positive, got {}", q.opening)));
    }
    if let Some(m) = &q.candidates {
        if m.len() != grid.len() {
            return Err(Error::Shape("candidate mask length differs from grid".into()));
        }
    }
    let dim = grid.dim();
    if dim == 3 {
        return Err(Error::Unsupported("touching sets are implemented for n = 1, 2".into()));
    }
    let osc = u.max() - u.min();
    let tol = 1e-10 * (1.0 + osc + q.opening);
    let bound = 1e3 * (1.0 + (osc + q.opening) / grid.spacing());
    let coords: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.coords(i)).collect();
    let vals = u.values();
    let mut touched = vec![false; grid.len()];
    let mut poly = Vec::new();
    let mut scratch = Vec::new();
    for i0 in 0..grid.len() {
        if q.candidates.as_ref().is_some_and(|m| !m[i0]) {
            continue;
        }
        let x0 = coords[i0];
        let rhs = |j: usize| -> ([f64; 2], f64) {
            let d = [coords[j][0] - x0[0], coords[j][1] - x0[1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            (d, vals[j] - vals[i0] - 0.5 * q.opening * r2 - tol)
        };
        touched[i0] = if dim == 1 {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for j in 0..grid.len() {
                if j == i0 {
                    continue;
                }
                let (d, g) = rhs(j);
                if d[0] > 0.0 {
                    lo = lo.max(g / d[0]);
                } else {
                    hi = hi.min(g / d[0]);
                }
                if lo > hi {
                    break;
                }
            }
            lo <= hi
        } else {
            poly.clear();
            poly.extend_from_slice(&[[-bound, -bound], [bound, -bound], [bound, bound], [-bound, bound]]);
            let mut feasible = true;
            for j in 0..grid.len() {
                if j == i0 {
                    continue;
                }
                let (d, g) = rhs(j);
                clip(&mut poly, &mut scratch, d, g);
                if poly.is_empty() {
                    feasible = false;
                    break;
                }
            }
            feasible
        };
    }
    let untouched = (0..grid.len())
        .filter(|&i| !touched[i] && q.candidates.as_ref().is_none_or(|m| m[i]))
        .count();
    Ok(TouchSet {
        opening: q.opening,
        touched,
        bad_measure: untouched as f64 * grid.cell_volume(),
    })
}

/// Keeps the part of the convex polygon where `d . q >= g`.
fn clip(poly: &mut Vec<[f64; 2]>, scratch: &mut Vec<[f64; 2]>, d: [f64; 2], g: f64) {
    let side = |p: [f64; 2]| d[0] * p[0] + d[1] * p[1] - g;
    if poly.iter().all(|&p| side(p) >= 0.0) {
        return;
    }
    scratch.clear();
    let m = poly.len();
    for k in 0..m {
        let a = poly[k];
        let b = poly[(k + 1) % m];
        let (fa, fb) = (side(a), side(b));
        if fa >= 0.0 {
            scratch.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            scratch.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    std::mem::swap(poly, scratch);
}

/// `|A_h|` along increasing openings, with the fitted log-log slope.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayCurve {
    pub rows: Vec<(f64, f64)>,
    /// Slope over the rows with positive measure; `None` with fewer than two.
    pub slope: Option<f64>,
}

impl DecayCurve {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["h", "bad_measure"]);
        for &(h, m) in &self.rows {
            t.push(vec![Cell::Num(h), Cell::Num(m)]);
        }
        t
    }
}

pub fn measure_decay_curve(u: &ScalarField, hs: &[f64], candidates: Option<&[bool]>) -> Result<DecayCurve> {
    if hs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("openings must be strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let mut q = ParaboloidQuery::new(h)?;
        q.candidates = candidates.map(<[bool]>::to_vec);
        rows.push((h, paraboloid_touch_set(u, &q)?.bad_measure));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
    Ok(DecayCurve {
        slope: loglog_slope(&xs, &ys),
        rows,
    })
}
