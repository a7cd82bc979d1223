//! Explicit Euler stepping for `v_t - P(D^2 v) = f` on the torus.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{HessianStencil, ScalarField};
use crate::operator::{Ellipticity, Extremal};

/// Right-hand side, either fixed or sampled at step midpoints.
#[derive(Clone)]
pub enum Forcing {
    Static(ScalarField),
    Dynamic(Arc<dyn Fn(f64) -> Result<ScalarField> + Send + Sync>),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Static(u) => f.debug_tuple("Static").field(u).finish(),
            Forcing::Dynamic(_) => f.write_str("Dynamic(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParabolicProblem {
    pub v0: ScalarField,
    pub forcing: Forcing,
    pub ellipticity: Ellipticity,
    pub operator: Extremal,
    pub t_end: f64,
    /// Requested step; shortened so that a whole number of steps reaches `t_end`.
    pub dt: f64,
    /// Keep every `record_every`-th state (0 keeps only the first and last).
    pub record_every: usize,
}

impl ParabolicProblem {
    /// `h^2 / (2 n Lambda)`.
    pub fn cfl_limit(&self) -> f64 {
        let g = self.v0.grid();
        g.spacing().powi(2) / (2.0 * g.dim() as f64 * self.ellipticity.upper())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicRun {
    pub dt: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    pub states: Vec<ScalarField>,
}

impl ParabolicRun {
    pub fn last(&self) -> &ScalarField {
        self.states.last().expect("run holds the initial state")
    }
}

/// `v^{m+1} = v^m + dt (P(D^2_h v^m) + f(t_m + dt/2))`.
pub fn parabolic_solve(p: &ParabolicProblem) -> Result<ParabolicRun> {
    let grid = *p.v0.grid();
    if !grid.is_torus() {
        return Err(Error::InvalidInput("parabolic stepping is posed on the torus".into()));
    }
    if !(p.t_end >= 0.0 && p.t_end.is_finite() && p.dt > 0.0) {
        return Err(Error::InvalidInput("need t_end >= 0 and dt > 0".into()));
    }
    let limit = p.cfl_limit();
    if p.dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt: p.dt, limit });
    }
    if let Forcing::Static(f) = &p.forcing {
        p.v0.require_same_grid(f)?;
    }
    let steps = (p.t_end / p.dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { 0.0 } else { p.t_end / steps as f64 };
    let stencil = HessianStencil::new(&grid);
    let mut v = p.v0.values().to_vec();
    let mut next = vec![0.0; v.len()];
    let mut times = vec![0.0];
    let mut states = vec![p.v0.clone()];
    for m in 0..steps {
        let t = m as f64 * dt;
        let dynamic;
        let f = match &p.forcing {
            Forcing::Static(f) => f,
            Forcing::Dynamic(g) => {
                dynamic = g(t + 0.5 * dt)?;
                p.v0.require_same_grid(&dynamic)?;
                &dynamic
            }
        };
        for (i, n) in next.iter_mut().enumerate() {
            let x = stencil.hessian_at(&v, i);
            *n = v[i] + dt * (p.operator.apply(&x, &p.ellipticity) + f.values()[i]);
        }
        std::mem::swap(&mut v, &mut next);
        let done = m + 1;
        if done == steps || (p.record_every > 0 && done % p.record_every == 0) {
            times.push(done as f64 * dt);
            states.push(ScalarField::from_values(grid, v.clone())?);
        }
    }
    Ok(ParabolicRun {
        dt,
        steps,
        times,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cosine_symbol, sample, Grid};
    use std::f64::consts::PI;

    fn problem(v0: ScalarField, e: Ellipticity, op: Extremal, t_end: f64, dt: f64) -> ParabolicProblem {
        let f = ScalarField::constant(*v0.grid(), 0.0);
        ParabolicProblem {
            v0,
            forcing: Forcing::Static(f),
            ellipticity: e,
            operator: op,
            t_end,
            dt,
            record_every: 0,
        }
    }

    #[test]
    fn constants_are_steady() {
        let g = Grid::torus(2, 16).unwrap();
        let e = Ellipticity::new(1.0, 2.0).unwrap();
        let p = problem(ScalarField::constant(g, 1.5), e, Extremal::Minus, 0.01, 1e-4);
        let run = parabolic_solve(&p).unwrap();
        assert!(run.last().values().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn cosine_decays_by_symbol() {
        let g = Grid::torus(1, 32).unwrap();
        let e = Ellipticity::new(1.0, 1.0).unwrap();
        let v0 = sample(&g, |x| (2.0 * PI * x[0]).cos()).unwrap();
        let dt = 0.4 / (32.0 * 32.0);
        let p = problem(v0.clone(), e, Extremal::Plus, 50.0 * dt, dt);
        let run = parabolic_solve(&p).unwrap();
        assert_eq!(run.steps, 50);
        let factor = (1.0 - run.dt * cosine_symbol(g.spacing())).powi(50);
        for (a, b) in run.last().values().iter().zip(v0.values()) {
            assert!((a - factor * b).abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_enforced() {
        let g = Grid::torus(2, 16).unwrap();
        let e = Ellipticity::new(1.0, 2.0).unwrap();
        let p = problem(ScalarField::constant(g, 0.0), e, Extremal::Minus, 1.0, 1.0);
        assert!(matches!(parabolic_solve(&p), Err(Error::Cfl { .. })));
    }

    #[test]
    fn translation_by_constants() {
        let g = Grid::torus(2, 16).unwrap();
        let e = Ellipticity::new(1.0, 2.0).unwrap();
        let v0 = sample(&g, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()).unwrap();
        let w0 = v0.map(|v| v + 1.0);
        let dt = 1.0 / (16.0 * 16.0 * 8.0);
        let run_v = parabolic_solve(&problem(v0, e, Extremal::Minus, 20.0 * dt, dt)).unwrap();
        let run_w = parabolic_solve(&problem(w0, e, Extremal::Minus, 20.0 * dt, dt)).unwrap();
        for (a, b) in run_w.last().values().iter().zip(run_v.last().values()) {
            assert!((a - b - 1.0).abs() < 1e-12);
        }
    }
}
