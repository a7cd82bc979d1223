//! Howard policy iteration for `tau u - P^-(D^2 u) = f` on the torus.
//!
//! Each outer step freezes the Bellman minimizer of the current discrete
//! Hessian and solves the linear problem `tau u - Tr(A D^2_h u) = f`. The
//! discretization is the stencil of [`crate::grid::HessianStencil`].

mod linear;
mod parabolic;
mod verify;

pub use linear::{gmres, red_black, FftPreconditioner, LinearOutcome, LinearSystem};
pub use parabolic::{parabolic_solve, Forcing, ParabolicProblem, ParabolicRun};
pub use verify::{
    c_tau_bound_scan, c_tau_table, consistency_residual, estimate_ratio_subsolution, measure_data_sequence,
    second_difference_subsolution_check, verify_l1_identity, CtauRow, EstimateNorms, MeasureDataRow,
    MeasureDataRun,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, HessianStencil, ScalarField};
use crate::matrix::{jacobi, SymMatrix};
use crate::operator::{bellman_minimizer_spectrum, pucci_minus_spectrum, Ellipticity};

/// Slack on policy eigenvalues.
const ADMISSIBLE_SLACK: f64 = 1e-10;

/// Per-node diffusion matrices with spectrum in `[lambda, Lambda]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    grid: Grid,
    nodes: Vec<SymMatrix>,
}

impl Policy {
    pub fn new(grid: &Grid, nodes: Vec<SymMatrix>, e: &Ellipticity) -> Result<Self> {
        if nodes.len() != grid.len() {
            return Err(Error::Shape(format!("policy has {} nodes, grid {}", nodes.len(), grid.len())));
        }
        for (i, a) in nodes.iter().enumerate() {
            if a.dim() != grid.dim() {
                return Err(Error::Shape(format!("policy matrix at node {i} has wrong dimension")));
            }
            for &ev in jacobi(a).eigenvalues() {
                if !(ev >= e.lower() - ADMISSIBLE_SLACK && ev <= e.upper() + ADMISSIBLE_SLACK) {
                    return Err(Error::InadmissiblePolicy {
                        node: i,
                        eigenvalue: ev,
                        lower: e.lower(),
                        upper: e.upper(),
                    });
                }
            }
        }
        Ok(Policy { grid: *grid, nodes })
    }

    pub fn constant(grid: &Grid, a: SymMatrix, e: &Ellipticity) -> Result<Self> {
        Self::new(grid, vec![a; grid.len()], e)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn node(&self, i: usize) -> &SymMatrix {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[SymMatrix] {
        &self.nodes
    }
}

/// `tau u - P^-(D^2 u) = f` on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticProblem {
    pub tau: f64,
    pub f: ScalarField,
    pub ellipticity: Ellipticity,
}

impl EllipticProblem {
    pub fn new(tau: f64, f: ScalarField, ellipticity: Ellipticity) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidInput(format!("tau must lie in (0, 1], got {tau}")));
        }
        if !f.grid().is_torus() {
            return Err(Error::InvalidInput("the elliptic problem is posed on the torus".into()));
        }
        Ok(EllipticProblem { tau, f, ellipticity })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearMethod {
    /// Restarted GMRES preconditioned by the FFT inverse of `tau - mean(lambda, Lambda) Laplacian_h`.
    Gmres { restart: usize },
    /// Gauss-Seidel in fixed red-black order.
    RedBlack,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HowardConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub linear: LinearMethod,
    /// Cap on Krylov iterations or sweeps per linear solve.
    pub max_linear_iter: usize,
}

impl Default for HowardConfig {
    fn default() -> Self {
        HowardConfig {
            tol: 1e-8,
            max_iter: 50,
            linear: LinearMethod::Gmres { restart: 30 },
            max_linear_iter: 5000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// The residual failed to decrease after the first iteration.
    NonMonotone,
    LinearSolveFailed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub u: ScalarField,
    /// `tau * mean(u)`.
    pub c_tau: f64,
    /// `u - mean(u)`.
    pub v: ScalarField,
    pub tau: f64,
    pub ellipticity: Ellipticity,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Sup-norm residual of the nonlinear equation; entry 0 is the initial guess.
    pub residual_history: Vec<f64>,
    pub linear_iterations: usize,
    /// Worst diagonal-dominance margin over the assembled systems (see
    /// [`LinearSystem::dominance_margin`]).
    pub dominance_margin: f64,
    /// Relative gap of the L1 identity; `None` when `f` takes negative values.
    pub l1_identity_gap: Option<f64>,
    pub wall_time_ms: f64,
}

/// Key/value summary written by `pucci solve`.
#[derive(Clone, Debug, Serialize)]
pub struct ReportSummary {
    pub dims: usize,
    #[serde(rename = "N")]
    pub res: usize,
    pub tau: f64,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub upper: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub linear_iterations: usize,
    pub residual_history: Vec<f64>,
    pub c_tau: f64,
    pub l1_identity_gap: Option<f64>,
    pub dominance_margin: f64,
    pub wall_time_ms: f64,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds the initial residual")
    }

    pub fn summary(&self) -> ReportSummary {
        let g = self.u.grid();
        ReportSummary {
            dims: g.dim(),
            res: g.res(),
            tau: self.tau,
            lambda: self.ellipticity.lower(),
            upper: self.ellipticity.upper(),
            status: self.status,
            iterations: self.iterations,
            linear_iterations: self.linear_iterations,
            residual_history: self.residual_history.clone(),
            c_tau: self.c_tau,
            l1_identity_gap: self.l1_identity_gap,
            dominance_margin: self.dominance_margin,
            wall_time_ms: self.wall_time_ms,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.summary()).expect("summary serializes")
    }
}

/// `tau u - Tr(A D^2_h u)`.
pub fn apply_policy_operator(u: &ScalarField, policy: &Policy, tau: f64) -> Result<ScalarField> {
    if u.grid() != policy.grid() {
        return Err(Error::Shape("policy and field live on different grids".into()));
    }
    let stencil = HessianStencil::new(u.grid());
    let vals = u.values();
    let out = (0..u.len())
        .map(|i| tau * vals[i] - stencil.trace_at(vals, i, policy.node(i)))
        .collect();
    ScalarField::from_values(*u.grid(), out)
}

/// Bellman minimizer of the discrete Hessian at every node.
pub fn improve_policy(u: &ScalarField, e: &Ellipticity) -> Policy {
    let stencil = HessianStencil::new(u.grid());
    improve_with(&stencil, u, e)
}

fn improve_with(stencil: &HessianStencil, u: &ScalarField, e: &Ellipticity) -> Policy {
    let nodes = (0..u.len())
        .map(|i| bellman_minimizer_spectrum(&jacobi(&stencil.hessian_at(u.values(), i)), e))
        .collect();
    Policy {
        grid: *u.grid(),
        nodes,
    }
}

/// `tau u - P^-(D^2_h u)` at every node.
pub fn elliptic_operator(u: &ScalarField, tau: f64, e: &Ellipticity) -> ScalarField {
    let stencil = HessianStencil::new(u.grid());
    operator_with(&stencil, u, tau, e)
}

fn operator_with(stencil: &HessianStencil, u: &ScalarField, tau: f64, e: &Ellipticity) -> ScalarField {
    let vals = u.values();
    let out = (0..u.len())
        .map(|i| tau * vals[i] - pucci_minus_spectrum(&jacobi(&stencil.hessian_at(vals, i)), e))
        .collect();
    ScalarField::from_values_unchecked(*u.grid(), out)
}

fn sup_residual(stencil: &HessianStencil, u: &ScalarField, p: &EllipticProblem) -> f64 {
    operator_with(stencil, u, p.tau, &p.ellipticity)
        .values()
        .iter()
        .zip(p.f.values())
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

pub fn howard_solve(p: &EllipticProblem, cfg: &HowardConfig) -> Result<SolveReport> {
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::InvalidInput("solver needs tol > 0 and max_iter >= 1".into()));
    }
    let start = Instant::now();
    let grid = *p.f.grid();
    let stencil = HessianStencil::new(&grid);
    let e = p.ellipticity;
    let bound = p.f.sup_norm() / p.tau;
    let mut u = p.f.map(|v| (v / p.tau).clamp(-bound, bound));
    let mut history = vec![sup_residual(&stencil, &u, p)];
    let pre = match cfg.linear {
        LinearMethod::Gmres { .. } => Some(FftPreconditioner::new(&grid, p.tau, e.mean())),
        LinearMethod::RedBlack => None,
    };
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut linear_iterations = 0;
    let mut margin = f64::INFINITY;
    if history[0] <= cfg.tol {
        status = SolveStatus::Converged;
    } else {
        for it in 1..=cfg.max_iter {
            let policy = improve_with(&stencil, &u, &e);
            let sys = LinearSystem::assemble(&stencil, &policy, p.tau);
            margin = margin.min(sys.dominance_margin());
            let mut x = u.values().to_vec();
            let target = cfg.tol / 10.0;
            let outcome = match (&pre, cfg.linear) {
                (Some(pre), LinearMethod::Gmres { restart }) => {
                    gmres(&sys, pre, p.f.values(), &mut x, restart, target, cfg.max_linear_iter)
                }
                _ => red_black(&sys, p.f.values(), &mut x, target, cfg.max_linear_iter),
            };
            linear_iterations += outcome.iterations;
            iterations = it;
            u = ScalarField::from_values(grid, x)?;
            let r = sup_residual(&stencil, &u, p);
            let prev = *history.last().unwrap();
            history.push(r);
            if r <= cfg.tol {
                status = SolveStatus::Converged;
                break;
            }
            if !outcome.converged {
                status = SolveStatus::LinearSolveFailed;
                break;
            }
            if it >= 2 && r >= prev {
                status = SolveStatus::NonMonotone;
                break;
            }
        }
    }
    let mean = u.mean();
    let v = u.map(|x| x - mean);
    let l1_identity_gap = if p.f.min() >= 0.0 {
        Some(l1_gap(&stencil, &u, p))
    } else {
        None
    };
    Ok(SolveReport {
        c_tau: p.tau * mean,
        v,
        tau: p.tau,
        ellipticity: e,
        status,
        iterations,
        residual_history: history,
        linear_iterations,
        dominance_margin: margin,
        l1_identity_gap,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        u,
    })
}

/// `|tau ||u||_1 + (Lambda - lambda)/2 ||D^2_h u||_1 - ||f||_1| / ||f||_1`.
pub(crate) fn l1_gap(stencil: &HessianStencil, u: &ScalarField, p: &EllipticProblem) -> f64 {
    let grid = u.grid();
    let abs: Vec<f64> = (0..u.len())
        .map(|i| jacobi(&stencil.hessian_at(u.values(), i)).abs_sum())
        .collect();
    let hess = ScalarField::from_values_unchecked(*grid, abs);
    let norm = |f: &ScalarField| f.lp_norm(1.0).expect("p = 1 is valid");
    let fl1 = norm(&p.f);
    if fl1 == 0.0 {
        return 0.0;
    }
    (p.tau * norm(u) + p.ellipticity.half_gap() * norm(&hess) - fl1).abs() / fl1
}

/// Exact solve of `tau u - a Laplacian_h u = f` by FFT.
pub fn poisson_solve(f: &ScalarField, tau: f64, a: f64) -> Result<ScalarField> {
    if !f.grid().is_torus() || !(tau > 0.0) || !(a > 0.0) {
        return Err(Error::InvalidInput("poisson_solve needs a torus field, tau > 0 and a > 0".into()));
    }
    let pre = FftPreconditioner::new(f.grid(), tau, a);
    let mut out = vec![0.0; f.len()];
    pre.apply(f.values(), &mut out);
    ScalarField::from_values(*f.grid(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cosine_symbol, sample};
    use std::f64::consts::PI;

    fn ell(a: f64, b: f64) -> Ellipticity {
        Ellipticity::new(a, b).unwrap()
    }

    #[test]
    fn inadmissible_policy_rejected() {
        let g = Grid::torus(2, 8).unwrap();
        let e = ell(1.0, 2.0);
        let err = Policy::constant(&g, SymMatrix::diag(&[0.5, 1.0]), &e).unwrap_err();
        assert!(matches!(err, Error::InadmissiblePolicy { node: 0, .. }));
        assert!(Policy::constant(&g, SymMatrix::diag(&[1.0, 2.0]), &e).is_ok());
    }

    #[test]
    fn policy_operator_on_constants_and_cosines() {
        let g = Grid::torus(2, 16).unwrap();
        let e = ell(1.0, 2.0);
        let a = Policy::constant(&g, SymMatrix::from_upper(2, &[1.5, 0.3, 1.2]).unwrap(), &e).unwrap();
        let c = apply_policy_operator(&ScalarField::constant(g, 2.0), &a, 0.5).unwrap();
        assert!(c.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let id = Policy::constant(&g, SymMatrix::identity(2), &ell(1.0, 1.0)).unwrap();
        let u = sample(&g, |x| (2.0 * PI * x[0]).cos()).unwrap();
        let out = apply_policy_operator(&u, &id, 0.3).unwrap();
        let s = cosine_symbol(g.spacing());
        for (o, v) in out.values().iter().zip(u.values()) {
            assert!((o - (0.3 + s) * v).abs() < 1e-9);
        }
    }

    #[test]
    fn policy_improvement_cases() {
        let e = ell(1.0, 3.0);
        let g = Grid::torus(2, 16).unwrap();
        let bump = sample(&g, |x| (2.0 * PI * x[0]).cos() + (2.0 * PI * x[1]).cos()).unwrap();
        let hess = crate::grid::discrete_hessian(&bump);
        let p2 = improve_policy(&bump, &e);
        for i in 0..g.len() {
            let x = hess.node(i);
            assert!((p2.node(i).trace_product(x) - crate::pucci_minus(x, &e)).abs() < 1e-10);
        }
        let b = Grid::unit_box(2, 8).unwrap();
        let saddle = sample(&b, |x| x[0] * x[0] - x[1] * x[1]).unwrap();
        let ps = improve_policy(&saddle, &e);
        for a in ps.nodes() {
            assert!((a.get(0, 0) - 1.0).abs() < 1e-12 && (a.get(1, 1) - 3.0).abs() < 1e-12);
            assert!(a.get(0, 1).abs() < 1e-12);
        }
        let convex = sample(&b, |x| x[0] * x[0] + 2.0 * x[1] * x[1]).unwrap();
        assert!(improve_policy(&convex, &e).nodes().iter().all(|a| *a == SymMatrix::identity(2)));
        let concave = convex.map(|v| -v);
        assert!(improve_policy(&concave, &e)
            .nodes()
            .iter()
            .all(|a| *a == SymMatrix::scalar(2, 3.0)));
    }

    #[test]
    fn constant_data_converges_immediately() {
        let g = Grid::torus(2, 16).unwrap();
        let p = EllipticProblem::new(0.5, ScalarField::constant(g, 3.0), ell(1.0, 2.0)).unwrap();
        let r = howard_solve(&p, &HowardConfig::default()).unwrap();
        assert!(r.converged() && r.iterations <= 2);
        assert!(r.u.values().iter().all(|&v| (v - 6.0).abs() < 1e-12));
        assert!((r.c_tau - 3.0).abs() < 1e-12);
        assert!(r.l1_identity_gap.unwrap() < 1e-12);
    }

    #[test]
    fn discrete_cosine_is_reproduced() {
        let g = Grid::torus(2, 32).unwrap();
        let s = cosine_symbol(g.spacing());
        let tau = 0.5;
        let f = sample(&g, |x| (tau + s) * (2.0 * PI * x[0]).cos()).unwrap();
        let p = EllipticProblem::new(tau, f, ell(1.0, 1.0)).unwrap();
        let r = howard_solve(&p, &HowardConfig::default()).unwrap();
        assert!(r.converged());
        for i in 0..g.len() {
            assert!((r.u.values()[i] - (2.0 * PI * g.coords(i)[0]).cos()).abs() < 1e-8);
        }
    }

    fn recover_manufactured(res: usize, cfg: &HowardConfig) {
        let g = Grid::torus(2, res).unwrap();
        let e = ell(1.0, 2.0);
        let tau = 1.0;
        let exact = sample(&g, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos() + 0.3 * (4.0 * PI * x[1]).sin()).unwrap();
        let f = elliptic_operator(&exact, tau, &e);
        let r = howard_solve(&EllipticProblem::new(tau, f, e).unwrap(), cfg).unwrap();
        assert!(r.converged(), "{:?} {:?}", r.status, r.residual_history);
        let err = r.u.zip_map(&exact, |a, b| a - b).unwrap().sup_norm();
        assert!(err <= 10.0 * cfg.tol, "err {err}");
        for w in r.residual_history[1..].windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn manufactured_solution_recovered() {
        recover_manufactured(32, &HowardConfig::default());
    }

    #[test]
    fn manufactured_solution_with_sweeps() {
        let cfg = HowardConfig {
            linear: LinearMethod::RedBlack,
            max_linear_iter: 100_000,
            ..HowardConfig::default()
        };
        recover_manufactured(16, &cfg);
    }

    #[test]
    fn summary_has_fixed_keys() {
        let g = Grid::torus(1, 8).unwrap();
        let p = EllipticProblem::new(1.0, ScalarField::constant(g, 1.0), ell(1.0, 2.0)).unwrap();
        let json = howard_solve(&p, &HowardConfig::default()).unwrap().to_json();
        for key in ["dims", "N", "tau", "lambda", "Lambda", "iterations", "residual_history", "c_tau", "l1_identity_gap", "wall_time_ms"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn problem_validation() {
        let g = Grid::torus(1, 8).unwrap();
        let f = ScalarField::constant(g, 1.0);
        assert!(EllipticProblem::new(0.0, f.clone(), ell(1.0, 1.0)).is_err());
        assert!(EllipticProblem::new(1.5, f, ell(1.0, 1.0)).is_err());
        let b = ScalarField::constant(Grid::unit_box(1, 8).unwrap(), 1.0);
        assert!(EllipticProblem::new(1.0, b, ell(1.0, 1.0)).is_err());
    }
}
