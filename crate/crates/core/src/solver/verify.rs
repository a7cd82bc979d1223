//! Checks of the integral identity, the ergodic-constant bound, measure data
//! and subsolution estimates against solver output.

use super::{elliptic_operator, howard_solve, l1_gap, EllipticProblem, HowardConfig, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::grid::{discrete_hessian, mollify_measure, DiscreteMeasure, Grid, HessianStencil, ScalarField, MAX_GRID_DIM};
use crate::matrix::jacobi;
use crate::operator::{pucci_plus_spectrum, Ellipticity, Extremal};
use crate::table::{Cell, Table};

/// Lower bound below which a solution counts as negative.
const MAX_PRINCIPLE_SLACK: f64 = 1e-10;

fn require_nonnegative(f: &ScalarField) -> Result<()> {
    match f.values().iter().position(|&v| v < 0.0) {
        Some(node) => Err(Error::SignedData {
            node,
            value: f.values()[node],
        }),
        None => Ok(()),
    }
}

/// Relative gap `|tau ||u||_1 + (Lambda-lambda)/2 ||D^2_h u||_1 - ||f||_1| / ||f||_1`.
///
/// Rejects signed data and solutions dipping below `-1e-10`.
pub fn verify_l1_identity(report: &SolveReport, problem: &EllipticProblem) -> Result<f64> {
    require_nonnegative(&problem.f)?;
    report.u.require_same_grid(&problem.f)?;
    if let Some(node) = report.u.values().iter().position(|&v| v < -MAX_PRINCIPLE_SLACK) {
        return Err(Error::MaximumPrinciple {
            node,
            value: report.u.values()[node],
        });
    }
    Ok(l1_gap(&HessianStencil::new(report.u.grid()), &report.u, problem))
}

/// One solve of the `tau` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CtauRow {
    pub tau: f64,
    pub f_id: String,
    pub c_tau: f64,
    pub f_sup: f64,
    pub f_lp: f64,
    pub v_lp: f64,
    pub hessian_lp: f64,
    /// `|c_tau| / ||f||_p`.
    pub c_ratio: f64,
    /// `(||v||_p + ||D^2_h u||_p) / ||f||_p`.
    pub stability_ratio: f64,
    pub status: SolveStatus,
}

impl CtauRow {
    pub fn within_bound(&self) -> bool {
        self.c_tau.abs() <= self.f_sup + 1e-8
    }
}

/// Solves every `(f, tau)` pair and tabulates `c_tau` against the data.
///
/// A converged solve with `|c_tau| > ||f||_inf + 1e-8` is an error; rows
/// that did not converge are returned with their status.
pub fn c_tau_bound_scan(
    fs: &[(String, ScalarField)],
    taus: &[f64],
    e: &Ellipticity,
    p: f64,
    cfg: &HowardConfig,
) -> Result<Vec<CtauRow>> {
    let mut rows = Vec::new();
    for (id, f) in fs {
        let f_lp = f.lp_norm(p)?;
        for &tau in taus {
            let report = howard_solve(&EllipticProblem::new(tau, f.clone(), *e)?, cfg)?;
            let v_lp = report.v.lp_norm(p)?;
            let hessian_lp = discrete_hessian(&report.u).lp_norm(p)?;
            let row = CtauRow {
                tau,
                f_id: id.clone(),
                c_tau: report.c_tau,
                f_sup: f.sup_norm(),
                f_lp,
                v_lp,
                hessian_lp,
                c_ratio: report.c_tau.abs() / f_lp,
                stability_ratio: (v_lp + hessian_lp) / f_lp,
                status: report.status,
            };
            if row.status == SolveStatus::Converged && !row.within_bound() {
                return Err(Error::Bound {
                    quantity: format!("|c_tau| for f = {id}, tau = {tau}"),
                    value: row.c_tau.abs(),
                    limit: row.f_sup + 1e-8,
                });
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn c_tau_table(rows: &[CtauRow]) -> Table {
    let mut t = Table::new([
        "tau", "f", "c_tau", "f_sup", "f_lp", "v_lp", "hessian_lp", "c_ratio", "stability_ratio", "converged",
    ]);
    for r in rows {
        t.push(vec![
            Cell::Num(r.tau),
            Cell::Text(r.f_id.clone()),
            Cell::Num(r.c_tau),
            Cell::Num(r.f_sup),
            Cell::Num(r.f_lp),
            Cell::Num(r.v_lp),
            Cell::Num(r.hessian_lp),
            Cell::Num(r.c_ratio),
            Cell::Num(r.stability_ratio),
            Cell::Bool(r.status == SolveStatus::Converged),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureDataRow {
    pub delta: f64,
    pub f_l1: f64,
    /// `tau ||u||_1 + (Lambda - lambda)/2 ||D^2_h u||_1`.
    pub lhs: f64,
    /// `||mu|| (1 + 2e-2)`.
    pub bound: f64,
    pub status: SolveStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureDataRun {
    pub rows: Vec<MeasureDataRow>,
    pub reports: Vec<SolveReport>,
    /// `||u^{delta_{i+1}} - u^{delta_i}||_1`.
    pub cauchy: Vec<f64>,
}

impl MeasureDataRun {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["delta", "f_l1", "lhs", "bound", "converged", "cauchy_l1"]);
        for (i, r) in self.rows.iter().enumerate() {
            let cauchy = if i == 0 { Cell::Empty } else { Cell::Num(self.cauchy[i - 1]) };
            t.push(vec![
                Cell::Num(r.delta),
                Cell::Num(r.f_l1),
                Cell::Num(r.lhs),
                Cell::Num(r.bound),
                Cell::Bool(r.status == SolveStatus::Converged),
                cauchy,
            ]);
        }
        t
    }
}

/// Solves with the mollified measure for each radius in `deltas`
/// (strictly decreasing) and checks the total-variation estimate.
pub fn measure_data_sequence(
    mu: &DiscreteMeasure,
    grid: &Grid,
    deltas: &[f64],
    tau: f64,
    e: &Ellipticity,
    cfg: &HowardConfig,
) -> Result<MeasureDataRun> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("radii must be nonempty and strictly decreasing".into()));
    }
    let mass = mu.total_mass();
    let mut rows = Vec::new();
    let mut reports: Vec<SolveReport> = Vec::new();
    for &delta in deltas {
        let f = mollify_measure(mu, grid, delta)?;
        let f_l1 = f.lp_norm(1.0)?;
        let report = howard_solve(&EllipticProblem::new(tau, f, *e)?, cfg)?;
        let hess = discrete_hessian(&report.u).lp_norm(1.0)?;
        let lhs = tau * report.u.lp_norm(1.0)? + e.half_gap() * hess;
        let bound = mass * (1.0 + 2e-2);
        if report.converged() && lhs > bound {
            return Err(Error::Bound {
                quantity: format!("measure-data estimate at delta = {delta}"),
                value: lhs,
                limit: bound,
            });
        }
        rows.push(MeasureDataRow {
            delta,
            f_l1,
            lhs,
            bound,
            status: report.status,
        });
        reports.push(report);
    }
    let cauchy = reports
        .windows(2)
        .map(|w| w[1].u.zip_map(&w[0].u, |a, b| a - b).and_then(|d| d.lp_norm(1.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasureDataRun { rows, reports, cauchy })
}

/// `sup |tau u - P^-(D^2_h u) - f|`.
pub fn consistency_residual(u: &ScalarField, f: &ScalarField, tau: f64, e: &Ellipticity) -> Result<f64> {
    u.require_same_grid(f)?;
    let lhs = elliptic_operator(u, tau, e);
    Ok(lhs.zip_map(f, |a, b| a - b)?.sup_norm())
}

/// Exponents for [`estimate_ratio_subsolution`]; `p_u` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateNorms {
    pub p_lhs: f64,
    pub p_rhs: f64,
    pub p_u: f64,
}

/// `||D^2_h u||_{p_lhs, inner} / (||f||_{p_rhs, outer} + ||u||_{p_u, outer})`
/// for a nodewise subsolution `-P(D^2_h u) <= f + 1e-8` on `inner`.
pub fn estimate_ratio_subsolution(
    u: &ScalarField,
    f: &ScalarField,
    e: &Ellipticity,
    operator: Extremal,
    norms: EstimateNorms,
    inner: Option<&[bool]>,
    outer: Option<&[bool]>,
) -> Result<f64> {
    u.require_same_grid(f)?;
    let all = vec![true; u.len()];
    let inner = inner.unwrap_or(&all);
    let outer = outer.unwrap_or(&all);
    if inner.len() != u.len() || outer.len() != u.len() {
        return Err(Error::Shape("domain masks must match the grid".into()));
    }
    let hess = discrete_hessian(u);
    for i in (0..u.len()).filter(|&i| inner[i]) {
        let gap = -operator.apply(hess.node(i), e) - f.values()[i];
        if gap > 1e-8 {
            return Err(Error::NotSubsolution { node: i, gap });
        }
    }
    let num = hess.lp_norm_masked(norms.p_lhs, inner)?;
    let u_norm = if norms.p_u.is_infinite() {
        (0..u.len())
            .filter(|&i| outer[i])
            .fold(0.0_f64, |m, i| m.max(u.values()[i].abs()))
    } else {
        u.lp_norm_masked(norms.p_u, outer)?
    };
    let den = f.lp_norm_masked(norms.p_rhs, outer)? + u_norm;
    if den == 0.0 {
        return Err(Error::Domain("estimate ratio with vanishing data and solution".into()));
    }
    Ok(num / den)
}

/// `max_x (-P^+(D^2_h u_ee) - f_ee)` for the second difference quotients
/// `w_ee(x) = (w(x + m h e) + w(x - m h e) - 2 w(x)) / (m h)^2` along `axis`.
pub fn second_difference_subsolution_check(
    u: &ScalarField,
    f: &ScalarField,
    axis: usize,
    step: usize,
    e: &Ellipticity,
) -> Result<f64> {
    u.require_same_grid(f)?;
    let g = *u.grid();
    if !g.is_torus() || axis >= g.dim() || step == 0 {
        return Err(Error::InvalidInput("second differences need torus fields, a grid axis and m >= 1".into()));
    }
    let mut shift = [0isize; MAX_GRID_DIM];
    shift[axis] = step as isize;
    let mut back = [0isize; MAX_GRID_DIM];
    back[axis] = -(step as isize);
    let mh2 = (step as f64 * g.spacing()).powi(2);
    let quotient = |w: &ScalarField| -> ScalarField {
        let v = w.values();
        let out = (0..g.len())
            .map(|i| {
                let p = g.offset(i, &shift).expect("torus wraps");
                let q = g.offset(i, &back).expect("torus wraps");
                (v[p] + v[q] - 2.0 * v[i]) / mh2
            })
            .collect();
        ScalarField::from_values_unchecked(g, out)
    };
    let u_ee = quotient(u);
    let f_ee = quotient(f);
    let stencil = HessianStencil::new(&g);
    Ok((0..g.len())
        .map(|i| -pucci_plus_spectrum(&jacobi(&stencil.hessian_at(u_ee.values(), i)), e) - f_ee.values()[i])
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;
    use std::f64::consts::PI;

    fn ell(a: f64, b: f64) -> Ellipticity {
        Ellipticity::new(a, b).unwrap()
    }

    #[test]
    fn identity_for_constant_data() {
        let g = Grid::torus(2, 16).unwrap();
        let p = EllipticProblem::new(0.5, ScalarField::constant(g, 2.0), ell(1.0, 3.0)).unwrap();
        let r = howard_solve(&p, &HowardConfig::default()).unwrap();
        assert!(verify_l1_identity(&r, &p).unwrap() < 1e-12);
    }

    #[test]
    fn signed_data_rejected() {
        let g = Grid::torus(1, 16).unwrap();
        let f = sample(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let p = EllipticProblem::new(1.0, f, ell(1.0, 2.0)).unwrap();
        let r = howard_solve(&p, &HowardConfig::default()).unwrap();
        assert!(r.l1_identity_gap.is_none());
        assert!(matches!(verify_l1_identity(&r, &p), Err(Error::SignedData { .. })));
    }

    #[test]
    fn constant_data_in_tau_scan() {
        let g = Grid::torus(2, 16).unwrap();
        let fs = vec![("one".to_string(), ScalarField::constant(g, 1.0))];
        let rows = c_tau_bound_scan(&fs, &[1.0, 0.1], &ell(1.0, 2.0), 2.0, &HowardConfig::default()).unwrap();
        for r in &rows {
            assert!((r.c_tau - 1.0).abs() < 1e-12);
        }
        assert_eq!(c_tau_table(&rows).rows.len(), 2);
    }

    #[test]
    fn uniform_measure_gives_constant_solution() {
        let g = Grid::torus(2, 16).unwrap();
        let mu = DiscreteMeasure::uniform(&g, 1.0).unwrap();
        let run = measure_data_sequence(&mu, &g, &[0.3, 0.2, 0.125], 0.5, &ell(1.0, 2.0), &HowardConfig::default()).unwrap();
        for rep in &run.reports {
            assert!(rep.u.values().iter().all(|&v| (v - 2.0).abs() < 1e-9));
        }
        assert!(measure_data_sequence(&mu, &g, &[0.1, 0.2], 0.5, &ell(1.0, 2.0), &HowardConfig::default()).is_err());
    }

    #[test]
    fn consistency_of_zero_and_perturbation() {
        let g = Grid::torus(2, 16).unwrap();
        let e = ell(1.0, 2.0);
        let z = ScalarField::constant(g, 0.0);
        assert_eq!(consistency_residual(&z, &z, 1.0, &e).unwrap(), 0.0);
        let mut bumped = vec![0.0; g.len()];
        bumped[40] = 1e-3;
        let b = ScalarField::from_values(g, bumped).unwrap();
        assert!(consistency_residual(&b, &z, 1.0, &e).unwrap() >= 1e-3);
    }

    #[test]
    fn estimate_ratio_basics() {
        let g = Grid::torus(2, 16).unwrap();
        let e = ell(1.0, 2.0);
        let norms = EstimateNorms {
            p_lhs: 1.0,
            p_rhs: 1.0,
            p_u: f64::INFINITY,
        };
        let zero = ScalarField::constant(g, 0.0);
        let one = ScalarField::constant(g, 1.0);
        assert_eq!(estimate_ratio_subsolution(&zero, &one, &e, Extremal::Minus, norms, None, None).unwrap(), 0.0);
        // u = -cos(2 pi x_1): -P^-(D^2 u) > 0 where u is concave, so f = 0 fails there
        let u = sample(&g, |x| -(2.0 * PI * x[0]).cos()).unwrap();
        assert!(matches!(
            estimate_ratio_subsolution(&u, &zero, &e, Extremal::Minus, norms, None, None),
            Err(Error::NotSubsolution { .. })
        ));
    }

    #[test]
    fn second_difference_of_poisson_pair() {
        let g = Grid::torus(2, 32).unwrap();
        let e = ell(1.0, 1.0);
        let u = sample(&g, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()).unwrap();
        let f = elliptic_operator(&u, 0.0, &e);
        let gap = second_difference_subsolution_check(&u, &f, 0, 1, &e).unwrap();
        assert!(gap.abs() < 1e-6, "gap {gap}");
    }
}
