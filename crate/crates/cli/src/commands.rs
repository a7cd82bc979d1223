//! One function per subcommand. Each returns the process exit code.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use pucci::counterexample::{
    blowup_curve, blowup_slopes, blowup_table, critical_theta, log_space, pucci_exponent,
    thetas_for_coefficients, RadialProfile,
};
use pucci::grid::{
    discrete_hessian, interior_mask, measure_decay_curve, sample, try_sample, write_field, DiscreteMeasure, Grid,
    ScalarField,
};
use pucci::solver::{
    elliptic_operator, estimate_ratio_subsolution, howard_solve, measure_data_sequence, parabolic_solve,
    poisson_solve, EllipticProblem, EstimateNorms, Forcing, HowardConfig, ParabolicProblem,
};
use pucci::table::{Cell, Table};
use pucci::{suite, Extremal};

use crate::args::{Command, RunConfig};
use crate::output::{emit, json_bytes, render_table, write_atomic};

pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

type Outcome = Result<i32, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Outcome {
    match cmd {
        Command::Exponents => exponents(cfg),
        Command::Blowup => blowup(cfg),
        Command::Solve => solve(cfg),
        Command::Verify => verify(cfg),
        Command::Paraboloid => paraboloid(cfg),
        Command::Parabolic => parabolic(cfg),
        Command::MeasureData => measure_data(cfg),
        Command::Ratio => ratio(cfg),
    }
}

fn table_out(cfg: &RunConfig, t: &Table) -> Outcome {
    emit(cfg.out.as_deref(), &render_table(t, cfg.format)).map_err(err)?;
    Ok(0)
}

fn howard_config(cfg: &RunConfig) -> HowardConfig {
    let mut h = HowardConfig {
        max_iter: cfg.max_iter,
        ..HowardConfig::default()
    };
    if let Some(t) = cfg.tol {
        h.tol = t;
    }
    h
}

fn torus(cfg: &RunConfig, default_res: usize) -> Result<Grid, String> {
    Grid::torus(cfg.n, cfg.res.unwrap_or(default_res)).map_err(err)
}

fn unit_box(cfg: &RunConfig, default_res: usize) -> Result<Grid, String> {
    Grid::unit_box(cfg.n, cfg.res.unwrap_or(default_res)).map_err(err)
}

fn exponents(cfg: &RunConfig) -> Outcome {
    if cfg.n < 2 {
        return Err(format!("exponents needs --n >= 2, got {}", cfg.n));
    }
    let e = &cfg.ellipticity;
    let threshold = cfg.n as f64 / 2.0 + 1.0;
    let mut t = Table::new(["k", "p_k", "critical_theta", "p_k_above_n_half_plus_one"]);
    for k in 2..=cfg.n {
        let p = pucci_exponent(k, e).map_err(err)?.value;
        t.push(vec![
            k.into(),
            p.into(),
            critical_theta(k, e).ok().into(),
            (p > threshold).into(),
        ]);
    }
    table_out(cfg, &t)
}

fn blowup(cfg: &RunConfig) -> Outcome {
    let e = &cfg.ellipticity;
    let thetas = match &cfg.thetas {
        Some(t) => t.clone(),
        None => thetas_for_coefficients(cfg.k, e, &log_space(1e-4, 1e-2, 12)).map_err(err)?,
    };
    let rows = blowup_curve(e, cfg.k, &thetas).map_err(err)?;
    let (s4, s5) = blowup_slopes(&rows);
    let p = pucci_exponent(cfg.k, e).map_err(err)?.value;
    eprintln!(
        "slope_p4={} (expected {}) slope_p5={} (expected {})",
        fmt_opt(s4),
        -1.0 + 1.0 / p,
        fmt_opt(s5),
        -1.0 / p
    );
    table_out(cfg, &blowup_table(&rows))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |v| format!("{v}"))
}

fn smooth(x: &[f64]) -> f64 {
    let tail: f64 = x[1..].iter().map(|v| (2.0 * PI * v).cos()).product();
    (2.0 * PI * x[0]).sin() * tail + 0.5 * (4.0 * PI * x[x.len() - 1]).sin()
}

fn solve(cfg: &RunConfig) -> Outcome {
    let g = torus(cfg, 32)?;
    let e = cfg.ellipticity;
    let rhs = cfg.rhs.as_deref().unwrap_or("smooth");
    let mut exact = None;
    let f = match rhs {
        "constant" => ScalarField::constant(g, 1.0),
        "smooth" => sample(&g, smooth).map_err(err)?,
        "positive" => sample(&g, |x| smooth(x) + 2.0).map_err(err)?,
        "manufactured" => {
            let u = sample(&g, smooth).map_err(err)?;
            let f = elliptic_operator(&u, cfg.tau, &e);
            exact = Some(u);
            f
        }
        other => return Err(format!("unknown --rhs '{other}' for solve (constant, smooth, positive, manufactured)")),
    };
    let problem = EllipticProblem::new(cfg.tau, f, e).map_err(err)?;
    let report = howard_solve(&problem, &howard_config(cfg)).map_err(err)?;
    let mut doc = report.to_json();
    let obj = doc.as_object_mut().expect("summary is an object");
    // timing goes to stderr so equal runs write equal files
    obj.remove("wall_time_ms");
    obj.insert("rhs".into(), json!(rhs));
    if let Some(u) = &exact {
        let d = report.u.zip_map(u, |a, b| a - b).map_err(err)?.sup_norm();
        obj.insert("recovery_error".into(), json!(d));
    }
    if !e.strict_gap() {
        let w = poisson_solve(&problem.f, cfg.tau, e.lower()).map_err(err)?;
        let d = report.u.zip_map(&w, |a, b| a - b).map_err(err)?.sup_norm();
        obj.insert("poisson_difference".into(), json!(d));
    }
    eprintln!("status={:?} wall_time_ms={:.1}", report.status, report.wall_time_ms);
    let bytes = json_bytes(&doc);
    match &cfg.out {
        Some(path) => {
            let mut field = Vec::new();
            write_field(&report.u, &mut field).map_err(err)?;
            write_atomic(&field_path(path), &field).map_err(err)?;
            write_atomic(path, &bytes).map_err(err)?;
        }
        None => emit(None, &bytes).map_err(err)?,
    }
    Ok(if report.converged() { 0 } else { EXIT_NOT_CONVERGED })
}

/// `<out>.field`, next to the report.
pub fn field_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".field");
    s.into()
}

fn verify(cfg: &RunConfig) -> Outcome {
    let summary = suite::run(cfg.seed, cfg.tol).map_err(err)?;
    emit(cfg.out.as_deref(), summary.render().as_bytes()).map_err(err)?;
    Ok(verify_exit_code(summary.failures()))
}

/// 0 when everything passed, otherwise `2 + failures` capped at 125.
pub fn verify_exit_code(failures: usize) -> i32 {
    if failures == 0 {
        0
    } else {
        (2 + failures).min(125) as i32
    }
}

fn paraboloid(cfg: &RunConfig) -> Outcome {
    let g = unit_box(cfg, 16)?;
    let hs = cfg.hs.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
    let profile = cfg.profile.as_deref().unwrap_or("cusp");
    let theta = cfg.theta.unwrap_or(-0.5);
    let norm2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let u = match profile {
        "convex" => sample(&g, norm2),
        "concave" => sample(&g, |x| -norm2(x)),
        "cusp" => {
            if !(theta < 0.0) {
                return Err(format!("the cusp profile needs --theta < 0, got {theta}"));
            }
            sample(&g, |x| 1.0 - norm2(x).sqrt().powf(theta))
        }
        other => return Err(format!("unknown --profile '{other}' for paraboloid (convex, concave, cusp)")),
    }
    .map_err(err)?;
    let inner = interior_mask(&g, 1);
    let curve = measure_decay_curve(&u, &hs, Some(&inner)).map_err(err)?;
    eprintln!("slope={}", fmt_opt(curve.slope));
    table_out(cfg, &curve.to_table())
}

fn parabolic(cfg: &RunConfig) -> Outcome {
    let g = torus(cfg, 32)?;
    let profile = cfg.profile.as_deref().unwrap_or("cosine");
    let v0 = match profile {
        "cosine" => sample(&g, |x| x.iter().map(|v| (2.0 * PI * v).cos()).product()).map_err(err)?,
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let vals = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ScalarField::from_values(g, vals).map_err(err)?
        }
        other => return Err(format!("unknown --profile '{other}' for parabolic (cosine, random)")),
    };
    let t_end = cfg.t_end.unwrap_or(0.05);
    let mut p = ParabolicProblem {
        forcing: Forcing::Static(ScalarField::constant(g, 0.0)),
        v0,
        ellipticity: cfg.ellipticity,
        operator: Extremal::Minus,
        t_end,
        dt: 1.0,
        record_every: 0,
    };
    p.dt = cfg.dt.unwrap_or_else(|| p.cfl_limit());
    if p.dt > 0.0 {
        p.record_every = ((t_end / p.dt).ceil() as usize / 20).max(1);
    }
    let run = parabolic_solve(&p).map_err(err)?;
    let mut t = Table::new(["t", "min", "max", "mean"]);
    for (time, v) in run.times.iter().zip(&run.states) {
        t.push(vec![(*time).into(), v.min().into(), v.max().into(), v.mean().into()]);
    }
    table_out(cfg, &t)
}

fn measure_data(cfg: &RunConfig) -> Outcome {
    let g = torus(cfg, 32)?;
    let deltas = cfg.deltas.clone().unwrap_or_else(|| vec![0.4, 0.2, 0.1]);
    let mu = match cfg.rhs.as_deref().unwrap_or("atom") {
        "atom" => DiscreteMeasure::dirac(&vec![0.3; cfg.n], 1.0),
        "uniform" => DiscreteMeasure::uniform(&g, 1.0),
        other => return Err(format!("unknown --rhs '{other}' for measure-data (atom, uniform)")),
    }
    .map_err(err)?;
    let run = measure_data_sequence(&mu, &g, &deltas, cfg.tau, &cfg.ellipticity, &howard_config(cfg)).map_err(err)?;
    table_out(cfg, &run.to_table())?;
    let all = run.rows.iter().all(|r| r.status == pucci::solver::SolveStatus::Converged);
    Ok(if all { 0 } else { EXIT_NOT_CONVERGED })
}

/// Default sweep inside the admissible range `(2 - k, 1) \ {0}`.
fn ratio_thetas(k: usize) -> Vec<f64> {
    if k >= 3 {
        let lo = 2.0 - k as f64;
        (1..=5).map(|i| lo + (-0.1 - lo) * i as f64 / 5.0).collect()
    } else {
        (1..=5).map(|i| 0.15 * i as f64).collect()
    }
}

fn ratio(cfg: &RunConfig) -> Outcome {
    let g = unit_box(cfg, 16)?;
    if g.res() % 2 == 1 {
        return Err("ratio needs an even --N so that no node sits on the singular set".into());
    }
    let e = cfg.ellipticity;
    let thetas = match (&cfg.thetas, cfg.theta) {
        (Some(t), _) => t.clone(),
        (None, Some(t)) => vec![t],
        (None, None) => ratio_thetas(cfg.k),
    };
    let profiles = thetas
        .iter()
        .map(|&th| RadialProfile::new(cfg.n, cfg.k, th))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let p = cfg.p.unwrap_or(1.0);
    let norms = EstimateNorms {
        p_lhs: p,
        p_rhs: p,
        p_u: 1.0,
    };
    let inner = interior_mask(&g, g.res() / 4);
    let mut t = Table::new(["theta", "coefficient", "ratio"]);
    for prof in profiles {
        let u = try_sample(&g, |x| prof.value(x)).map_err(err)?;
        let hess = discrete_hessian(&u);
        let f = ScalarField::from_values(
            g,
            hess.nodes().iter().map(|x| (-pucci::pucci_minus(x, &e)).max(0.0)).collect(),
        )
        .map_err(err)?;
        let r = estimate_ratio_subsolution(&u, &f, &e, Extremal::Minus, norms, Some(&inner), None).map_err(err)?;
        t.push(vec![prof.theta().into(), prof.coefficient(&e).into(), Cell::Num(r)]);
    }
    table_out(cfg, &t)
}
