//! Flags, the optional JSON config, and their merge into a validated run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use pucci::suite::DEFAULT_SEED;
use pucci::Ellipticity;

#[derive(Debug, Parser)]
#[command(name = "pucci", version, about = "Numerical laboratory for the Pucci extremal operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pucci exponents p_k and critical exponents for k = 2..n.
    Exponents,
    /// Blow-up ratios of the radial family along a theta range.
    Blowup,
    /// Solve tau u - P^-(D^2 u) = f on the torus.
    Solve,
    /// Run the seeded property suite.
    Verify,
    /// Bad-set measure |A_h| of a sampled profile against the opening h.
    Paraboloid,
    /// Explicit stepping of v_t - P^-(D^2 v) = f.
    Parabolic,
    /// Solves with mollified measure data for a decreasing radius list.
    MeasureData,
    /// Empirical estimate ratios for sampled radial subsolutions.
    Ratio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Flags {
    /// Lower ellipticity constant.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Upper ellipticity constant.
    #[arg(long = "Lambda", global = true)]
    #[serde(rename = "Lambda")]
    pub upper: Option<f64>,
    /// Spatial dimension.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of active coordinates of the radial profile.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Grid points per axis.
    #[arg(long = "N", global = true)]
    #[serde(rename = "N")]
    pub res: Option<usize>,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// `lo:hi:count`, evenly spaced.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta_range: Option<String>,
    /// Comma-separated openings.
    #[arg(long, global = true)]
    pub h_list: Option<String>,
    /// Comma-separated mollifier radii, decreasing.
    #[arg(long, global = true)]
    pub delta_list: Option<String>,
    /// Norm exponent.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Solver tolerance; for `verify`, replaces every check tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Right-hand side: constant, smooth, positive, manufactured (solve);
    /// atom, uniform (measure-data).
    #[arg(long, global = true)]
    pub rhs: Option<String>,
    /// Sampled profile: convex, concave, cusp (paraboloid); cosine, random (parabolic).
    #[arg(long, global = true)]
    pub profile: Option<String>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
}

macro_rules! merge {
    ($a:expr, $b:expr, $($f:ident),*) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f.take(); } )*
    };
}

impl Flags {
    /// Fills unset flags from the config file, if one was given.
    pub fn with_config(mut self) -> Result<Self, String> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let mut file = read_config(&path)?;
        merge!(
            self, file, lambda, upper, n, k, res, tau, theta, theta_range, h_list, delta_list, p, seed, tol,
            max_iter, out, format, rhs, profile, t_end, dt
        );
        Ok(self)
    }
}

fn read_config(path: &Path) -> Result<Flags, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
}

/// Validated settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub ellipticity: Ellipticity,
    pub n: usize,
    pub k: usize,
    pub res: Option<usize>,
    pub tau: f64,
    pub theta: Option<f64>,
    pub thetas: Option<Vec<f64>>,
    pub hs: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    pub p: Option<f64>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub rhs: Option<String>,
    pub profile: Option<String>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
}

fn parse_list(name: &str, s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("--{name}: cannot parse '{t}': {e}")))
        .collect()
}

fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("--theta-range expects lo:hi:count, got '{s}'");
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count < 2 || !(lo.is_finite() && hi.is_finite()) {
        return Err(bad());
    }
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

impl RunConfig {
    pub fn from_flags(f: Flags) -> Result<Self, String> {
        let ellipticity = Ellipticity::new(f.lambda.unwrap_or(1.0), f.upper.unwrap_or(2.0)).map_err(|e| e.to_string())?;
        let n = f.n.unwrap_or(2);
        if !(1..=8).contains(&n) {
            return Err(format!("--n must lie in 1..=8, got {n}"));
        }
        let k = f.k.unwrap_or(n);
        let tau = f.tau.unwrap_or(1.0);
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(format!("--tau must lie in (0, 1], got {tau}"));
        }
        if let Some(t) = f.tol {
            if !(t > 0.0) {
                return Err(format!("--tol must be positive, got {t}"));
            }
        }
        if let Some(p) = f.p {
            if !(p > 0.0 && p.is_finite()) {
                return Err(format!("--p must be positive, got {p}"));
            }
        }
        Ok(RunConfig {
            ellipticity,
            n,
            k,
            res: f.res,
            tau,
            theta: f.theta,
            thetas: f.theta_range.as_deref().map(parse_range).transpose()?,
            hs: f.h_list.as_deref().map(|s| parse_list("h-list", s)).transpose()?,
            deltas: f.delta_list.as_deref().map(|s| parse_list("delta-list", s)).transpose()?,
            p: f.p,
            seed: f.seed.unwrap_or(DEFAULT_SEED),
            tol: f.tol,
            max_iter: f.max_iter.unwrap_or(50),
            out: f.out,
            format: f.format.unwrap_or(Format::Csv),
            rhs: f.rhs,
            profile: f.profile,
            t_end: f.t_end,
            dt: f.dt,
        })
    }
}
