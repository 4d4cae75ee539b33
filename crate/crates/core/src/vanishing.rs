//! Continuation in `eps -> 0` with a priori diagnostics and, for eikonal
//! problems, the error against the weighted-distance oracle.

use std::sync::Arc;

use serde::Serialize;

use crate::discretization::{GridFunction, NetworkGrid};
use crate::error::{Error, Result};
use crate::field::EdgeField;
use crate::network::EdgeId;
use crate::oracle::{weighted_boundary_distance_with, DENSITY_FLOOR};
use crate::viscous::{eikonal2, solve_semilinear_newton, EikonalData, HamiltonianSpec, NewtonOptions};

/// `eps_k = eps0 * ratio^k`, `k = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self {
            eps0: 0.2,
            ratio: 0.5,
            count: 5,
        }
    }
}

impl EpsSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            return Err(Error::InvalidSchedule(format!("eps0 = {} must be positive", self.eps0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "ratio = {} must lie in (0, 1)",
                self.ratio
            )));
        }
        if self.count == 0 {
            return Err(Error::InvalidSchedule("count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let mut eps = self.eps0;
        (0..self.count)
            .map(|_| {
                let e = eps;
                eps *= self.ratio;
                e
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum SweepProblem {
    Eikonal(EikonalData),
    Hamiltonian { spec: HamiltonianSpec, boundary: Vec<f64> },
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub newton: NewtonOptions,
    /// `eps` is trusted when `eps >= trust_factor * max h`.
    pub trust_factor: f64,
    pub keep_solutions: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            trust_factor: 5.0,
            keep_solutions: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub sup_u: f64,
    pub lipschitz: f64,
    pub kirchhoff_residual: f64,
    /// `||u_eps_k - u_eps_{k-1}||_∞`; absent for the first entry.
    pub cauchy: Option<f64>,
    pub err_vs_oracle: Option<f64>,
    pub newton_iters: usize,
    pub damping_steps: usize,
    pub newton_residual: f64,
    pub trusted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFailure {
    pub eps: f64,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub rate: Option<RateEstimate>,
    pub failed_at: Option<SweepFailure>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub solutions: Vec<GridFunction>,
    #[serde(skip)]
    pub oracle: Option<GridFunction>,
}

/// Largest `|Δu| / h` over adjacent nodes, vertex-to-first-interior pairs included.
pub fn lipschitz_estimate(u: &GridFunction) -> f64 {
    let grid = u.grid();
    let mut best: f64 = 0.0;
    for e in grid.network().edge_ids() {
        let h = grid.spacing(e);
        let mut prev = u.at(e, 0);
        for k in 1..=grid.intervals(e) {
            let cur = u.at(e, k);
            best = best.max((cur - prev).abs() / h);
            prev = cur;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RateEstimate {
    /// `ln err ≈ log_constant + order * ln eps`; `residual` is the RMS misfit.
    Fitted {
        order: f64,
        log_constant: f64,
        residual: f64,
    },
    /// Some error is exactly zero.
    Exact,
}

/// Least-squares slope of `ln err` against `ln eps`.
pub fn fit_rate(errors: &[f64], eps: &[f64]) -> Result<RateEstimate> {
    let pairs: Vec<(f64, f64)> = eps
        .iter()
        .zip(errors)
        .filter(|(e, r)| **e > 0.0 && r.is_finite())
        .map(|(&e, &r)| (e, r))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(pairs.len()));
    }
    if pairs.iter().any(|&(_, r)| r <= 0.0) {
        return Ok(RateEstimate::Exact);
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(1));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let order = sxy / sxx;
    let log_constant = my - order * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - log_constant - order * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateEstimate::Fitted {
        order,
        log_constant,
        residual,
    })
}

fn min_on_nodes(grid: &NetworkGrid, f: &EdgeField) -> f64 {
    let net = grid.network();
    net.edge_ids()
        .flat_map(|e| (0..=grid.intervals(e)).map(move |k| (e, k)))
        .map(|(e, k): (EdgeId, usize)| f.eval(net, e, grid.position(e, k)))
        .fold(f64::INFINITY, f64::min)
}

/// Solve along the schedule, warm-starting each `eps` from the previous
/// solution. The first solve starts from the oracle for eikonal problems
/// with a positive density, from zero otherwise.
///
/// A solver failure ends the sweep; the report then carries the completed
/// entries and `failed_at`.
pub fn run_sweep(
    grid: &Arc<NetworkGrid>,
    problem: &SweepProblem,
    schedule: &EpsSchedule,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    schedule.validate()?;
    let net = grid.network();
    let exec = opts.newton.exec;

    let (spec, boundary, oracle) = match problem {
        SweepProblem::Eikonal(data) => {
            let oracle = if min_on_nodes(grid, &data.density) >= DENSITY_FLOOR {
                Some(weighted_boundary_distance_with(grid, &data.density, &data.boundary, exec)?.u)
            } else {
                None
            };
            (eikonal2(net, data.density.squared()), data.boundary.clone(), oracle)
        }
        SweepProblem::Hamiltonian { spec, boundary } => (spec.clone(), boundary.clone(), None),
    };

    let mut warnings = Vec::new();
    if matches!(problem, SweepProblem::Eikonal(_)) && oracle.is_none() {
        warnings.push("density is not bounded below on the grid; oracle comparison disabled".into());
    }
    let limit = opts.trust_factor * grid.max_spacing();
    let mut entries: Vec<SweepEntry> = Vec::new();
    let mut solutions = Vec::new();
    let mut failed_at = None;
    let mut prev = match &oracle {
        Some(o) => o.clone(),
        None => GridFunction::zeros(Arc::clone(grid)),
    };
    let mut first = true;

    for eps in schedule.values() {
        let trusted = eps >= limit;
        if !trusted {
            warnings.push(format!(
                "eps = {eps} is below {} * max h = {limit}; entry not trusted",
                opts.trust_factor
            ));
        }
        let (u, nr) = match solve_semilinear_newton(grid, &spec, &boundary, eps, &prev, &opts.newton) {
            Ok(r) => r,
            Err(e) => {
                failed_at = Some(SweepFailure {
                    eps,
                    message: e.to_string(),
                    exit_code: e.exit_code(),
                });
                break;
            }
        };
        entries.push(SweepEntry {
            eps,
            sup_u: u.sup_norm(),
            lipschitz: lipschitz_estimate(&u),
            kirchhoff_residual: u.kirchhoff_residual(),
            cauchy: if first { None } else { Some(u.sup_distance(&prev)) },
            err_vs_oracle: oracle.as_ref().map(|o| u.sup_distance(o)),
            newton_iters: nr.iterations,
            damping_steps: nr.damping_steps,
            newton_residual: nr.residual,
            trusted,
        });
        if opts.keep_solutions {
            solutions.push(u.clone());
        }
        prev = u;
        first = false;
    }

    let rate = if oracle.is_some() {
        let errs: Vec<f64> = entries.iter().filter_map(|e| e.err_vs_oracle).collect();
        let eps: Vec<f64> = entries.iter().map(|e| e.eps).collect();
        fit_rate(&errs, &eps).ok()
    } else {
        None
    };
    Ok(SweepReport {
        entries,
        rate,
        failed_at,
        warnings,
        solutions,
        oracle,
    })
}
