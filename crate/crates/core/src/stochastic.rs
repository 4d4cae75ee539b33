//! Monte Carlo Feynman–Kac estimates for the linear network problem
//! `a w'' + b w' - c w + g = 0`, used as an independent check of the
//! direct solver.
//!
//! Each path is an Euler–Maruyama diffusion `dY = b dt + sqrt(2a) dW` on
//! the current edge. At a transition vertex the walker enters incident edge
//! `k` with probability `β_ik / Σ_j β_ij`, carrying its overshoot past the
//! vertex into the new edge. At a boundary vertex the path stops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::discretization::LinearCoefficients;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::network::{EdgeId, Incidence, Network, VertexId};

/// Paths are capped at `TIME_CAP_FACTOR * diameter^2 / min(2a)`.
pub const TIME_CAP_FACTOR: f64 = 50.0;

/// A bias flag is raised when more than this fraction of paths is truncated.
pub const TRUNCATION_BIAS_FRACTION: f64 = 1e-3;

pub const MIN_PATHS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PathOutcome {
    Exited {
        vertex: VertexId,
        payoff: f64,
    },
    /// Hit the time cap; the payoff accumulated so far.
    Truncated {
        payoff: f64,
    },
}

impl PathOutcome {
    pub fn payoff(self) -> f64 {
        match self {
            PathOutcome::Exited { payoff, .. } | PathOutcome::Truncated { payoff } => payoff,
        }
    }
}

/// A passage through a transition vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub vertex: VertexId,
    pub from: EdgeId,
    pub to: EdgeId,
    /// Position on `to` after the crossing.
    pub y: f64,
}

#[derive(Clone, Debug)]
pub struct WalkSimulator<'a> {
    net: &'a Network,
    coeffs: &'a LinearCoefficients,
    dt: f64,
    t_max: f64,
}

impl<'a> WalkSimulator<'a> {
    pub fn new(net: &'a Network, coeffs: &'a LinearCoefficients, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidMcConfig(format!("dt = {dt} must be positive")));
        }
        if coeffs.gamma.len() != net.vertex_count() {
            return Err(Error::GridMismatch {
                expected: net.vertex_count(),
                got: coeffs.gamma.len(),
            });
        }
        let mut a_min = f64::INFINITY;
        for e in net.edge_ids() {
            let l = net.edge(e).length;
            for k in 0..=64 {
                let y = l * k as f64 / 64.0;
                let a = coeffs.a.eval(net, e, y);
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::CoefficientSignViolation {
                        edge: net.edge(e).name.clone(),
                        y,
                        what: "diffusion a must be positive",
                    });
                }
                a_min = a_min.min(a);
            }
        }
        let diam = net.metric_diameter();
        Ok(Self {
            net,
            coeffs,
            dt,
            t_max: TIME_CAP_FACTOR * diam * diam / (2.0 * a_min),
        })
    }

    pub fn with_time_cap(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time_cap(&self) -> f64 {
        self.t_max
    }

    fn check_start(&self, (e, y): (EdgeId, f64)) -> Result<()> {
        if e.0 >= self.net.edge_count() {
            return Err(Error::UnknownId(format!("edge #{}", e.0)));
        }
        let l = self.net.edge(e).length;
        if !(0.0..=l).contains(&y) {
            return Err(Error::OutOfRange {
                edge: self.net.edge(e).name.clone(),
                y,
                length: l,
            });
        }
        Ok(())
    }

    pub fn simulate_path(&self, start: (EdgeId, f64), seed: u64, path_index: u64) -> Result<PathOutcome> {
        self.simulate_path_observed(start, seed, path_index, |_| {})
    }

    /// As [`simulate_path`](Self::simulate_path), reporting every transition-vertex crossing.
    pub fn simulate_path_observed(
        &self,
        start: (EdgeId, f64),
        seed: u64,
        path_index: u64,
        mut observe: impl FnMut(Crossing),
    ) -> Result<PathOutcome> {
        self.check_start(start)?;
        let net = self.net;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);

        let (mut e, mut y) = start;
        let mut discount = 1.0;
        let mut payoff = 0.0;
        let sqrt_dt = self.dt.sqrt();
        let steps = (self.t_max / self.dt).ceil() as u64;

        // a start exactly on a vertex
        let l0 = net.edge(e).length;
        let at = if y == 0.0 {
            Some(net.edge(e).tail)
        } else if y == l0 {
            Some(net.edge(e).head)
        } else {
            None
        };
        if let Some(v) = at {
            if net.is_boundary(v) {
                return Ok(PathOutcome::Exited {
                    vertex: v,
                    payoff: self.coeffs.gamma[v.0],
                });
            }
        }
        let mut on_vertex = at;

        for _ in 0..steps {
            let l = net.edge(e).length;
            let a = self.coeffs.a.eval(net, e, y);
            let b = self.coeffs.b.eval(net, e, y);
            let c = self.coeffs.c.eval(net, e, y);
            let g = self.coeffs.g.eval(net, e, y);
            payoff += discount * g * self.dt;
            discount *= (-c * self.dt).exp();
            let z: f64 = rng.sample(StandardNormal);
            let step = b * self.dt + (2.0 * a).sqrt() * sqrt_dt * z;

            let (vertex, overshoot) = if let Some(v) = on_vertex.take() {
                (v, step.abs())
            } else {
                let next = y + step;
                if next < 0.0 || (next == 0.0 && net.is_boundary(net.edge(e).tail)) {
                    (net.edge(e).tail, -next)
                } else if next > l || (next == l && net.is_boundary(net.edge(e).head)) {
                    (net.edge(e).head, next - l)
                } else {
                    y = next;
                    continue;
                }
            };

            if net.is_boundary(vertex) {
                return Ok(PathOutcome::Exited {
                    vertex,
                    payoff: payoff + discount * self.coeffs.gamma[vertex.0],
                });
            }
            let inc = net.incident(vertex);
            let shortest = inc
                .iter()
                .map(|i| net.edge(i.edge).length)
                .fold(f64::INFINITY, f64::min);
            if overshoot > shortest {
                return Err(Error::StepTooLarge {
                    overshoot,
                    edge: net.edge(e).name.clone(),
                    length: shortest,
                });
            }
            let total: f64 = inc.iter().map(|i| i.beta).sum();
            let mut pick = rng.random::<f64>() * total;
            let mut next_edge = inc[inc.len() - 1].edge;
            for i in inc {
                if pick < i.beta {
                    next_edge = i.edge;
                    break;
                }
                pick -= i.beta;
            }
            let ln = net.edge(next_edge).length;
            let ny = match net.incidence(vertex, next_edge)? {
                Incidence::Tail => overshoot,
                _ => ln - overshoot,
            };
            observe(Crossing {
                vertex,
                from: e,
                to: next_edge,
                y: ny,
            });
            e = next_edge;
            y = ny;
            if y <= 0.0 || y >= ln {
                on_vertex = Some(vertex);
            }
        }
        Ok(PathOutcome::Truncated { payoff })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McConfig {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub edge: EdgeId,
    pub y: f64,
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub dt: f64,
    pub truncated: usize,
    pub biased: bool,
}

/// Seed used for the `i`-th probe point of an [`estimate`] call.
pub fn point_seed(seed: u64, point: usize) -> u64 {
    seed ^ (point as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Independent paths from each point. Path `i` at point `p` depends only on
/// `(point_seed(seed, p), i)`, and sums are taken in path order, so results
/// do not depend on the execution mode.
pub fn estimate(
    net: &Network,
    coeffs: &LinearCoefficients,
    points: &[(EdgeId, f64)],
    cfg: &McConfig,
    exec: Execution,
) -> Result<Vec<McEstimate>> {
    if cfg.paths < MIN_PATHS {
        return Err(Error::InvalidMcConfig(format!(
            "need at least {MIN_PATHS} paths, got {}",
            cfg.paths
        )));
    }
    let sim = WalkSimulator::new(net, coeffs, cfg.dt)?;
    points
        .iter()
        .enumerate()
        .map(|(p, &start)| {
            let seed = point_seed(cfg.seed, p);
            let outcomes = exec.try_map(cfg.paths, |i| sim.simulate_path(start, seed, i as u64))?;
            let n = outcomes.len() as f64;
            let mut sum = 0.0;
            let mut truncated = 0;
            for o in &outcomes {
                sum += o.payoff();
                if matches!(o, PathOutcome::Truncated { .. }) {
                    truncated += 1;
                }
            }
            let mean = sum / n;
            let var = outcomes.iter().map(|o| (o.payoff() - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(McEstimate {
                edge: start.0,
                y: start.1,
                mean,
                std_error: (var / n).sqrt(),
                paths: outcomes.len(),
                dt: cfg.dt,
                truncated,
                biased: truncated as f64 > TRUNCATION_BIAS_FRACTION * n,
            })
        })
        .collect()
}

/// Width of the acceptance band in standard errors.
pub const AGREEMENT_SIGMAS: f64 = 3.5;
/// Absolute slack added to the band for time-step bias.
pub const AGREEMENT_SLACK: f64 = 2e-3;

/// One estimate set against a reference value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McComparison {
    pub estimate: McEstimate,
    pub reference: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare each estimate with `reference(edge, y)` within
/// `AGREEMENT_SIGMAS * std_error + AGREEMENT_SLACK`; biased estimates fail.
pub fn compare(
    estimates: &[McEstimate],
    mut reference: impl FnMut(EdgeId, f64) -> Result<f64>,
) -> Result<Vec<McComparison>> {
    estimates
        .iter()
        .map(|m| {
            let r = reference(m.edge, m.y)?;
            let abs_diff = (m.mean - r).abs();
            let tolerance = AGREEMENT_SIGMAS * m.std_error + AGREEMENT_SLACK;
            Ok(McComparison {
                estimate: m.clone(),
                reference: r,
                abs_diff,
                tolerance,
                pass: abs_diff <= tolerance && !m.biased,
            })
        })
        .collect()
}
