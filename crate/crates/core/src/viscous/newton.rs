//! Damped Newton for the discrete semilinear problem
//! `-eps D^2 u + H(y, u, D u) = 0` at interior nodes, Dirichlet rows at
//! boundary vertices and `S^h u = 0` at transition vertices.

use std::sync::Arc;

use serde::Serialize;

use crate::discretization::{kirchhoff_row, GridFunction, NetworkGrid, SparseSystem, TriRow, VertexRow};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linear_solver::solve_linear_with;
use crate::network::{s_beta, EdgeId};

use super::hamiltonian::HamiltonianSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Relative step for finite-difference partials of `H`.
    pub fd_step: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol_abs: 1e-10,
            tol_rel: 1e-12,
            max_iterations: 100,
            max_halvings: 30,
            fd_step: 1e-7,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub damping_steps: usize,
    pub initial_residual: f64,
    /// Sup norm of the nonlinear residual at the returned iterate.
    pub residual: f64,
    /// Rounding level of the residual at the returned iterate.
    pub noise_floor: f64,
    pub converged: bool,
}

/// Multiple of machine epsilon times the row magnitude below which a
/// residual is indistinguishable from rounding.
pub const NOISE_FLOOR_FACTOR: f64 = 8.0;

/// Relative size of a Newton update treated as zero once the residual is at
/// the rounding level.
pub const STEP_TOL: f64 = 1e-12;

struct Problem<'a> {
    grid: &'a Arc<NetworkGrid>,
    h: &'a HamiltonianSpec,
    boundary: &'a [f64],
    eps: f64,
    opts: &'a NewtonOptions,
}

impl Problem<'_> {
    fn slope(&self, u: &GridFunction, e: EdgeId, k: usize) -> (f64, f64) {
        let h = self.grid.spacing(e);
        let (um, u0, up) = (u.at(e, k - 1), u.at(e, k), u.at(e, k + 1));
        ((up - um) / (2.0 * h), (um - 2.0 * u0 + up) / (h * h))
    }

    fn residual(&self, u: &GridFunction) -> Vec<f64> {
        let grid = self.grid;
        let net = grid.network();
        let per_edge = self.opts.exec.map(net.edge_count(), |j| {
            let e = EdgeId(j);
            (1..grid.intervals(e))
                .map(|k| {
                    let (p, d2) = self.slope(u, e, k);
                    -self.eps * d2 + self.h.value(e, grid.position(e, k), u.at(e, k), p)
                })
                .collect::<Vec<_>>()
        });
        let mut out: Vec<f64> = per_edge.into_iter().flatten().collect();
        for v in net.vertex_ids() {
            out.push(if net.is_boundary(v) {
                u.vertex_value(v) - self.boundary[v.0]
            } else {
                s_beta(net, u, v).expect("transition vertex")
            });
        }
        out
    }

    /// `NOISE_FLOOR_FACTOR * ε_mach * max_row Σ|terms|`: the rounding level of
    /// the residual rows, which grows like `eps |u| / h^2` on fine grids.
    fn noise_floor(&self, u: &GridFunction) -> f64 {
        let grid = self.grid;
        let net = grid.network();
        let mut scale: f64 = 0.0;
        for e in net.edge_ids() {
            let h = grid.spacing(e);
            for k in 1..grid.intervals(e) {
                let (um, u0, up) = (u.at(e, k - 1), u.at(e, k), u.at(e, k + 1));
                let (p, _) = self.slope(u, e, k);
                let diff = self.eps * (um.abs() + 2.0 * u0.abs() + up.abs()) / (h * h);
                let ham = self.h.value(e, grid.position(e, k), u0, p).abs();
                scale = scale.max(diff + ham);
            }
        }
        for v in net.transition_vertices() {
            let row: f64 = net
                .incident(v)
                .iter()
                .map(|inc| {
                    let [k1, k2] = grid.inward_nodes(v, inc.edge);
                    inc.beta
                        * (3.0 * u.vertex_value(v).abs() + 4.0 * u.at(inc.edge, k1).abs() + u.at(inc.edge, k2).abs())
                        / (2.0 * grid.spacing(inc.edge))
                })
                .sum();
            scale = scale.max(row);
        }
        NOISE_FLOOR_FACTOR * f64::EPSILON * scale
    }

    fn partials(&self, e: EdgeId, y: f64, r: f64, p: f64) -> (f64, f64) {
        if let Some(d) = self.h.hamiltonian.partials(e, y, r, p) {
            return d;
        }
        let hr = self.opts.fd_step * (1.0 + r.abs());
        let hp = self.opts.fd_step * (1.0 + p.abs());
        let ham = &self.h.hamiltonian;
        (
            (ham.value(e, y, r + hr, p) - ham.value(e, y, r - hr, p)) / (2.0 * hr),
            (ham.value(e, y, r, p + hp) - ham.value(e, y, r, p - hp)) / (2.0 * hp),
        )
    }

    fn jacobian(&self, u: &GridFunction, f: &[f64]) -> SparseSystem {
        let grid = self.grid;
        let net = grid.network();
        let per_edge = self.opts.exec.map(net.edge_count(), |j| {
            let e = EdgeId(j);
            let h = grid.spacing(e);
            (1..grid.intervals(e))
                .map(|k| {
                    let (p, _) = self.slope(u, e, k);
                    let (hr, hp) = self.partials(e, grid.position(e, k), u.at(e, k), p);
                    let diff = self.eps / (h * h);
                    TriRow {
                        lower: -diff - hp / (2.0 * h),
                        diag: 2.0 * diff + hr,
                        upper: -diff + hp / (2.0 * h),
                        upwind: false,
                    }
                })
                .collect::<Vec<_>>()
        });
        let interior = per_edge.into_iter().flatten().collect();
        let vertex_rows = net
            .vertex_ids()
            .map(|v| {
                if net.is_boundary(v) {
                    VertexRow::Dirichlet
                } else {
                    kirchhoff_row(grid, v)
                }
            })
            .collect();
        let rhs = f.iter().map(|x| -x).collect();
        SparseSystem::from_parts(Arc::clone(grid), interior, vertex_rows, rhs)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solve the discrete viscous problem from `init` by damped Newton.
///
/// Converges when the residual sup norm is below `tol_abs + tol_rel *
/// initial`, or when it has reached the rounding level of the residual rows
/// and the Newton update is either below `STEP_TOL` relative or has stopped
/// contracting. Steps are halved until the residual decreases by the Armijo
/// factor; running out of halvings or iterations returns
/// [`Error::NoConvergence`] carrying the best iterate seen.
pub fn solve_semilinear_newton(
    grid: &Arc<NetworkGrid>,
    h: &HamiltonianSpec,
    boundary: &[f64],
    eps: f64,
    init: &GridFunction,
    opts: &NewtonOptions,
) -> Result<(GridFunction, NewtonReport)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidEps(eps));
    }
    let net = grid.network();
    if boundary.len() != net.vertex_count() {
        return Err(Error::GridMismatch {
            expected: net.vertex_count(),
            got: boundary.len(),
        });
    }
    if init.values().len() != grid.unknowns() {
        return Err(Error::GridMismatch {
            expected: grid.unknowns(),
            got: init.values().len(),
        });
    }
    let prob = Problem {
        grid,
        h,
        boundary,
        eps,
        opts,
    };

    let mut u = GridFunction::new(Arc::clone(grid), init.values().to_vec())?;
    let mut f = prob.residual(&u);
    let mut norm = sup(&f);
    let initial = norm;
    if !norm.is_finite() {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: norm,
            best: None,
        });
    }
    let target = opts.tol_abs + opts.tol_rel * initial;
    let mut damping_steps = 0;
    let mut last_floor_step: Option<f64> = None;

    let done = |u: GridFunction, it: usize, damping_steps: usize, norm: f64, floor: f64| {
        Ok((
            u,
            NewtonReport {
                iterations: it,
                damping_steps,
                initial_residual: initial,
                residual: norm,
                noise_floor: floor,
                converged: true,
            },
        ))
    };

    for it in 0..opts.max_iterations {
        if norm <= target {
            let floor = prob.noise_floor(&u);
            return done(u, it, damping_steps, norm, floor);
        }
        let jac = prob.jacobian(&u, &f);
        let (delta, _) = solve_linear_with(&jac, opts.exec).map_err(|e| Error::JacobianSingular(Box::new(e)))?;
        let step = |t: f64| -> Result<(GridFunction, Vec<f64>, f64)> {
            let trial: Vec<f64> = u.values().iter().zip(delta.values()).map(|(a, d)| a + t * d).collect();
            let trial = GridFunction::new(Arc::clone(grid), trial)?;
            let ft = prob.residual(&trial);
            let nt = sup(&ft);
            Ok((trial, ft, nt))
        };

        // At the rounding level the residual cannot be trusted to decrease;
        // the size of the Newton update decides instead.
        let floor = prob.noise_floor(&u);
        if norm <= floor {
            let size = sup(delta.values());
            // rounding in the Jacobian solve also bounds the update from
            // below, so stop once it no longer contracts
            let stalled = last_floor_step.is_some_and(|prev| size > 0.5 * prev);
            last_floor_step = Some(size);
            let small = stalled || size <= STEP_TOL * (1.0 + u.sup_norm());
            let (trial, ft, nt) = step(1.0)?;
            if nt.is_finite() && nt <= floor.max(norm) {
                u = trial;
                f = ft;
                norm = nt;
            }
            if small {
                let floor = prob.noise_floor(&u);
                return done(u, it + 1, damping_steps, norm, floor);
            }
            continue;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let (trial, ft, nt) = step(t)?;
            if nt.is_finite() && nt <= (1.0 - 1e-4 * t) * norm {
                accepted = Some((trial, ft, nt));
                break;
            }
            t *= 0.5;
            damping_steps += 1;
        }
        match accepted {
            Some((trial, ft, nt)) => {
                u = trial;
                f = ft;
                norm = nt;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations: it + 1,
                    residual: norm,
                    best: Some(Box::new(u)),
                })
            }
        }
    }
    if norm <= target {
        let floor = prob.noise_floor(&u);
        return done(u, opts.max_iterations, damping_steps, norm, floor);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: norm,
        best: Some(Box::new(u)),
    })
}
