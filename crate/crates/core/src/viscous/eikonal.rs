//! Viscous eikonal equation `-eps u'' + |u'|^2 - f^2 = 0` through the
//! Hopf–Cole substitution `u = -eps ln z`, which turns it into the linear
//! problem `eps^2 z'' - f^2 z = 0`, `z = exp(-g / eps)` on the boundary, with
//! the Kirchhoff condition unchanged.
//!
//! The linear problem is solved for `z = w + 1` directly rather than for `w`:
//! the two discrete systems are identical up to the constant shift, but `z`
//! keeps full relative precision when it is tiny.

use std::sync::Arc;

use serde::Serialize;

use crate::discretization::{assemble_linear_with, GridFunction, LinearCoefficients, NetworkGrid, NodeRef};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::EdgeField;
use crate::linear_solver::{solve_linear_with, SolveReport};
use crate::network::{s_beta, Network};

/// Smallest boundary value of `z` before it is clamped.
pub const Z_FLOOR: f64 = 1e-300;

/// `|u'| = density` on the edges, `u = boundary[v]` at boundary vertices.
#[derive(Clone, Debug)]
pub struct EikonalData {
    pub density: EdgeField,
    pub boundary: Vec<f64>,
}

impl EikonalData {
    /// Unit density with the network's own boundary data.
    pub fn unit(net: &Network) -> Self {
        Self {
            density: EdgeField::constant(1.0),
            boundary: net.boundary_values(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EikonalReport {
    pub eps: f64,
    pub solve: SolveReport,
    /// Range of `z = exp(-(u - g_min) / eps)` over the grid.
    pub shifted_min: f64,
    pub shifted_max: f64,
    /// `max eps |S^h z(v)| / z(v)` over transition vertices.
    pub kirchhoff_residual: f64,
    /// `eps >= 5 max h`
    pub trusted: bool,
    pub warnings: Vec<String>,
}

pub fn solve_eikonal_log(
    grid: &Arc<NetworkGrid>,
    data: &EikonalData,
    eps: f64,
) -> Result<(GridFunction, EikonalReport)> {
    solve_eikonal_log_with(grid, data, eps, Execution::default())
}

pub fn solve_eikonal_log_with(
    grid: &Arc<NetworkGrid>,
    data: &EikonalData,
    eps: f64,
    exec: Execution,
) -> Result<(GridFunction, EikonalReport)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidEps(eps));
    }
    let net = grid.network();
    if data.boundary.len() != net.vertex_count() {
        return Err(Error::GridMismatch {
            expected: net.vertex_count(),
            got: data.boundary.len(),
        });
    }
    for e in net.edge_ids() {
        for k in 0..=grid.intervals(e) {
            let y = grid.position(e, k);
            let f = data.density.eval(net, e, y);
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::CoefficientSignViolation {
                    edge: net.edge(e).name.clone(),
                    y,
                    what: "eikonal density must be nonnegative",
                });
            }
        }
    }

    // The equation for z is homogeneous, so boundary data may be shifted by
    // its minimum before exponentiating.
    let g_min = net
        .boundary_vertices()
        .map(|v| data.boundary[v.0])
        .fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    let mut gamma = vec![0.0; net.vertex_count()];
    for v in net.boundary_vertices() {
        let g = data.boundary[v.0];
        if !g.is_finite() {
            return Err(Error::NonFiniteBoundaryValue(net.vertex(v).name.clone()));
        }
        let z = (-(g - g_min) / eps).exp();
        gamma[v.0] = if z < Z_FLOOR {
            warnings.push(format!(
                "boundary value at {} underflows at eps = {eps}; clamped",
                net.vertex(v).name
            ));
            Z_FLOOR
        } else {
            z
        };
    }

    let coeffs = LinearCoefficients {
        a: EdgeField::constant(eps * eps),
        b: EdgeField::zero(),
        c: data.density.squared(),
        g: EdgeField::zero(),
        gamma,
    };
    let sys = assemble_linear_with(grid, &coeffs, exec)?;
    let (z, solve) = solve_linear_with(&sys, exec)?;

    let (kmin, &zmin) = z
        .values()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid has unknowns");
    if !(zmin > 0.0) {
        let edge = match grid.locate(kmin) {
            NodeRef::Interior { edge, .. } => net.edge(edge).name.clone(),
            NodeRef::Vertex(v) => net.vertex(v).name.clone(),
        };
        return Err(Error::PositivityLost {
            min_value: zmin - 1.0,
            edge,
        });
    }
    let zmax = z.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let kirchhoff_residual = net
        .transition_vertices()
        .map(|v| {
            let s = s_beta(net, &z, v).expect("transition vertex");
            eps * s.abs() / z.vertex_value(v)
        })
        .fold(0.0, f64::max);

    let u = z.map(|zi| g_min - eps * zi.ln());
    let trusted = eps >= 5.0 * grid.max_spacing();
    if !trusted {
        warnings.push(format!(
            "eps = {eps} is below 5 max h = {}; the boundary layer is under-resolved",
            5.0 * grid.max_spacing()
        ));
    }
    Ok((
        u,
        EikonalReport {
            eps,
            solve,
            shifted_min: zmin,
            shifted_max: zmax,
            kirchhoff_residual,
            trusted,
            warnings,
        },
    ))
}
