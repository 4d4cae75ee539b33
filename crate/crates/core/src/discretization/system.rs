use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::EdgeField;
use crate::network::{EdgeId, VertexId};

use super::grid::NetworkGrid;

/// Coefficients of `a w'' + b w' - c w + g = 0` on each edge, plus
/// Dirichlet values `gamma` (indexed by vertex, read at boundary vertices).
#[derive(Clone, Debug)]
pub struct LinearCoefficients {
    pub a: EdgeField,
    pub b: EdgeField,
    pub c: EdgeField,
    pub g: EdgeField,
    pub gamma: Vec<f64>,
}

impl LinearCoefficients {
    /// `w'' = 0` with the given boundary values.
    pub fn laplace(gamma: Vec<f64>) -> Self {
        Self {
            a: EdgeField::constant(1.0),
            b: EdgeField::zero(),
            c: EdgeField::zero(),
            g: EdgeField::zero(),
            gamma,
        }
    }
}

/// Interior row: `lower * w[k-1] + diag * w[k] + upper * w[k+1] = rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TriRow {
    pub lower: f64,
    pub diag: f64,
    pub upper: f64,
    pub upwind: bool,
}

/// One incident edge's contribution to a Kirchhoff row: `near` multiplies
/// the first node into the edge, `far` the second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KirchhoffBranch {
    pub edge: EdgeId,
    pub near: f64,
    pub far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum VertexRow {
    /// `w(v) = rhs`
    Dirichlet,
    /// `diag * w(v) + Σ (near * w_1 + far * w_2) = rhs`
    Kirchhoff { diag: f64, branches: Vec<KirchhoffBranch> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Interior { edge: EdgeId, index: usize, upwind: bool },
    Dirichlet(VertexId),
    Kirchhoff(VertexId),
}

/// Square system over the grid unknowns, stored by stencil.
///
/// Row `r` is the equation for unknown `r`: interior nodes carry a
/// three-point stencil along their edge, vertices carry a Dirichlet or
/// Kirchhoff row.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    grid: Arc<NetworkGrid>,
    interior: Vec<TriRow>,
    vertex_rows: Vec<VertexRow>,
    rhs: Vec<f64>,
}

impl SparseSystem {
    pub(crate) fn from_parts(
        grid: Arc<NetworkGrid>,
        interior: Vec<TriRow>,
        vertex_rows: Vec<VertexRow>,
        rhs: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(interior.len(), grid.interior_count());
        debug_assert_eq!(vertex_rows.len(), grid.network().vertex_count());
        debug_assert_eq!(rhs.len(), grid.unknowns());
        Self {
            grid,
            interior,
            vertex_rows,
            rhs,
        }
    }

    pub fn grid(&self) -> &Arc<NetworkGrid> {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn interior_row(&self, unknown: usize) -> &TriRow {
        &self.interior[unknown]
    }

    pub fn vertex_row(&self, v: VertexId) -> &VertexRow {
        &self.vertex_rows[v.0]
    }

    pub fn upwind_rows(&self) -> usize {
        self.interior.iter().filter(|r| r.upwind).count()
    }

    pub fn row_kind(&self, r: usize) -> RowKind {
        match self.grid.locate(r) {
            super::NodeRef::Interior { edge, index } => RowKind::Interior {
                edge,
                index,
                upwind: self.interior[r].upwind,
            },
            super::NodeRef::Vertex(v) => match self.vertex_rows[v.0] {
                VertexRow::Dirichlet => RowKind::Dirichlet(v),
                VertexRow::Kirchhoff { .. } => RowKind::Kirchhoff(v),
            },
        }
    }

    /// Nonzero entries `(column, value)` of row `r`; duplicate columns are merged.
    pub fn row_entries(&self, r: usize) -> Vec<(usize, f64)> {
        let g = &self.grid;
        let mut out: Vec<(usize, f64)> = Vec::new();
        let mut push = |col: usize, val: f64| {
            if let Some(slot) = out.iter_mut().find(|(c, _)| *c == col) {
                slot.1 += val;
            } else {
                out.push((col, val));
            }
        };
        match g.locate(r) {
            super::NodeRef::Interior { edge, index } => {
                let row = &self.interior[r];
                push(g.node_unknown(edge, index - 1), row.lower);
                push(r, row.diag);
                push(g.node_unknown(edge, index + 1), row.upper);
            }
            super::NodeRef::Vertex(v) => match &self.vertex_rows[v.0] {
                VertexRow::Dirichlet => push(r, 1.0),
                VertexRow::Kirchhoff { diag, branches } => {
                    push(r, *diag);
                    for b in branches {
                        let [k1, k2] = g.inward_nodes(v, b.edge);
                        push(g.node_unknown(b.edge, k1), b.near);
                        push(g.node_unknown(b.edge, k2), b.far);
                    }
                }
            },
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|r| self.row_entries(r).iter().map(|(c, v)| v * x[*c]).sum())
            .collect()
    }

    /// `max_r |(A x - rhs)_r|`
    pub fn residual_sup(&self, x: &[f64]) -> f64 {
        self.matvec(x)
            .iter()
            .zip(&self.rhs)
            .fold(0.0, |m, (ax, b)| m.max((ax - b).abs()))
    }
}

/// Kirchhoff row at `v`: `Σ_j β_ij (-3 w(v) + 4 w_1 - w_2) / (2 h_j) = 0`.
pub(crate) fn kirchhoff_row(grid: &NetworkGrid, v: VertexId) -> VertexRow {
    let net = grid.network();
    let mut diag = 0.0;
    let branches = net
        .incident(v)
        .iter()
        .map(|inc| {
            let scale = inc.beta / (2.0 * grid.spacing(inc.edge));
            diag -= 3.0 * scale;
            KirchhoffBranch {
                edge: inc.edge,
                near: 4.0 * scale,
                far: -scale,
            }
        })
        .collect();
    VertexRow::Kirchhoff { diag, branches }
}

/// Assemble the finite-difference system for `a w'' + b w' - c w + g = 0`.
///
/// Interior rows use the 3-point second difference and a central first
/// difference; rows whose cell Péclet number `h|b|/(2a)` reaches 1 switch to
/// first-order upwinding so that off-diagonal entries stay nonnegative.
pub fn assemble_linear(grid: &Arc<NetworkGrid>, coeffs: &LinearCoefficients) -> Result<SparseSystem> {
    assemble_linear_with(grid, coeffs, Execution::default())
}

pub fn assemble_linear_with(
    grid: &Arc<NetworkGrid>,
    coeffs: &LinearCoefficients,
    exec: Execution,
) -> Result<SparseSystem> {
    let net = grid.network();
    if coeffs.gamma.len() != net.vertex_count() {
        return Err(Error::GridMismatch {
            expected: net.vertex_count(),
            got: coeffs.gamma.len(),
        });
    }

    let per_edge = exec.try_map(net.edge_count(), |j| {
        let e = EdgeId(j);
        let h = grid.spacing(e);
        let n = grid.intervals(e);
        let mut rows = Vec::with_capacity(n - 1);
        let mut rhs = Vec::with_capacity(n - 1);
        for k in 1..n {
            let y = grid.position(e, k);
            let a = coeffs.a.eval(net, e, y);
            let b = coeffs.b.eval(net, e, y);
            let c = coeffs.c.eval(net, e, y);
            let g = coeffs.g.eval(net, e, y);
            let violation = |what| Error::CoefficientSignViolation {
                edge: net.edge(e).name.clone(),
                y,
                what,
            };
            if !(a > 0.0) || !a.is_finite() {
                return Err(violation("diffusion a must be positive"));
            }
            if !(c >= 0.0) || !c.is_finite() {
                return Err(violation("reaction c must be nonnegative"));
            }
            if !b.is_finite() || !g.is_finite() {
                return Err(violation("non-finite drift or source"));
            }
            rows.push(interior_stencil(a, b, c, h));
            rhs.push(-g);
        }
        Ok::<_, Error>((rows, rhs))
    })?;

    let mut interior = Vec::with_capacity(grid.interior_count());
    let mut rhs = Vec::with_capacity(grid.unknowns());
    for (rows, r) in per_edge {
        interior.extend(rows);
        rhs.extend(r);
    }
    let mut vertex_rows = Vec::with_capacity(net.vertex_count());
    for v in net.vertex_ids() {
        if net.is_boundary(v) {
            vertex_rows.push(VertexRow::Dirichlet);
            rhs.push(coeffs.gamma[v.0]);
        } else {
            vertex_rows.push(kirchhoff_row(grid, v));
            rhs.push(0.0);
        }
    }
    Ok(SparseSystem::from_parts(Arc::clone(grid), interior, vertex_rows, rhs))
}

pub(crate) fn interior_stencil(a: f64, b: f64, c: f64, h: f64) -> TriRow {
    let diff = a / (h * h);
    let peclet = h * b.abs() / (2.0 * a);
    if peclet >= 1.0 {
        if b > 0.0 {
            TriRow {
                lower: diff,
                diag: -2.0 * diff - b / h - c,
                upper: diff + b / h,
                upwind: true,
            }
        } else {
            TriRow {
                lower: diff - b / h,
                diag: -2.0 * diff + b / h - c,
                upper: diff,
                upwind: true,
            }
        }
    } else {
        let conv = b / (2.0 * h);
        TriRow {
            lower: diff - conv,
            diag: -2.0 * diff - c,
            upper: diff + conv,
            upwind: false,
        }
    }
}
