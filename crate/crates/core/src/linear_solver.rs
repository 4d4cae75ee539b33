//! Direct solution of assembled network systems.
//!
//! Interior unknowns of an edge form a tridiagonal block that couples only
//! to the edge's two vertex unknowns. Each block is factored once and
//! expressed as an affine function of its two vertex values; substituting
//! into the vertex rows leaves a dense system of size `|V|`, solved by LU
//! with partial pivoting.

use serde::Serialize;

use crate::discretization::{GridFunction, NodeRef, SparseSystem, VertexRow};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::network::EdgeId;

/// Relative pivot threshold for both the tridiagonal and the dense factorizations.
pub const PIVOT_THRESHOLD: f64 = 1e-13;

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    /// `max |A w - rhs|` on the assembled system.
    pub residual_sup: f64,
    /// Smallest pivot magnitude met in any factorization.
    pub min_pivot: f64,
    pub certificate: Option<MaxPrincipleCertificate>,
}

/// Interior values of one edge as `z0 + w_tail * zt + w_head * zh`.
struct EdgeElimination {
    z0: Vec<f64>,
    zt: Vec<f64>,
    zh: Vec<f64>,
    min_pivot: f64,
}

pub fn solve_linear(sys: &SparseSystem) -> Result<(GridFunction, SolveReport)> {
    solve_linear_with(sys, Execution::default())
}

pub fn solve_linear_with(sys: &SparseSystem, exec: Execution) -> Result<(GridFunction, SolveReport)> {
    let grid = sys.grid();
    let net = grid.network();
    let nv = net.vertex_count();

    let elim = exec.try_map(net.edge_count(), |j| eliminate_edge(sys, EdgeId(j)))?;
    let mut min_pivot = elim.iter().map(|e| e.min_pivot).fold(f64::INFINITY, f64::min);

    // condensed vertex system
    let mut m = vec![vec![0.0; nv]; nv];
    let mut r = vec![0.0; nv];
    for v in net.vertex_ids() {
        let row = grid.vertex_unknown(v);
        r[v.0] = sys.rhs()[row];
        match sys.vertex_row(v) {
            VertexRow::Dirichlet => m[v.0][v.0] = 1.0,
            VertexRow::Kirchhoff { diag, branches } => {
                m[v.0][v.0] += diag;
                for b in branches {
                    let [k1, k2] = grid.inward_nodes(v, b.edge);
                    for (k, coef) in [(k1, b.near), (k2, b.far)] {
                        let idx = grid.node_unknown(b.edge, k);
                        match grid.locate(idx) {
                            NodeRef::Vertex(u) => m[v.0][u.0] += coef,
                            NodeRef::Interior { edge, index } => {
                                let el = &elim[edge.0];
                                let i = index - 1;
                                let e = net.edge(edge);
                                r[v.0] -= coef * el.z0[i];
                                m[v.0][e.tail.0] += coef * el.zt[i];
                                m[v.0][e.head.0] += coef * el.zh[i];
                            }
                        }
                    }
                }
            }
        }
    }
    let (vertex_values, dense_pivot) = dense_lu_solve(m, r)?;
    min_pivot = min_pivot.min(dense_pivot);

    let mut values = vec![0.0; grid.unknowns()];
    for v in net.vertex_ids() {
        values[grid.vertex_unknown(v)] = vertex_values[v.0];
    }
    for (j, el) in elim.iter().enumerate() {
        let e = net.edge(EdgeId(j));
        let (wt, wh) = (vertex_values[e.tail.0], vertex_values[e.head.0]);
        let range = grid.interior_range(EdgeId(j));
        for (i, slot) in values[range].iter_mut().enumerate() {
            *slot = el.z0[i] + wt * el.zt[i] + wh * el.zh[i];
        }
    }

    let residual_sup = sys.residual_sup(&values);
    let u = GridFunction::new(grid.clone(), values)?;
    Ok((
        u,
        SolveReport {
            residual_sup,
            min_pivot,
            certificate: None,
        },
    ))
}

fn eliminate_edge(sys: &SparseSystem, e: EdgeId) -> Result<EdgeElimination> {
    let range = sys.grid().interior_range(e);
    let m = range.len();
    let rows: Vec<_> = range.clone().map(|r| *sys.interior_row(r)).collect();
    let scale = rows
        .iter()
        .map(|r| r.lower.abs().max(r.diag.abs()).max(r.upper.abs()))
        .fold(0.0, f64::max);
    let threshold = PIVOT_THRESHOLD * scale;

    // LU of the tridiagonal block: pivots u_i, multipliers l_i
    let mut piv = vec![0.0; m];
    let mut mult = vec![0.0; m];
    let mut min_pivot = f64::INFINITY;
    for i in 0..m {
        let mut d = rows[i].diag;
        if i > 0 {
            mult[i] = rows[i].lower / piv[i - 1];
            d -= mult[i] * rows[i - 1].upper;
        }
        if !(d.abs() > threshold) {
            return Err(Error::SingularSystem {
                pivot: d.abs(),
                threshold,
            });
        }
        min_pivot = min_pivot.min(d.abs());
        piv[i] = d;
    }
    let solve = |mut x: Vec<f64>| {
        for i in 1..m {
            x[i] -= mult[i] * x[i - 1];
        }
        x[m - 1] /= piv[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = (x[i] - rows[i].upper * x[i + 1]) / piv[i];
        }
        x
    };
    let z0 = solve(sys.rhs()[range].to_vec());
    let mut et = vec![0.0; m];
    et[0] = -rows[0].lower;
    let mut eh = vec![0.0; m];
    eh[m - 1] = -rows[m - 1].upper;
    Ok(EdgeElimination {
        z0,
        zt: solve(et),
        zh: solve(eh),
        min_pivot,
    })
}

/// Dense LU with partial pivoting; returns the solution and the smallest pivot.
fn dense_lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = PIVOT_THRESHOLD * scale;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap_or(k);
        let pivot = a[p][k];
        if !(pivot.abs() > threshold) {
            return Err(Error::SingularSystem {
                pivot: pivot.abs(),
                threshold,
            });
        }
        min_pivot = min_pivot.min(pivot.abs());
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(i);
                for (x, &y) in bottom[0][k..].iter_mut().zip(&top[k][k..]) {
                    *x -= f * y;
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok((x, min_pivot))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    /// The maximum is negative, so there is nothing to certify.
    NegativeMaximum,
    /// A boundary vertex attains the maximum.
    BoundaryMaximum,
    /// The function is constant.
    Constant,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxPrincipleCertificate {
    pub kind: CertificateKind,
    pub max_value: f64,
    pub location: NodeRef,
}

/// Certify that a nonnegative maximum of `u` sits on the boundary unless `u`
/// is constant. Meaningful when the system encodes `Lw >= 0` at interior
/// rows (i.e. `g <= 0` in `Lw + g = 0`) and homogeneous Kirchhoff rows.
pub fn check_discrete_max_principle(u: &GridFunction, sys: &SparseSystem) -> Result<MaxPrincipleCertificate> {
    let grid = sys.grid();
    if u.values().len() != grid.unknowns() {
        return Err(Error::GridMismatch {
            expected: grid.unknowns(),
            got: u.values().len(),
        });
    }
    let vals = u.values();
    let tol = 1e-10 * u.sup_norm().max(1.0);
    let (argmax, max_value) =
        vals.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, v)| if v > best.1 { (i, v) } else { best },
        );
    let min_value = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let location = grid.locate(argmax);

    if max_value < -tol {
        return Ok(MaxPrincipleCertificate {
            kind: CertificateKind::NegativeMaximum,
            max_value,
            location,
        });
    }
    if max_value - min_value <= tol {
        return Ok(MaxPrincipleCertificate {
            kind: CertificateKind::Constant,
            max_value,
            location,
        });
    }
    let net = grid.network();
    let boundary = net
        .boundary_vertices()
        .map(|v| (v, u.vertex_value(v)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((v, bmax)) = boundary {
        if bmax >= max_value - tol {
            return Ok(MaxPrincipleCertificate {
                kind: CertificateKind::BoundaryMaximum,
                max_value,
                location: NodeRef::Vertex(v),
            });
        }
    }
    Err(Error::CertificateFailed {
        node: location,
        value: max_value,
        boundary_max: boundary.map_or(f64::NEG_INFINITY, |b| b.1),
    })
}
