//! Exact first-order solution of the eikonal problem `|u'| = f`, `u = g` on
//! the boundary: the weighted distance to the boundary vertices.
//!
//! Vertex values come from a multi-source Dijkstra over integrated edge
//! weights; on an edge the minimum is then taken over leaving through the
//! tail or through the head, which is exact because edges are intervals.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::sync::Arc;

use serde::Serialize;

use crate::discretization::{GridFunction, NetworkGrid};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::EdgeField;
use crate::network::{EdgeId, Network, VertexId};

/// Densities in `[0, DENSITY_FLOOR)` are raised to the floor before integrating.
pub const DENSITY_FLOOR: f64 = 1e-8;

/// Largest network [`brute_force_distance`] accepts.
pub const BRUTE_FORCE_MAX_EDGES: usize = 12;

/// `F_j(y_k) = ∫_0^{y_k} f^j` at every grid node, by the composite trapezoid rule.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeWeightTable {
    pub cumulative: Vec<Vec<f64>>,
}

impl EdgeWeightTable {
    pub fn total(&self, e: EdgeId) -> f64 {
        *self.cumulative[e.0].last().expect("at least two nodes")
    }

    pub fn partial(&self, e: EdgeId, k: usize) -> f64 {
        self.cumulative[e.0][k]
    }
}

pub fn edge_weights(grid: &NetworkGrid, f: &EdgeField) -> Result<EdgeWeightTable> {
    edge_weights_floored(grid, f, DENSITY_FLOOR)
}

pub fn edge_weights_floored(grid: &NetworkGrid, f: &EdgeField, floor: f64) -> Result<EdgeWeightTable> {
    let net = grid.network();
    let mut cumulative = Vec::with_capacity(net.edge_count());
    for e in net.edge_ids() {
        let n = grid.intervals(e);
        let h = grid.spacing(e);
        let mut vals = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let y = grid.position(e, k);
            let v = f.eval(net, e, y);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NonpositiveDensity {
                    edge: net.edge(e).name.clone(),
                    y,
                    value: v,
                    floor,
                });
            }
            vals.push(v.max(floor));
        }
        let mut acc = Vec::with_capacity(n + 1);
        acc.push(0.0);
        let mut s = 0.0;
        for k in 0..n {
            s += 0.5 * h * (vals[k] + vals[k + 1]);
            acc.push(s);
        }
        cumulative.push(acc);
    }
    Ok(EdgeWeightTable { cumulative })
}

/// Which end of its edge a node's minimizing path leaves through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exit {
    Tail,
    Head,
}

#[derive(Clone, Debug)]
pub struct DistanceField {
    pub u: GridFunction,
    /// Edge through which each vertex is reached on a minimizing path;
    /// `None` at boundary vertices and unreachable ones.
    pub predecessor: Vec<Option<EdgeId>>,
    pub weights: EdgeWeightTable,
}

impl DistanceField {
    /// `(u(tail) + F(y_k), u(head) + W - F(y_k))`
    pub fn candidates(&self, e: EdgeId, k: usize) -> (f64, f64) {
        let grid = self.u.grid();
        let edge = grid.network().edge(e);
        let f = self.weights.partial(e, k);
        (
            self.u.vertex_value(edge.tail) + f,
            self.u.vertex_value(edge.head) + self.weights.total(e) - f,
        )
    }

    /// Exit of the minimizing path; `None` on a tie.
    pub fn exit(&self, e: EdgeId, k: usize) -> Option<Exit> {
        let (t, h) = self.candidates(e, k);
        if (t - h).abs() <= 1e-12 * (1.0 + t.abs().max(h.abs())) {
            None
        } else if t < h {
            Some(Exit::Tail)
        } else {
            Some(Exit::Head)
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn check_boundary(net: &Network, g: &[f64]) -> Result<()> {
    if g.len() != net.vertex_count() {
        return Err(Error::GridMismatch {
            expected: net.vertex_count(),
            got: g.len(),
        });
    }
    for v in net.boundary_vertices() {
        if !g[v.0].is_finite() {
            return Err(Error::NonFiniteBoundaryValue(net.vertex(v).name.clone()));
        }
    }
    Ok(())
}

fn fill_edges(
    grid: &Arc<NetworkGrid>,
    vertex_values: &[f64],
    weights: &EdgeWeightTable,
    exec: Execution,
) -> GridFunction {
    let net = grid.network();
    let per_edge = exec.map(net.edge_count(), |j| {
        let e = EdgeId(j);
        let edge = net.edge(e);
        let (ut, uh) = (vertex_values[edge.tail.0], vertex_values[edge.head.0]);
        let w = weights.total(e);
        (1..grid.intervals(e))
            .map(|k| {
                let f = weights.partial(e, k);
                (ut + f).min(uh + w - f)
            })
            .collect::<Vec<_>>()
    });
    let mut values: Vec<f64> = per_edge.into_iter().flatten().collect();
    values.extend_from_slice(vertex_values);
    GridFunction::new(Arc::clone(grid), values).expect("sizes match the grid")
}

pub fn weighted_boundary_distance(grid: &Arc<NetworkGrid>, f: &EdgeField, g: &[f64]) -> Result<DistanceField> {
    weighted_boundary_distance_with(grid, f, g, Execution::default())
}

pub fn weighted_boundary_distance_with(
    grid: &Arc<NetworkGrid>,
    f: &EdgeField,
    g: &[f64],
    exec: Execution,
) -> Result<DistanceField> {
    let net = grid.network();
    check_boundary(net, g)?;
    let weights = edge_weights(grid, f)?;
    let nv = net.vertex_count();
    let mut dist = vec![f64::INFINITY; nv];
    let mut pred = vec![None; nv];
    let mut done = vec![false; nv];
    let mut heap = BinaryHeap::new();
    for v in net.boundary_vertices() {
        dist[v.0] = g[v.0];
        heap.push(Reverse((Key(g[v.0]), v.0)));
    }
    while let Some(Reverse((Key(d), v))) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        for inc in net.incident(VertexId(v)) {
            let w = net.other_end(inc.edge, VertexId(v)).0;
            // boundary values are imposed, never relaxed
            if done[w] || net.is_boundary(VertexId(w)) {
                continue;
            }
            let cand = d + weights.total(inc.edge);
            if cand < dist[w] {
                dist[w] = cand;
                pred[w] = Some(inc.edge);
                heap.push(Reverse((Key(cand), w)));
            }
        }
    }
    Ok(DistanceField {
        u: fill_edges(grid, &dist, &weights, exec),
        predecessor: pred,
        weights,
    })
}

/// The same field by enumerating every simple path from every boundary
/// vertex. Exponential; for cross-checking on small networks only.
pub fn brute_force_distance(grid: &Arc<NetworkGrid>, f: &EdgeField, g: &[f64]) -> Result<DistanceField> {
    let net = grid.network();
    if net.edge_count() > BRUTE_FORCE_MAX_EDGES {
        return Err(Error::TooLarge(net.edge_count()));
    }
    check_boundary(net, g)?;
    let weights = edge_weights(grid, f)?;
    let nv = net.vertex_count();
    let mut best = vec![f64::INFINITY; nv];
    let mut pred = vec![None; nv];

    struct Walk<'a> {
        net: &'a Network,
        weights: &'a EdgeWeightTable,
        on_path: Vec<bool>,
        best: &'a mut [f64],
        pred: &'a mut [Option<EdgeId>],
    }

    impl Walk<'_> {
        fn go(&mut self, v: VertexId, cost: f64) {
            for inc in self.net.incident(v) {
                let w = self.net.other_end(inc.edge, v);
                if self.on_path[w.0] || self.net.is_boundary(w) {
                    continue;
                }
                let c = cost + self.weights.total(inc.edge);
                if c < self.best[w.0] {
                    self.best[w.0] = c;
                    self.pred[w.0] = Some(inc.edge);
                }
                self.on_path[w.0] = true;
                self.go(w, c);
                self.on_path[w.0] = false;
            }
        }
    }

    for b in net.boundary_vertices() {
        best[b.0] = g[b.0];
    }
    for b in net.boundary_vertices() {
        let mut on_path = vec![false; nv];
        on_path[b.0] = true;
        let mut walk = Walk {
            net,
            weights: &weights,
            on_path,
            best: &mut best,
            pred: &mut pred,
        };
        walk.go(b, g[b.0]);
    }
    Ok(DistanceField {
        u: fill_edges(grid, &best, &weights, Execution::Sequential),
        predecessor: pred,
        weights,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EikonalResidual {
    /// `max ||Du| - f|` over non-kink interior nodes.
    pub max_residual: f64,
    pub kinks: usize,
    pub checked: usize,
}

/// Residual of `|u'| = f` with central differences. A node is a kink when
/// its two exit candidates are within `max f * h` of each other, or when its
/// two neighbours leave strictly through different ends.
pub fn eikonal_residual(field: &DistanceField, f: &EdgeField) -> EikonalResidual {
    let u = &field.u;
    let grid = u.grid();
    let net = grid.network();
    let mut out = EikonalResidual {
        max_residual: 0.0,
        kinks: 0,
        checked: 0,
    };
    for e in net.edge_ids() {
        let n = grid.intervals(e);
        let h = grid.spacing(e);
        let fmax = (0..=n).map(|k| f.eval(net, e, grid.position(e, k))).fold(0.0, f64::max);
        for k in 1..n {
            let (t, hd) = field.candidates(e, k);
            let split = matches!(
                (field.exit(e, k - 1), field.exit(e, k + 1)),
                (Some(a), Some(b)) if a != b
            );
            if (t - hd).abs() <= fmax * h || split {
                out.kinks += 1;
                continue;
            }
            let du = (u.at(e, k + 1) - u.at(e, k - 1)) / (2.0 * h);
            let r = (du.abs() - f.eval(net, e, grid.position(e, k))).abs();
            out.max_residual = out.max_residual.max(r);
            out.checked += 1;
        }
    }
    out
}
