use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::EdgeField;
use crate::network::{EdgeId, InwardDerivative, Network, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EdgeResolution {
    Intervals(usize),
    Spacing(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Resolution {
    /// Target spacing `h*`: every edge gets `max(2, ceil(l/h*))` intervals.
    Spacing(f64),
    /// Interval counts in edge id order.
    Intervals(Vec<usize>),
    PerEdge(Vec<EdgeResolution>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeGrid {
    pub intervals: usize,
    pub spacing: f64,
    offset: usize,
}

/// Location of an unknown on the network grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeRef {
    Vertex(VertexId),
    /// Node `index` (1..intervals-1) of an edge, at `y = index * spacing`.
    Interior {
        edge: EdgeId,
        index: usize,
    },
}

/// Uniform grid on every edge with one shared unknown per vertex.
///
/// Unknowns are numbered edge by edge (interior nodes, increasing `y`),
/// followed by the vertices in id order.
#[derive(Debug)]
pub struct NetworkGrid {
    network: Arc<Network>,
    edges: Vec<EdgeGrid>,
    interior: usize,
}

pub fn build_grid(network: Arc<Network>, resolution: &Resolution) -> Result<Arc<NetworkGrid>> {
    let ne = network.edge_count();
    let per_edge: Vec<EdgeResolution> = match resolution {
        Resolution::Spacing(h) => vec![EdgeResolution::Spacing(*h); ne],
        Resolution::Intervals(n) => {
            if n.len() != ne {
                return Err(Error::ResolutionTooCoarse(format!(
                    "{} interval counts for {} edges",
                    n.len(),
                    ne
                )));
            }
            n.iter().map(|&n| EdgeResolution::Intervals(n)).collect()
        }
        Resolution::PerEdge(v) => {
            if v.len() != ne {
                return Err(Error::ResolutionTooCoarse(format!(
                    "{} resolutions for {} edges",
                    v.len(),
                    ne
                )));
            }
            v.clone()
        }
    };

    let mut edges = Vec::with_capacity(ne);
    let mut offset = 0;
    for (e, res) in network.edge_ids().zip(per_edge) {
        let length = network.edge(e).length;
        let intervals = match res {
            EdgeResolution::Spacing(h) if h.is_finite() && h > 0.0 => ((length / h).ceil() as usize).max(2),
            EdgeResolution::Spacing(h) => {
                return Err(Error::ResolutionTooCoarse(format!(
                    "nonpositive spacing {h} on edge `{}`",
                    network.edge(e).name
                )))
            }
            EdgeResolution::Intervals(n) if n >= 2 => n,
            EdgeResolution::Intervals(n) => {
                return Err(Error::ResolutionTooCoarse(format!(
                    "{n} intervals on edge `{}` (minimum 2)",
                    network.edge(e).name
                )))
            }
        };
        edges.push(EdgeGrid {
            intervals,
            spacing: length / intervals as f64,
            offset,
        });
        offset += intervals - 1;
    }
    Ok(Arc::new(NetworkGrid {
        network,
        edges,
        interior: offset,
    }))
}

impl NetworkGrid {
    pub fn network(&self) -> &Arc<Network> {
        &self.network
    }

    pub fn edge_grid(&self, e: EdgeId) -> &EdgeGrid {
        &self.edges[e.0]
    }

    pub fn intervals(&self, e: EdgeId) -> usize {
        self.edges[e.0].intervals
    }

    pub fn spacing(&self, e: EdgeId) -> f64 {
        self.edges[e.0].spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.edges.iter().map(|g| g.spacing).fold(0.0, f64::max)
    }

    pub fn unknowns(&self) -> usize {
        self.interior + self.network.vertex_count()
    }

    pub fn interior_count(&self) -> usize {
        self.interior
    }

    /// Range of unknown indices holding the interior nodes of `e`.
    pub fn interior_range(&self, e: EdgeId) -> std::ops::Range<usize> {
        let g = &self.edges[e.0];
        g.offset..g.offset + g.intervals - 1
    }

    pub fn vertex_unknown(&self, v: VertexId) -> usize {
        self.interior + v.0
    }

    /// Unknown index of node `k ∈ 0..=intervals` of edge `e`.
    pub fn node_unknown(&self, e: EdgeId, k: usize) -> usize {
        let g = &self.edges[e.0];
        if k == 0 {
            self.vertex_unknown(self.network.edge(e).tail)
        } else if k == g.intervals {
            self.vertex_unknown(self.network.edge(e).head)
        } else {
            debug_assert!(k < g.intervals);
            g.offset + k - 1
        }
    }

    /// Parameter value of node `k` on edge `e`; exact at both ends.
    pub fn position(&self, e: EdgeId, k: usize) -> f64 {
        let g = &self.edges[e.0];
        if k == g.intervals {
            self.network.edge(e).length
        } else {
            k as f64 * g.spacing
        }
    }

    pub fn locate(&self, unknown: usize) -> NodeRef {
        if unknown >= self.interior {
            return NodeRef::Vertex(VertexId(unknown - self.interior));
        }
        let j = self.edges.partition_point(|g| g.offset + g.intervals - 1 <= unknown);
        NodeRef::Interior {
            edge: EdgeId(j),
            index: unknown - self.edges[j].offset + 1,
        }
    }

    /// Node indices (along `e`) of the first two nodes entering `e` from `v`.
    pub fn inward_nodes(&self, v: VertexId, e: EdgeId) -> [usize; 2] {
        let n = self.edges[e.0].intervals;
        if self.network.edge(e).tail == v {
            [1, 2]
        } else {
            [n - 1, n - 2]
        }
    }
}

/// Values at every unknown of a [`NetworkGrid`]; continuous at vertices by construction.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<NetworkGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<NetworkGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.unknowns() {
            return Err(Error::GridMismatch {
                expected: grid.unknowns(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<NetworkGrid>) -> Self {
        let n = grid.unknowns();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Sample `f(edge, y)` at every node. Vertex values come from the
    /// lowest-numbered incident edge.
    pub fn from_fn(grid: Arc<NetworkGrid>, f: impl Fn(EdgeId, f64) -> f64) -> Self {
        let mut values = vec![f64::NAN; grid.unknowns()];
        let net = grid.network().clone();
        for e in net.edge_ids() {
            for k in 0..=grid.intervals(e) {
                let idx = grid.node_unknown(e, k);
                if values[idx].is_nan() {
                    values[idx] = f(e, grid.position(e, k));
                }
            }
        }
        Self { grid, values }
    }

    pub fn from_field(grid: Arc<NetworkGrid>, field: &EdgeField) -> Self {
        let net = grid.network().clone();
        Self::from_fn(grid, |e, y| field.eval(&net, e, y))
    }

    pub fn grid(&self) -> &Arc<NetworkGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, e: EdgeId, k: usize) -> f64 {
        self.values[self.grid.node_unknown(e, k)]
    }

    pub fn vertex_value(&self, v: VertexId) -> f64 {
        self.values[self.grid.vertex_unknown(v)]
    }

    /// Node values along `e` from tail to head, endpoints included.
    pub fn edge_values(&self, e: EdgeId) -> Vec<f64> {
        (0..=self.grid.intervals(e)).map(|k| self.at(e, k)).collect()
    }

    /// Linear interpolation between neighbouring nodes.
    pub fn sample(&self, e: EdgeId, y: f64) -> Result<f64> {
        let net = self.grid.network();
        if e.0 >= net.edge_count() {
            return Err(Error::UnknownId(format!("edge #{}", e.0)));
        }
        let length = net.edge(e).length;
        if !(0.0..=length).contains(&y) {
            return Err(Error::OutOfRange {
                edge: net.edge(e).name.clone(),
                y,
                length,
            });
        }
        let n = self.grid.intervals(e);
        let t = y / self.grid.spacing(e);
        let k = (t.floor() as usize).min(n - 1);
        let frac = t - k as f64;
        let left = self.at(e, k);
        if frac <= 0.0 {
            return Ok(left);
        }
        if k + 1 == n && y == length {
            return Ok(self.at(e, n));
        }
        Ok(left + frac * (self.at(e, k + 1) - left))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl GridFunction {
    /// `max |S^h u(v)|` over transition vertices; 0 if there are none.
    pub fn kirchhoff_residual(&self) -> f64 {
        let net = self.grid.network();
        net.transition_vertices()
            .map(|v| crate::network::s_beta(net, self, v).map_or(f64::NAN, f64::abs))
            .fold(0.0, f64::max)
    }
}

impl InwardDerivative for GridFunction {
    /// Second-order one-sided difference `(-3 u(v) + 4 u_1 - u_2) / (2h)`.
    fn inward_derivative(&self, _net: &Network, v: VertexId, e: EdgeId) -> f64 {
        let [k1, k2] = self.grid.inward_nodes(v, e);
        let h = self.grid.spacing(e);
        (-3.0 * self.vertex_value(v) + 4.0 * self.at(e, k1) - self.at(e, k2)) / (2.0 * h)
    }
}
