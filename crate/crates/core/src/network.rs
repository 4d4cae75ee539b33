//! Finite metric networks: vertices joined by parametrized edges.
//!
//! An edge `e` is parametrized by `y ∈ [0, length]`, running from its `tail`
//! (`y = 0`) to its `head` (`y = length`). Only combinatorics, lengths and
//! the junction weights `beta` enter the equations; no embedding is stored.
//!
//! Vertex and edge ids are dense indices assigned in declaration order; the
//! string names given at construction are kept for reporting. Boundary
//! vertices shared by several edges are split into degree-one copies during
//! validation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VertexKind {
    Boundary,
    Transition,
}

/// Signed incidence between a vertex and an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Incidence {
    /// The vertex is the edge's tail (`y = 0`).
    Tail,
    /// The vertex is the edge's head (`y = length`).
    Head,
    None,
}

impl Incidence {
    pub fn sign(self) -> i8 {
        match self {
            Incidence::Tail => 1,
            Incidence::Head => -1,
            Incidence::None => 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VertexDecl {
    pub id: String,
    pub kind: VertexKind,
    pub boundary_value: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EdgeDecl {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct BetaDecl {
    pub vertex: String,
    pub edge: String,
    pub value: f64,
}

/// Unvalidated network description, as read from a problem file or built in code.
#[derive(Clone, Debug, Default)]
pub struct NetworkDescription {
    pub vertices: Vec<VertexDecl>,
    pub edges: Vec<EdgeDecl>,
    pub beta: Vec<BetaDecl>,
}

impl NetworkDescription {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn boundary(mut self, id: &str, value: f64) -> Self {
        self.vertices.push(VertexDecl {
            id: id.to_owned(),
            kind: VertexKind::Boundary,
            boundary_value: Some(value),
        });
        self
    }

    pub fn transition(mut self, id: &str) -> Self {
        self.vertices.push(VertexDecl {
            id: id.to_owned(),
            kind: VertexKind::Transition,
            boundary_value: None,
        });
        self
    }

    pub fn edge(mut self, id: &str, tail: &str, head: &str, length: f64) -> Self {
        self.edges.push(EdgeDecl {
            id: id.to_owned(),
            tail: tail.to_owned(),
            head: head.to_owned(),
            length,
        });
        self
    }

    pub fn beta(mut self, vertex: &str, edge: &str, value: f64) -> Self {
        self.beta.push(BetaDecl {
            vertex: vertex.to_owned(),
            edge: edge.to_owned(),
            value,
        });
        self
    }

    pub fn validate(&self) -> Result<Network> {
        validate_network(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Incident {
    pub edge: EdgeId,
    pub beta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Vertex {
    pub name: String,
    pub kind: VertexKind,
    /// Dirichlet datum; zero for transition vertices.
    pub boundary_value: f64,
    /// Incident edges in id order with their junction weights.
    pub incident: Vec<Incident>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Edge {
    pub name: String,
    pub tail: VertexId,
    pub head: VertexId,
    pub length: f64,
}

/// A boundary vertex that was split into degree-one copies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Split {
    pub original: String,
    pub copies: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Network {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    splits: Vec<Split>,
}

/// Validate a description and normalize it into a [`Network`].
pub fn validate_network(desc: &NetworkDescription) -> Result<Network> {
    if desc.edges.is_empty() {
        return Err(Error::EmptyNetwork);
    }

    let mut vindex: HashMap<&str, usize> = HashMap::new();
    let mut vertices = Vec::with_capacity(desc.vertices.len());
    for v in &desc.vertices {
        if vindex.insert(v.id.as_str(), vertices.len()).is_some() {
            return Err(Error::DuplicateId(v.id.clone()));
        }
        let boundary_value = match (v.kind, v.boundary_value) {
            (VertexKind::Transition, Some(_)) => return Err(Error::BoundaryDataOnTransitionVertex(v.id.clone())),
            (VertexKind::Transition, None) => 0.0,
            (VertexKind::Boundary, g) => g.unwrap_or(0.0),
        };
        if !boundary_value.is_finite() {
            return Err(Error::NonFiniteBoundaryValue(v.id.clone()));
        }
        vertices.push(Vertex {
            name: v.id.clone(),
            kind: v.kind,
            boundary_value,
            incident: Vec::new(),
        });
    }

    let lookup = |name: &str| {
        vindex
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownId(name.to_owned()))
    };

    let mut eindex: HashMap<&str, usize> = HashMap::new();
    let mut pairs: HashMap<(usize, usize), &str> = HashMap::new();
    let mut edges = Vec::with_capacity(desc.edges.len());
    for e in &desc.edges {
        if eindex.insert(e.id.as_str(), edges.len()).is_some() {
            return Err(Error::DuplicateId(e.id.clone()));
        }
        let tail = lookup(&e.tail)?;
        let head = lookup(&e.head)?;
        if tail == head {
            return Err(Error::LoopEdge(e.id.clone()));
        }
        if !(e.length.is_finite() && e.length > 0.0) {
            return Err(Error::NonpositiveLength(e.id.clone(), e.length));
        }
        let key = (tail.min(head), tail.max(head));
        if let Some(other) = pairs.insert(key, e.id.as_str()) {
            return Err(Error::ParallelEdges(other.to_owned(), e.id.clone()));
        }
        let id = EdgeId(edges.len());
        vertices[tail].incident.push(Incident { edge: id, beta: 1.0 });
        vertices[head].incident.push(Incident { edge: id, beta: 1.0 });
        edges.push(Edge {
            name: e.id.clone(),
            tail: VertexId(tail),
            head: VertexId(head),
            length: e.length,
        });
    }

    // connectivity of the declared graph
    let mut seen = vec![false; vertices.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for inc in &vertices[v].incident {
            let e = &edges[inc.edge.0];
            let w = if e.tail.0 == v { e.head.0 } else { e.tail.0 };
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::Disconnected(vertices[v].name.clone(), vertices[0].name.clone()));
    }

    if !vertices.iter().any(|v| v.kind == VertexKind::Boundary) {
        return Err(Error::NoBoundaryVertex);
    }
    if let Some(v) = vertices
        .iter()
        .find(|v| v.kind == VertexKind::Transition && v.incident.len() == 1)
    {
        return Err(Error::DanglingTransitionVertex(v.name.clone()));
    }

    let mut seen_beta = BTreeSet::new();
    for b in &desc.beta {
        let v = lookup(&b.vertex)?;
        let e = eindex
            .get(b.edge.as_str())
            .copied()
            .ok_or_else(|| Error::UnknownId(b.edge.clone()))?;
        if vertices[v].kind == VertexKind::Boundary {
            return Err(Error::BetaOnBoundaryVertex(b.vertex.clone()));
        }
        if !seen_beta.insert((v, e)) {
            return Err(Error::DuplicateId(format!("{}.{}", b.vertex, b.edge)));
        }
        if !(b.value.is_finite() && b.value > 0.0) {
            return Err(Error::MissingOrNonpositiveBeta {
                vertex: b.vertex.clone(),
                edge: b.edge.clone(),
                value: b.value,
            });
        }
        let slot = vertices[v]
            .incident
            .iter_mut()
            .find(|inc| inc.edge.0 == e)
            .ok_or_else(|| Error::BetaOnNonIncidentEdge {
                vertex: b.vertex.clone(),
                edge: b.edge.clone(),
            })?;
        slot.beta = b.value;
    }

    let mut taken: BTreeSet<String> = vertices.iter().map(|v| v.name.clone()).collect();
    let mut splits = Vec::new();
    for v in 0..vertices.len() {
        if vertices[v].kind != VertexKind::Boundary || vertices[v].incident.len() <= 1 {
            continue;
        }
        let extra: Vec<Incident> = vertices[v].incident.drain(1..).collect();
        let mut copies = vec![vertices[v].name.clone()];
        for (k, inc) in extra.into_iter().enumerate() {
            let mut name = format!("{}#{}", vertices[v].name, k + 2);
            while taken.contains(&name) {
                name.push('#');
            }
            taken.insert(name.clone());
            let id = VertexId(vertices.len());
            let edge = &mut edges[inc.edge.0];
            if edge.tail.0 == v {
                edge.tail = id;
            } else {
                edge.head = id;
            }
            vertices.push(Vertex {
                name: name.clone(),
                kind: VertexKind::Boundary,
                boundary_value: vertices[v].boundary_value,
                incident: vec![inc],
            });
            copies.push(name);
        }
        splits.push(Split {
            original: vertices[v].name.clone(),
            copies,
        });
    }

    Ok(Network {
        vertices,
        edges,
        splits,
    })
}

impl Network {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.0]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.vertices.iter().position(|v| v.name == name).map(VertexId)
    }

    pub fn edge_id(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.name == name).map(EdgeId)
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.vertices[v.0].kind == VertexKind::Boundary
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_ids().filter(|&v| self.is_boundary(v))
    }

    pub fn transition_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_ids().filter(|&v| !self.is_boundary(v))
    }

    /// Boundary data indexed by vertex (zero at transition vertices).
    pub fn boundary_values(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.boundary_value).collect()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.vertices[v.0].incident.len()
    }

    pub fn incident(&self, v: VertexId) -> &[Incident] {
        &self.vertices[v.0].incident
    }

    pub fn beta(&self, v: VertexId, e: EdgeId) -> Option<f64> {
        self.vertices[v.0]
            .incident
            .iter()
            .find(|inc| inc.edge == e)
            .map(|inc| inc.beta)
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn incidence(&self, v: VertexId, e: EdgeId) -> Result<Incidence> {
        if v.0 >= self.vertices.len() {
            return Err(Error::UnknownId(format!("vertex #{}", v.0)));
        }
        let edge = self
            .edges
            .get(e.0)
            .ok_or_else(|| Error::UnknownId(format!("edge #{}", e.0)))?;
        Ok(if edge.tail == v {
            Incidence::Tail
        } else if edge.head == v {
            Incidence::Head
        } else {
            Incidence::None
        })
    }

    /// The endpoint of `e` opposite to `v`.
    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let edge = &self.edges[e.0];
        if edge.tail == v {
            edge.head
        } else {
            edge.tail
        }
    }

    pub fn min_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    /// Largest finite shortest-path distance between two vertices.
    pub fn metric_diameter(&self) -> f64 {
        let n = self.vertices.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in &self.edges {
            d[e.tail.0][e.head.0] = e.length;
            d[e.head.0][e.tail.0] = e.length;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d.iter()
            .flatten()
            .copied()
            .filter(|x| x.is_finite())
            .fold(0.0, f64::max)
    }

    /// Copy of the network with edge `e` parametrized in the opposite direction.
    pub fn with_reversed_edge(&self, e: EdgeId) -> Network {
        let mut net = self.clone();
        let edge = &mut net.edges[e.0];
        std::mem::swap(&mut edge.tail, &mut edge.head);
        net
    }

    /// Copy of the network with every junction weight multiplied by `factor`.
    pub fn with_scaled_beta(&self, factor: f64) -> Network {
        let mut net = self.clone();
        for v in &mut net.vertices {
            for inc in &mut v.incident {
                inc.beta *= factor;
            }
        }
        net
    }

    /// Copy of the network with new boundary data (indexed by vertex; transition entries ignored).
    pub fn with_boundary_values(&self, values: &[f64]) -> Network {
        let mut net = self.clone();
        for (v, &g) in net.vertices.iter_mut().zip(values) {
            if v.kind == VertexKind::Boundary {
                v.boundary_value = g;
            }
        }
        net
    }
}

/// Breadth-first edge-count distance from the boundary vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerPartition {
    layers: Vec<usize>,
    max_layer: usize,
}

impl LayerPartition {
    pub fn layer(&self, v: VertexId) -> usize {
        self.layers[v.0]
    }

    pub fn max_layer(&self) -> usize {
        self.max_layer
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }
}

pub fn layer_partition(net: &Network) -> LayerPartition {
    let mut layers = vec![usize::MAX; net.vertex_count()];
    let mut queue = VecDeque::new();
    for v in net.boundary_vertices() {
        layers[v.0] = 0;
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        for inc in net.incident(v) {
            let w = net.other_end(inc.edge, v);
            if layers[w.0] == usize::MAX {
                layers[w.0] = layers[v.0] + 1;
                queue.push_back(w);
            }
        }
    }
    let max_layer = layers.iter().copied().max().unwrap_or(0);
    LayerPartition { layers, max_layer }
}

/// Anything with one-sided derivatives along the edges at a vertex.
pub trait InwardDerivative {
    /// Derivative at `v` along `e`, taken in the direction pointing into the edge.
    fn inward_derivative(&self, net: &Network, v: VertexId, e: EdgeId) -> f64;
}

/// Kirchhoff operator: `Σ_j β_ij · (inward derivative along e_j at v_i)`.
///
/// Differencing inward absorbs the incidence signs: the tail-side inward
/// derivative is `+∂_y` and the head-side one is `-∂_y`.
pub fn s_beta<F: InwardDerivative + ?Sized>(net: &Network, field: &F, v: VertexId) -> Result<f64> {
    if net.is_boundary(v) {
        return Err(Error::NotTransitionVertex(net.vertex(v).name.clone()));
    }
    Ok(net
        .incident(v)
        .iter()
        .map(|inc| inc.beta * field.inward_derivative(net, v, inc.edge))
        .sum())
}

/// Function that is affine on each edge, determined by its vertex values.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearField {
    pub vertex_values: Vec<f64>,
    /// `d/dy` on each edge.
    pub slopes: Vec<f64>,
}

impl PiecewiseLinearField {
    pub fn from_vertex_values(net: &Network, values: Vec<f64>) -> Self {
        let slopes = net
            .edges
            .iter()
            .map(|e| (values[e.head.0] - values[e.tail.0]) / e.length)
            .collect();
        Self {
            vertex_values: values,
            slopes,
        }
    }
}

impl InwardDerivative for PiecewiseLinearField {
    fn inward_derivative(&self, net: &Network, v: VertexId, e: EdgeId) -> f64 {
        f64::from(net.incidence(v, e).map(Incidence::sign).unwrap_or(0)) * self.slopes[e.0]
    }
}

const FIELD_RETRIES: usize = 64;

/// Construct a piecewise-linear field with nonzero slopes and `S_β > 0` at
/// every transition vertex.
///
/// Vertex values grow geometrically toward the boundary,
/// `ξ_i = C^(m - layer(i)) · (1 + η·i)`, so each transition vertex sees at
/// least one strictly steeper climb toward a lower layer than all its
/// descents. The tiny `η` term separates adjacent vertices of equal layer.
/// `C` starts from `1 + deg_max·(β_max/β_min)·(l_max/l_min)` and doubles
/// until the result verifies.
pub fn kirchhoff_positive_field(net: &Network) -> Result<PiecewiseLinearField> {
    let layers = layer_partition(net);
    let m = layers.max_layer() as i32;
    let (mut bmin, mut bmax) = (f64::INFINITY, 0.0f64);
    for v in net.transition_vertices() {
        for inc in net.incident(v) {
            bmin = bmin.min(inc.beta);
            bmax = bmax.max(inc.beta);
        }
    }
    let ratio = if bmax > 0.0 { bmax / bmin } else { 1.0 };
    let deg_max = net.vertex_ids().map(|v| net.degree(v)).max().unwrap_or(1) as f64;
    let eta = 1e-6 / net.vertex_count() as f64;
    let mut c = 2.0 + deg_max * ratio * (net.max_length() / net.min_length());

    for _ in 0..FIELD_RETRIES {
        let values: Vec<f64> = net
            .vertex_ids()
            .map(|v| c.powi(m - layers.layer(v) as i32) * (1.0 + eta * v.0 as f64))
            .collect();
        let field = PiecewiseLinearField::from_vertex_values(net, values);
        let slopes_ok = field.slopes.iter().all(|a| a.is_finite() && *a != 0.0);
        let kirchhoff_ok = net
            .transition_vertices()
            .all(|v| s_beta(net, &field, v).is_ok_and(|s| s.is_finite() && s > 0.0));
        if slopes_ok && kirchhoff_ok {
            return Ok(field);
        }
        c *= 2.0;
    }
    Err(Error::ConstructionFailed(FIELD_RETRIES))
}

/// Per-vertex list of `(edge name → beta)` for reporting.
pub fn beta_table(net: &Network) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for v in net.transition_vertices() {
        for inc in net.incident(v) {
            out.insert(format!("{}.{}", net.vertex(v).name, net.edge(inc.edge).name), inc.beta);
        }
    }
    out
}
