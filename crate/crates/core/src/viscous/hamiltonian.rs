//! Hamiltonians `H^j(y, r, p)` on the edges, a small named catalog, and a
//! sampling validator for the structural assumptions the theory relies on.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::EdgeField;
use crate::network::{EdgeId, Network, VertexId};

pub trait Hamiltonian: Send + Sync {
    fn value(&self, edge: EdgeId, y: f64, r: f64, p: f64) -> f64;

    /// `(∂H/∂r, ∂H/∂p)` when known in closed form.
    fn partials(&self, _edge: EdgeId, _y: f64, _r: f64, _p: f64) -> Option<(f64, f64)> {
        None
    }
}

/// Hamiltonian given by a closure, with finite-difference derivatives.
pub struct FnHamiltonian<F>(pub F);

impl<F> Hamiltonian for FnHamiltonian<F>
where
    F: Fn(EdgeId, f64, f64, f64) -> f64 + Send + Sync,
{
    fn value(&self, edge: EdgeId, y: f64, r: f64, p: f64) -> f64 {
        (self.0)(edge, y, r, p)
    }
}

/// Which structural assumptions the author of a Hamiltonian claims.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AssumptionClaims {
    /// H0: continuity.
    pub continuous: bool,
    /// H1: nondecreasing in `r`.
    pub monotone_in_r: bool,
    /// H3: nondecreasing in `p > 0` at transition vertices.
    pub monotone_in_p_at_vertices: bool,
    /// H4: coercive in `p`.
    pub coercive: bool,
    /// H5: same Hamiltonian on every edge at a shared vertex.
    pub vertex_continuity: bool,
    /// H6: even in `p` at transition vertices.
    pub vertex_symmetry: bool,
    /// Strictly increasing in `r`.
    pub strictly_monotone_in_r: bool,
    /// `K` with `|H(x,r,p) - H(x,s,q)| <= K(|r-s| + |p-q|)`, if claimed.
    pub lipschitz_bound: Option<f64>,
}

impl AssumptionClaims {
    pub fn all_standard() -> Self {
        Self {
            continuous: true,
            monotone_in_r: true,
            monotone_in_p_at_vertices: true,
            coercive: true,
            vertex_continuity: true,
            vertex_symmetry: true,
            strictly_monotone_in_r: false,
            lipschitz_bound: None,
        }
    }
}

#[derive(Clone)]
pub struct HamiltonianSpec {
    pub name: String,
    pub hamiltonian: Arc<dyn Hamiltonian>,
    pub claims: AssumptionClaims,
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSpec")
            .field("name", &self.name)
            .field("claims", &self.claims)
            .finish()
    }
}

impl HamiltonianSpec {
    pub fn new(name: &str, h: impl Hamiltonian + 'static, claims: AssumptionClaims) -> Self {
        Self {
            name: name.to_owned(),
            hamiltonian: Arc::new(h),
            claims,
        }
    }

    pub fn from_fn(name: &str, f: impl Fn(EdgeId, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, FnHamiltonian(f), AssumptionClaims::default())
    }

    pub fn value(&self, edge: EdgeId, y: f64, r: f64, p: f64) -> f64 {
        self.hamiltonian.value(edge, y, r, p)
    }
}

fn lengths(net: &Network) -> Vec<f64> {
    net.edge_ids().map(|e| net.edge(e).length).collect()
}

/// `|p|^2 - f(y)`
pub struct Eikonal2 {
    source: EdgeField,
    lengths: Vec<f64>,
}

impl Hamiltonian for Eikonal2 {
    fn value(&self, edge: EdgeId, y: f64, _r: f64, p: f64) -> f64 {
        p * p - self.source.on(edge).eval(y, self.lengths[edge.0])
    }

    fn partials(&self, _edge: EdgeId, _y: f64, _r: f64, p: f64) -> Option<(f64, f64)> {
        Some((0.0, 2.0 * p))
    }
}

/// `|p|^alpha + b(y) r + f(y)`
pub struct Power {
    alpha: f64,
    b: EdgeField,
    f: EdgeField,
    lengths: Vec<f64>,
}

impl Hamiltonian for Power {
    fn value(&self, edge: EdgeId, y: f64, r: f64, p: f64) -> f64 {
        let l = self.lengths[edge.0];
        p.abs().powf(self.alpha) + self.b.on(edge).eval(y, l) * r + self.f.on(edge).eval(y, l)
    }

    fn partials(&self, edge: EdgeId, y: f64, _r: f64, p: f64) -> Option<(f64, f64)> {
        let dp = if p == 0.0 {
            0.0
        } else {
            self.alpha * p.abs().powf(self.alpha - 1.0) * p.signum()
        };
        Some((self.b.on(edge).eval(y, self.lengths[edge.0]), dp))
    }
}

/// `r + |p|^2 - f(y)`
pub struct LinearDecay {
    source: EdgeField,
    lengths: Vec<f64>,
}

impl Hamiltonian for LinearDecay {
    fn value(&self, edge: EdgeId, y: f64, r: f64, p: f64) -> f64 {
        r + p * p - self.source.on(edge).eval(y, self.lengths[edge.0])
    }

    fn partials(&self, _edge: EdgeId, _y: f64, _r: f64, p: f64) -> Option<(f64, f64)> {
        Some((1.0, 2.0 * p))
    }
}

/// Parameters for the catalog entries; unused ones are ignored.
#[derive(Clone, Debug)]
pub struct CatalogParams {
    pub f: EdgeField,
    pub b: EdgeField,
    pub alpha: f64,
}

impl Default for CatalogParams {
    fn default() -> Self {
        Self {
            f: EdgeField::constant(1.0),
            b: EdgeField::zero(),
            alpha: 2.0,
        }
    }
}

pub const CATALOG: [&str; 3] = ["eikonal2", "power", "linear-decay"];

pub fn eikonal2(net: &Network, source: EdgeField) -> HamiltonianSpec {
    HamiltonianSpec::new(
        "eikonal2",
        Eikonal2 {
            source,
            lengths: lengths(net),
        },
        AssumptionClaims::all_standard(),
    )
}

/// Build a catalog Hamiltonian by name: `eikonal2`, `power`, or `linear-decay`.
pub fn catalog(name: &str, net: &Network, params: &CatalogParams) -> Result<HamiltonianSpec> {
    match name {
        "eikonal2" => Ok(eikonal2(net, params.f.clone())),
        "power" => {
            if !(params.alpha > 0.0) {
                return Err(Error::Parse {
                    line: 0,
                    column: 0,
                    message: format!("power Hamiltonian needs alpha > 0, got {}", params.alpha),
                });
            }
            Ok(HamiltonianSpec::new(
                "power",
                Power {
                    alpha: params.alpha,
                    b: params.b.clone(),
                    f: params.f.clone(),
                    lengths: lengths(net),
                },
                AssumptionClaims::all_standard(),
            ))
        }
        "linear-decay" => Ok(HamiltonianSpec::new(
            "linear-decay",
            LinearDecay {
                source: params.f.clone(),
                lengths: lengths(net),
            },
            AssumptionClaims {
                strictly_monotone_in_r: true,
                ..AssumptionClaims::all_standard()
            },
        )),
        other => Err(Error::UnknownId(format!("hamiltonian `{other}`"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub x_samples: usize,
    pub r_samples: usize,
    pub p_samples: usize,
    pub r_max: f64,
    pub p_max: f64,
    /// `(theta, eta)` pairs for the coercivity probe.
    pub levels: Vec<(f64, f64)>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            x_samples: 64,
            r_samples: 41,
            p_samples: 201,
            r_max: 10.0,
            p_max: 50.0,
            levels: vec![(0.0, 0.0)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Assumption {
    H0Continuity,
    H1MonotoneInR,
    H3MonotoneInPAtVertices,
    H5VertexContinuity,
    H6VertexSymmetry,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub edge: Option<String>,
    pub vertex: Option<String>,
    pub checked: usize,
    pub violated: usize,
    /// Largest violation magnitude.
    pub worst_gap: f64,
    /// `(y, r, p)` of the worst violation.
    pub worst_at: Option<(f64, f64, f64)>,
}

impl AssumptionCheck {
    fn new(assumption: Assumption, edge: Option<String>, vertex: Option<String>) -> Self {
        Self {
            assumption,
            edge,
            vertex,
            checked: 0,
            violated: 0,
            worst_gap: 0.0,
            worst_at: None,
        }
    }

    fn record(&mut self, gap: f64, at: (f64, f64, f64)) {
        self.checked += 1;
        if gap > 0.0 {
            self.violated += 1;
            if gap > self.worst_gap || self.worst_at.is_none() {
                self.worst_gap = gap;
                self.worst_at = Some(at);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CoercivityResult {
    /// `H > theta` for every probed `|p|` in `(M, p_max]` and `r >= eta`.
    Found(f64),
    NotFoundWithinRange,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoercivityProbe {
    pub theta: f64,
    pub eta: f64,
    pub result: CoercivityResult,
}

/// `p ↦ H^j(v_i, 0, p)` at a transition vertex.
#[derive(Clone, Debug, Serialize)]
pub struct VertexProfile {
    pub vertex: String,
    pub edge: String,
    pub p: Vec<f64>,
    pub values: Vec<f64>,
    pub argmin_p: f64,
    pub min_at_zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianReport {
    pub name: String,
    pub claims: AssumptionClaims,
    pub checks: Vec<AssumptionCheck>,
    pub coercivity: Vec<CoercivityProbe>,
    pub profiles: Vec<VertexProfile>,
}

impl HamiltonianReport {
    pub fn violations(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| c.violated > 0)
    }

    pub fn is_clean(&self) -> bool {
        self.violations().next().is_none()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| {
            if k + 1 == n {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn excess(lhs: f64, rhs: f64) -> f64 {
    // amount by which lhs exceeds rhs beyond rounding
    let tol = 1e-9 * (1.0 + lhs.abs().max(rhs.abs()));
    let d = lhs - rhs;
    if d > tol {
        d
    } else {
        0.0
    }
}

/// Probe the structural assumptions on sample grids. Findings are report
/// entries; nothing here fails.
pub fn validate_hamiltonian(spec: &HamiltonianSpec, net: &Network, probe: &ProbeConfig) -> HamiltonianReport {
    let h = &spec.hamiltonian;
    let rs = linspace(-probe.r_max, probe.r_max, probe.r_samples.max(2));
    let ps_pos = linspace(0.0, probe.p_max, probe.p_samples.max(2));
    let ps_sym: Vec<f64> = ps_pos
        .iter()
        .rev()
        .map(|p| -p)
        .chain(ps_pos.iter().skip(1).copied())
        .collect();
    let mut checks = Vec::new();

    for e in net.edge_ids() {
        let name = Some(net.edge(e).name.clone());
        let xs = linspace(0.0, net.edge(e).length, probe.x_samples.max(2));
        let mut h0 = AssumptionCheck::new(Assumption::H0Continuity, name.clone(), None);
        let mut h1 = AssumptionCheck::new(Assumption::H1MonotoneInR, name, None);
        for &x in &xs {
            for &p in &ps_sym {
                let mut prev: Option<f64> = None;
                for &r in &rs {
                    let v = h.value(e, x, r, p);
                    h0.record(if v.is_finite() { 0.0 } else { 1.0 }, (x, r, p));
                    if let Some(pv) = prev {
                        h1.record(excess(pv, v), (x, r, p));
                    }
                    prev = Some(v);
                }
            }
        }
        checks.push(h0);
        checks.push(h1);
    }

    let transition: Vec<VertexId> = net.transition_vertices().collect();
    let endpoint = |v: VertexId, e: EdgeId| {
        if net.edge(e).tail == v {
            0.0
        } else {
            net.edge(e).length
        }
    };
    for &v in &transition {
        let vname = Some(net.vertex(v).name.clone());
        let inc = net.incident(v);
        for i in inc {
            let ename = Some(net.edge(i.edge).name.clone());
            let y = endpoint(v, i.edge);
            let mut h3 = AssumptionCheck::new(Assumption::H3MonotoneInPAtVertices, ename.clone(), vname.clone());
            let mut h6 = AssumptionCheck::new(Assumption::H6VertexSymmetry, ename, vname.clone());
            for &r in &rs {
                let mut prev: Option<f64> = None;
                for &p in ps_pos.iter().skip(1) {
                    let v = h.value(i.edge, y, r, p);
                    if let Some(pv) = prev {
                        h3.record(excess(pv, v), (y, r, p));
                    }
                    prev = Some(v);
                    let m = h.value(i.edge, y, r, -p);
                    h6.record(excess((v - m).abs(), 0.0), (y, r, p));
                }
            }
            checks.push(h3);
            checks.push(h6);
        }
        if let Some((first, rest)) = inc.split_first() {
            let y0 = endpoint(v, first.edge);
            for other in rest {
                let y1 = endpoint(v, other.edge);
                let mut h5 = AssumptionCheck::new(
                    Assumption::H5VertexContinuity,
                    Some(format!("{}|{}", net.edge(first.edge).name, net.edge(other.edge).name)),
                    vname.clone(),
                );
                for &r in &rs {
                    for &p in &ps_sym {
                        let a = h.value(first.edge, y0, r, p);
                        let b = h.value(other.edge, y1, r, p);
                        h5.record(excess((a - b).abs(), 0.0), (y0, r, p));
                    }
                }
                checks.push(h5);
            }
        }
    }

    let coercivity = probe
        .levels
        .iter()
        .map(|&(theta, eta)| CoercivityProbe {
            theta,
            eta,
            result: coercivity_probe(spec, net, probe, theta, eta, &ps_pos),
        })
        .collect();

    let mut profiles = Vec::new();
    for &v in &transition {
        for i in net.incident(v) {
            let y = endpoint(v, i.edge);
            let values: Vec<f64> = ps_sym.iter().map(|&p| h.value(i.edge, y, 0.0, p)).collect();
            let (k, &min) = values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty p grid");
            let at_zero = values[ps_sym.len() / 2];
            profiles.push(VertexProfile {
                vertex: net.vertex(v).name.clone(),
                edge: net.edge(i.edge).name.clone(),
                argmin_p: ps_sym[k],
                min_at_zero: excess(at_zero, min) == 0.0,
                p: ps_sym.clone(),
                values,
            });
        }
    }

    HamiltonianReport {
        name: spec.name.clone(),
        claims: spec.claims.clone(),
        checks,
        coercivity,
        profiles,
    }
}

fn coercivity_probe(
    spec: &HamiltonianSpec,
    net: &Network,
    probe: &ProbeConfig,
    theta: f64,
    eta: f64,
    ps: &[f64],
) -> CoercivityResult {
    let rs = if eta < probe.r_max {
        linspace(eta, probe.r_max, probe.r_samples.max(2))
    } else {
        vec![eta]
    };
    let mut largest_failure: Option<f64> = None;
    'p: for &p in ps.iter().rev() {
        for e in net.edge_ids() {
            for x in linspace(0.0, net.edge(e).length, probe.x_samples.max(2)) {
                for &r in &rs {
                    for q in [p, -p] {
                        let v = spec.value(e, x, r, q);
                        if !(v > theta) {
                            largest_failure = Some(p);
                            break 'p;
                        }
                    }
                }
            }
        }
    }
    match largest_failure {
        None => CoercivityResult::Found(0.0),
        Some(p) if p >= probe.p_max => CoercivityResult::NotFoundWithinRange,
        Some(p) => CoercivityResult::Found(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::tripod;
    use crate::network::NetworkDescription;

    fn small_probe() -> ProbeConfig {
        ProbeConfig {
            x_samples: 5,
            r_samples: 11,
            p_samples: 201,
            ..ProbeConfig::default()
        }
    }

    #[test]
    fn eikonal_is_clean() {
        let net = tripod();
        let spec = eikonal2(&net, EdgeField::constant(1.0));
        let rep = validate_hamiltonian(&spec, &net, &small_probe());
        assert!(rep.is_clean(), "{:?}", rep.violations().collect::<Vec<_>>());
        assert_eq!(rep.coercivity[0].result, CoercivityResult::Found(1.0));
        assert_eq!(rep.profiles.len(), 3);
        assert!(rep.profiles.iter().all(|p| p.min_at_zero && p.argmin_p == 0.0));
    }

    #[test]
    fn decreasing_in_r_flags_every_pair() {
        let net = tripod();
        let spec = HamiltonianSpec::from_fn("bad", |_, _, r, p| -r + p * p);
        let probe = small_probe();
        let rep = validate_hamiltonian(&spec, &net, &probe);
        let h1: Vec<_> = rep
            .checks
            .iter()
            .filter(|c| c.assumption == Assumption::H1MonotoneInR)
            .collect();
        assert_eq!(h1.len(), 3);
        for c in h1 {
            assert!(c.checked > 0);
            assert_eq!(c.violated, c.checked);
        }
    }

    #[test]
    fn vertex_gap_detected() {
        let net = NetworkDescription::new()
            .boundary("v0", 0.0)
            .transition("v1")
            .boundary("v2", 0.0)
            .edge("e1", "v0", "v1", 1.0)
            .edge("e2", "v1", "v2", 1.0)
            .validate()
            .unwrap();
        let spec = HamiltonianSpec::from_fn("gap", |e, _, _, p| p * p + if e.0 == 1 { 1.0 } else { 0.0 });
        let rep = validate_hamiltonian(&spec, &net, &small_probe());
        let h5: Vec<_> = rep
            .violations()
            .filter(|c| c.assumption == Assumption::H5VertexContinuity)
            .collect();
        assert_eq!(h5.len(), 1);
        approx::assert_relative_eq!(h5[0].worst_gap, 1.0, epsilon = 1e-12);
        assert_eq!(h5[0].violated, h5[0].checked);
    }

    #[test]
    fn coercivity_not_found_for_bounded_h() {
        let net = tripod();
        let spec = HamiltonianSpec::from_fn("bounded", |_, _, _, p| p.abs().tanh());
        let rep = validate_hamiltonian(&spec, &net, &small_probe());
        assert_eq!(rep.coercivity[0].result, CoercivityResult::Found(0.0));
        let mut probe = small_probe();
        probe.levels = vec![(2.0, 0.0)];
        let rep = validate_hamiltonian(&spec, &net, &probe);
        assert_eq!(rep.coercivity[0].result, CoercivityResult::NotFoundWithinRange);
    }

    #[test]
    fn odd_in_p_breaks_symmetry() {
        let net = tripod();
        let spec = HamiltonianSpec::from_fn("odd", |_, _, _, p| p * p + p);
        let rep = validate_hamiltonian(&spec, &net, &small_probe());
        let h6: Vec<_> = rep
            .violations()
            .filter(|c| c.assumption == Assumption::H6VertexSymmetry)
            .collect();
        assert_eq!(h6.len(), 3);
        assert!(rep.profiles.iter().all(|p| !p.min_at_zero && p.argmin_p == -0.5));
    }

    #[test]
    fn catalog_names() {
        let net = tripod();
        for name in CATALOG {
            let spec = catalog(name, &net, &CatalogParams::default()).unwrap();
            assert_eq!(spec.name, name);
        }
        assert!(catalog("nope", &net, &CatalogParams::default()).is_err());
        let p = catalog(
            "power",
            &net,
            &CatalogParams {
                alpha: 1.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.value(EdgeId(0), 0.0, 2.0, -4.0), 8.0 + 1.0);
    }
}
