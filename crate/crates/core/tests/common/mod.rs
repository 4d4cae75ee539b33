#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use graph_hj::field::{EdgeField, EdgeFunction};
use graph_hj::network::{Network, NetworkDescription};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct NetSpec {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub lengths: (f64, f64),
    pub beta: (f64, f64),
    pub g: (f64, f64),
}

impl Default for NetSpec {
    fn default() -> Self {
        Self {
            max_vertices: 6,
            max_edges: 6,
            lengths: (0.5, 2.0),
            beta: (1.0, 1.0),
            g: (0.0, 0.0),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Random connected network: a random tree plus a few chords. Leaves are
/// boundary vertices; a random subset of the others is too.
pub fn random_network(rng: &mut ChaCha8Rng, spec: &NetSpec) -> Network {
    loop {
        let nv = rng.random_range(2..=spec.max_vertices);
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut seen = BTreeSet::new();
        for v in 1..nv {
            let u = rng.random_range(0..v);
            edges.push((u, v));
            seen.insert((u.min(v), u.max(v)));
        }
        if edges.len() > spec.max_edges {
            continue;
        }
        let chords = rng.random_range(0..=2usize);
        for _ in 0..chords {
            if edges.len() >= spec.max_edges {
                break;
            }
            let a = rng.random_range(0..nv);
            let b = rng.random_range(0..nv);
            if a != b && seen.insert((a.min(b), a.max(b))) {
                edges.push((a, b));
            }
        }
        let mut degree = vec![0; nv];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut boundary: Vec<bool> = degree.iter().map(|&d| d == 1).collect();
        for b in boundary.iter_mut() {
            if !*b && rng.random_bool(0.2) {
                *b = true;
            }
        }
        if !boundary.iter().any(|&b| b) {
            let v = rng.random_range(0..nv);
            boundary[v] = true;
        }
        let mut desc = NetworkDescription::new();
        for (v, &is_boundary) in boundary.iter().enumerate() {
            let id = format!("v{v}");
            desc = if is_boundary {
                let g = uniform(rng, spec.g);
                desc.boundary(&id, g)
            } else {
                desc.transition(&id)
            };
        }
        // random orientation
        for (j, &(a, b)) in edges.iter().enumerate() {
            let (t, h) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            let l = uniform(rng, spec.lengths);
            desc = desc.edge(&format!("e{j}"), &format!("v{t}"), &format!("v{h}"), l);
        }
        for (j, &(a, b)) in edges.iter().enumerate() {
            for v in [a, b] {
                if !boundary[v] {
                    let beta = uniform(rng, spec.beta);
                    desc = desc.beta(&format!("v{v}"), &format!("e{j}"), beta);
                }
            }
        }
        return desc.validate().expect("generator builds valid networks");
    }
}

/// One affine function per edge with both end values in `range`.
pub fn random_affine(rng: &mut ChaCha8Rng, net: &Network, range: (f64, f64)) -> EdgeField {
    EdgeField::PerEdge(
        net.edge_ids()
            .map(|e| {
                let l = net.edge(e).length;
                let y0 = uniform(rng, range);
                let y1 = uniform(rng, range);
                EdgeFunction::Affine {
                    intercept: y0,
                    slope: (y1 - y0) / l,
                }
            })
            .collect(),
    )
}

pub fn shuffle<T>(rng: &mut ChaCha8Rng, v: &mut [T]) {
    v.shuffle(rng);
}

pub fn arc(net: Network) -> Arc<Network> {
    Arc::new(net)
}
