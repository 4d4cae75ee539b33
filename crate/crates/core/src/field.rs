//! Scalar functions of the edge parameter, used for coefficients and data.

use std::fmt;
use std::sync::Arc;

use crate::network::{EdgeId, Network};

/// A function of `y ∈ [0, length]` on one edge.
#[derive(Clone)]
pub enum EdgeFunction {
    Constant(f64),
    /// `intercept + slope * y`
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// Values at equally spaced points covering `[0, length]`; linear in between.
    Samples(Vec<f64>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// `scale * inner(y)^2`
    Square {
        scale: f64,
        inner: Box<EdgeFunction>,
    },
}

impl fmt::Debug for EdgeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Affine { intercept, slope } => write!(f, "Affine({intercept} + {slope}*y)"),
            Self::Samples(s) => write!(f, "Samples(len={})", s.len()),
            Self::Custom(_) => f.write_str("Custom(..)"),
            Self::Square { scale, inner } => write!(f, "Square({scale} * {inner:?}^2)"),
        }
    }
}

impl EdgeFunction {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn eval(&self, y: f64, length: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Affine { intercept, slope } => intercept + slope * y,
            Self::Samples(s) => interpolate_uniform(s, y, length),
            Self::Custom(f) => f(y),
            Self::Square { scale, inner } => {
                let v = inner.eval(y, length);
                scale * v * v
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Constant(c) => Self::Constant(c * factor),
            Self::Affine { intercept, slope } => Self::Affine {
                intercept: intercept * factor,
                slope: slope * factor,
            },
            Self::Samples(s) => Self::Samples(s.iter().map(|v| v * factor).collect()),
            Self::Custom(f) => {
                let f = Arc::clone(f);
                Self::custom(move |y| factor * f(y))
            }
            Self::Square { scale, inner } => Self::Square {
                scale: scale * factor,
                inner: inner.clone(),
            },
        }
    }

    /// The same function seen from the other end of the edge.
    pub fn reversed(&self, length: f64) -> Self {
        match self {
            Self::Constant(c) => Self::Constant(*c),
            Self::Affine { intercept, slope } => Self::Affine {
                intercept: intercept + slope * length,
                slope: -slope,
            },
            Self::Samples(s) => Self::Samples(s.iter().rev().copied().collect()),
            Self::Custom(f) => {
                let f = Arc::clone(f);
                Self::custom(move |y| f(length - y))
            }
            Self::Square { scale, inner } => Self::Square {
                scale: *scale,
                inner: Box::new(inner.reversed(length)),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(c) => *c == 0.0,
            Self::Affine { intercept, slope } => *intercept == 0.0 && *slope == 0.0,
            Self::Samples(s) => s.iter().all(|v| *v == 0.0),
            Self::Custom(_) => false,
            Self::Square { scale, inner } => *scale == 0.0 || inner.is_zero(),
        }
    }
}

fn interpolate_uniform(samples: &[f64], y: f64, length: f64) -> f64 {
    match samples.len() {
        0 => 0.0,
        1 => samples[0],
        n => {
            let t = (y / length).clamp(0.0, 1.0) * (n - 1) as f64;
            // land exactly on a sample when y is a node up to rounding
            let r = t.round();
            if (t - r).abs() <= 1e-9 {
                return samples[r as usize];
            }
            let k = (t.floor() as usize).min(n - 2);
            let frac = t - k as f64;
            if frac == 0.0 {
                samples[k]
            } else {
                samples[k] + frac * (samples[k + 1] - samples[k])
            }
        }
    }
}

/// One [`EdgeFunction`] per edge, or a single one shared by all edges.
#[derive(Clone, Debug)]
pub enum EdgeField {
    Uniform(EdgeFunction),
    PerEdge(Vec<EdgeFunction>),
}

impl EdgeField {
    pub fn constant(c: f64) -> Self {
        Self::Uniform(EdgeFunction::Constant(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn on(&self, e: EdgeId) -> &EdgeFunction {
        match self {
            Self::Uniform(f) => f,
            Self::PerEdge(v) => &v[e.0],
        }
    }

    pub fn eval(&self, net: &Network, e: EdgeId, y: f64) -> f64 {
        self.on(e).eval(y, net.edge(e).length)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Uniform(f) => Self::Uniform(f.scaled(factor)),
            Self::PerEdge(v) => Self::PerEdge(v.iter().map(|f| f.scaled(factor)).collect()),
        }
    }

    /// Field expressed in the parametrization of `net.with_reversed_edge(e)`.
    pub fn with_reversed_edge(&self, net: &Network, e: EdgeId) -> Self {
        let mut per: Vec<EdgeFunction> = net.edge_ids().map(|j| self.on(j).clone()).collect();
        per[e.0] = per[e.0].reversed(net.edge(e).length);
        Self::PerEdge(per)
    }

    /// Pointwise square.
    pub fn squared(&self) -> Self {
        let sq = |f: &EdgeFunction| match f {
            EdgeFunction::Constant(c) => EdgeFunction::Constant(c * c),
            EdgeFunction::Samples(s) => EdgeFunction::Samples(s.iter().map(|v| v * v).collect()),
            other => EdgeFunction::Square {
                scale: 1.0,
                inner: Box::new(other.clone()),
            },
        };
        match self {
            Self::Uniform(f) => Self::Uniform(sq(f)),
            Self::PerEdge(v) => Self::PerEdge(v.iter().map(sq).collect()),
        }
    }
}
