//! Problem files (TOML) and result tables (CSV).
//!
//! ```toml
//! [[vertex]]
//! id = "c"
//! kind = "transition"
//!
//! [[vertex]]
//! id = "a"
//! kind = "boundary"
//! g = 0.0
//!
//! [[edge]]
//! id = "e1"
//! tail = "c"
//! head = "a"
//! length = 1.0
//! n = 200            # or h = 0.005; default spacing from [grid] h
//!
//! [beta]
//! "c.e1" = 2.0       # default 1
//!
//! [problem]
//! type = "eikonal"   # eikonal | linear | hj
//! f = 1.0
//! ```
//!
//! Function values (`f`, `a`, `b`, `c`, `g`) are a number, an affine string
//! such as `"1 + 0.5*y"`, an array of node samples, a table
//! `{ affine = [a, b] }` or `{ samples = [...] }`, or a table
//! `{ default = ..., edges = { e1 = ... } }` for per-edge values.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use toml::{Spanned, Value};

use crate::discretization::{build_grid, EdgeResolution, GridFunction, LinearCoefficients, NetworkGrid, Resolution};
use crate::error::{Error, Result};
use crate::field::{EdgeField, EdgeFunction};
use crate::network::{BetaDecl, EdgeDecl, EdgeId, Network, NetworkDescription, VertexDecl, VertexKind};
use crate::stochastic::McComparison;
use crate::vanishing::{EpsSchedule, SweepReport};
use crate::viscous::{catalog, CatalogParams, EikonalData, HamiltonianSpec, NewtonOptions};

/// Grid spacing for edges that give neither `n` nor `h`.
pub const DEFAULT_SPACING: f64 = 1e-3;

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawKind {
    Boundary,
    Transition,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVertex {
    id: String,
    kind: RawKind,
    g: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    id: String,
    tail: String,
    head: String,
    length: f64,
    n: Option<usize>,
    h: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    h: Option<f64>,
}

#[derive(Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Eikonal,
    Linear,
    Hj,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(rename = "type")]
    kind: ProblemKind,
    f: Option<Spanned<Value>>,
    a: Option<Spanned<Value>>,
    b: Option<Spanned<Value>>,
    c: Option<Spanned<Value>>,
    g: Option<Spanned<Value>>,
    hamiltonian: Option<Spanned<String>>,
    alpha: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    eps0: Option<f64>,
    ratio: Option<f64>,
    count: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol_abs: Option<f64>,
    tol_rel: Option<f64>,
    max_iterations: Option<usize>,
    max_halvings: Option<usize>,
    fd_step: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    vertex: Vec<RawVertex>,
    edge: Vec<RawEdge>,
    #[serde(default)]
    beta: BTreeMap<String, Spanned<f64>>,
    #[serde(default)]
    grid: RawGrid,
    problem: Spanned<RawProblem>,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Clone, Debug)]
pub enum ProblemData {
    Eikonal(EikonalData),
    Linear(LinearCoefficients),
    Hj { spec: HamiltonianSpec, boundary: Vec<f64> },
}

impl ProblemData {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemData::Eikonal(_) => ProblemKind::Eikonal,
            ProblemData::Linear(_) => ProblemKind::Linear,
            ProblemData::Hj { .. } => ProblemKind::Hj,
        }
    }
}

/// A parsed, validated problem file.
#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub network: Arc<Network>,
    pub grid: Arc<NetworkGrid>,
    pub problem: ProblemData,
    pub sweep: EpsSchedule,
    pub newton: NewtonOptions,
    /// Every default that was filled in, as `key = value`.
    pub defaults: Vec<String>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

fn parse_error(src: &str, offset: usize, message: impl Into<String>) -> Error {
    let (line, column) = line_col(src, offset);
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub fn parse_problem_file(path: &Path) -> Result<ProblemFile> {
    let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_problem_str(&src)
}

pub fn parse_problem_str(src: &str) -> Result<ProblemFile> {
    let raw: RawFile = toml::from_str(src).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        parse_error(src, offset, e.message().trim().to_owned())
    })?;
    let mut defaults = Vec::new();

    let mut desc = NetworkDescription::new();
    for v in &raw.vertex {
        let (kind, boundary_value) = match v.kind {
            RawKind::Boundary => {
                if v.g.is_none() {
                    defaults.push(format!("vertex.{}.g = 0", v.id));
                }
                (VertexKind::Boundary, Some(v.g.unwrap_or(0.0)))
            }
            RawKind::Transition => (VertexKind::Transition, v.g),
        };
        desc.vertices.push(VertexDecl {
            id: v.id.clone(),
            kind,
            boundary_value,
        });
    }
    for e in &raw.edge {
        desc.edges.push(EdgeDecl {
            id: e.id.clone(),
            tail: e.tail.clone(),
            head: e.head.clone(),
            length: e.length,
        });
    }
    for (key, value) in &raw.beta {
        let (vertex, edge) = key.split_once('.').ok_or_else(|| {
            parse_error(
                src,
                value.span().start,
                format!("beta key `{key}` must have the form \"vertex.edge\""),
            )
        })?;
        desc.beta.push(BetaDecl {
            vertex: vertex.to_owned(),
            edge: edge.to_owned(),
            value: *value.get_ref(),
        });
    }
    let network = Arc::new(desc.validate()?);
    for v in network.transition_vertices() {
        for inc in network.incident(v) {
            let key = format!("{}.{}", network.vertex(v).name, network.edge(inc.edge).name);
            if !raw.beta.contains_key(&key) {
                defaults.push(format!("beta.{key} = 1"));
            }
        }
    }

    let default_h = raw.grid.h.unwrap_or_else(|| {
        defaults.push(format!("grid.h = {DEFAULT_SPACING}"));
        DEFAULT_SPACING
    });
    let per_edge = raw
        .edge
        .iter()
        .map(|e| match (e.n, e.h) {
            (Some(n), _) => EdgeResolution::Intervals(n),
            (None, Some(h)) => EdgeResolution::Spacing(h),
            (None, None) => EdgeResolution::Spacing(default_h),
        })
        .collect();
    let grid = build_grid(Arc::clone(&network), &Resolution::PerEdge(per_edge))?;

    let problem_span = raw.problem.span().start;
    let p = raw.problem.into_inner();
    let mut field = |name: &str, v: &Option<Spanned<Value>>, default: f64| -> Result<EdgeField> {
        match v {
            Some(v) => parse_field(src, v, &grid),
            None => {
                defaults.push(format!("problem.{name} = {default}"));
                Ok(EdgeField::constant(default))
            }
        }
    };
    let problem = match p.kind {
        ProblemKind::Eikonal => ProblemData::Eikonal(EikonalData {
            density: field("f", &p.f, 1.0)?,
            boundary: network.boundary_values(),
        }),
        ProblemKind::Linear => ProblemData::Linear(LinearCoefficients {
            a: field("a", &p.a, 1.0)?,
            b: field("b", &p.b, 0.0)?,
            c: field("c", &p.c, 0.0)?,
            g: field("g", &p.g, 0.0)?,
            gamma: network.boundary_values(),
        }),
        ProblemKind::Hj => {
            let params = CatalogParams {
                f: field("f", &p.f, 1.0)?,
                b: field("b", &p.b, 0.0)?,
                alpha: p.alpha.as_ref().map_or(2.0, |a| *a.get_ref()),
            };
            let (name, at) = match &p.hamiltonian {
                Some(h) => (h.get_ref().clone(), h.span().start),
                None => {
                    defaults.push("problem.hamiltonian = eikonal2".into());
                    ("eikonal2".into(), problem_span)
                }
            };
            let spec = catalog(&name, &network, &params).map_err(|e| parse_error(src, at, e.to_string()))?;
            ProblemData::Hj {
                spec,
                boundary: network.boundary_values(),
            }
        }
    };

    let d = EpsSchedule::default();
    let sweep = EpsSchedule {
        eps0: raw.sweep.eps0.unwrap_or(d.eps0),
        ratio: raw.sweep.ratio.unwrap_or(d.ratio),
        count: raw.sweep.count.unwrap_or(d.count),
    };
    sweep.validate()?;
    let n = NewtonOptions::default();
    let s = &raw.solver;
    let newton = NewtonOptions {
        tol_abs: s.tol_abs.unwrap_or(n.tol_abs),
        tol_rel: s.tol_rel.unwrap_or(n.tol_rel),
        max_iterations: s.max_iterations.unwrap_or(n.max_iterations),
        max_halvings: s.max_halvings.unwrap_or(n.max_halvings),
        fd_step: s.fd_step.unwrap_or(n.fd_step),
        exec: n.exec,
    };
    for (key, given, value) in [
        ("sweep.eps0", raw.sweep.eps0.is_some(), d.eps0.to_string()),
        ("sweep.ratio", raw.sweep.ratio.is_some(), d.ratio.to_string()),
        ("sweep.count", raw.sweep.count.is_some(), d.count.to_string()),
        ("solver.tol_abs", s.tol_abs.is_some(), n.tol_abs.to_string()),
        ("solver.tol_rel", s.tol_rel.is_some(), n.tol_rel.to_string()),
        (
            "solver.max_iterations",
            s.max_iterations.is_some(),
            n.max_iterations.to_string(),
        ),
        (
            "solver.max_halvings",
            s.max_halvings.is_some(),
            n.max_halvings.to_string(),
        ),
        ("solver.fd_step", s.fd_step.is_some(), n.fd_step.to_string()),
    ] {
        if !given {
            defaults.push(format!("{key} = {value}"));
        }
    }

    Ok(ProblemFile {
        network,
        grid,
        problem,
        sweep,
        newton,
        defaults,
    })
}

/// Parse `"a + b*y"`, `"y"`, `"-2.5"`, `"3 - y"`, ...
pub fn parse_affine(s: &str) -> Option<(f64, f64)> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = s.as_bytes();
    for i in 1..bytes.len() {
        // split before a sign that is not part of an exponent
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*') {
            terms.push(&s[start..i]);
            start = i;
        }
    }
    terms.push(&s[start..]);
    let (mut a, mut b) = (0.0, 0.0);
    for t in terms {
        if let Some(coef) = t.strip_suffix('y') {
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            b += match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().ok()?,
            };
        } else {
            a += t.parse::<f64>().ok()?;
        }
    }
    Some((a, b))
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_function(src: &str, at: usize, v: &Value) -> Result<EdgeFunction> {
    let bad = |msg: &str| parse_error(src, at, msg.to_owned());
    if let Some(x) = number(v) {
        return Ok(EdgeFunction::Constant(x));
    }
    match v {
        Value::String(s) => parse_affine(s)
            .map(|(intercept, slope)| EdgeFunction::Affine { intercept, slope })
            .ok_or_else(|| bad(&format!("cannot read `{s}` as \"a + b*y\""))),
        Value::Array(items) => items
            .iter()
            .map(|x| number(x).ok_or_else(|| bad("samples must be numbers")))
            .collect::<Result<Vec<_>>>()
            .map(EdgeFunction::Samples),
        Value::Table(t) => {
            if let Some(ab) = t.get("affine") {
                let pair: Option<Vec<f64>> = ab.as_array().map(|a| a.iter().filter_map(number).collect());
                match pair.as_deref() {
                    Some(&[a, b]) => Ok(EdgeFunction::Affine { intercept: a, slope: b }),
                    _ => Err(bad("`affine` must be a pair of numbers [a, b]")),
                }
            } else if let Some(s) = t.get("samples") {
                match s {
                    Value::Array(_) => parse_function(src, at, s),
                    _ => Err(bad("`samples` must be an array of numbers")),
                }
            } else {
                Err(bad("expected `affine`, `samples`, or `default`/`edges`"))
            }
        }
        _ => Err(bad("expected a number, string, array, or table")),
    }
}

fn check_samples(src: &str, at: usize, f: &EdgeFunction, grid: &NetworkGrid, e: EdgeId) -> Result<()> {
    if let EdgeFunction::Samples(s) = f {
        let want = grid.intervals(e) + 1;
        if s.len() != want {
            return Err(parse_error(
                src,
                at,
                format!(
                    "edge `{}` has {} nodes but {} samples were given",
                    grid.network().edge(e).name,
                    want,
                    s.len()
                ),
            ));
        }
    }
    Ok(())
}

fn parse_field(src: &str, v: &Spanned<Value>, grid: &NetworkGrid) -> Result<EdgeField> {
    let at = v.span().start;
    let net = grid.network();
    let per_edge_table = match v.get_ref() {
        Value::Table(t) if t.contains_key("default") || t.contains_key("edges") => Some(t),
        _ => None,
    };
    let Some(t) = per_edge_table else {
        let f = parse_function(src, at, v.get_ref())?;
        for e in net.edge_ids() {
            check_samples(src, at, &f, grid, e)?;
        }
        return Ok(EdgeField::Uniform(f));
    };

    let default = t.get("default").map(|d| parse_function(src, at, d)).transpose()?;
    let mut per: Vec<Option<EdgeFunction>> = vec![default; net.edge_count()];
    if let Some(edges) = t.get("edges") {
        let edges = edges
            .as_table()
            .ok_or_else(|| parse_error(src, at, "`edges` must be a table keyed by edge id"))?;
        for (name, spec) in edges {
            let e = net
                .edge_id(name)
                .ok_or_else(|| parse_error(src, at, format!("unknown edge `{name}`")))?;
            per[e.0] = Some(parse_function(src, at, spec)?);
        }
    }
    let mut out = Vec::with_capacity(per.len());
    for (j, f) in per.into_iter().enumerate() {
        let f = f.ok_or_else(|| {
            parse_error(
                src,
                at,
                format!("no value for edge `{}` and no default", net.edge(EdgeId(j)).name),
            )
        })?;
        check_samples(src, at, &f, grid, EdgeId(j))?;
        out.push(f);
    }
    Ok(EdgeField::PerEdge(out))
}

/// Float formatting used in every table: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_io(path: &str) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

/// `edge_id,y,<value_header>[,u_oracle,abs_err]`, rows by edge id then `y`.
pub fn write_solution_csv<W: Write>(
    out: W,
    u: &GridFunction,
    value_header: &str,
    oracle: Option<&GridFunction>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["edge_id", "y", value_header];
    if oracle.is_some() {
        header.extend(["u_oracle", "abs_err"]);
    }
    w.write_record(&header)?;
    let grid = u.grid();
    let net = grid.network();
    for e in net.edge_ids() {
        for k in 0..=grid.intervals(e) {
            let v = u.at(e, k);
            let mut row = vec![net.edge(e).name.clone(), fmt_float(grid.position(e, k)), fmt_float(v)];
            if let Some(o) = oracle {
                let ov = o.at(e, k);
                row.push(fmt_float(ov));
                row.push(fmt_float((v - ov).abs()));
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(csv_io("<csv>"))?;
    Ok(())
}

/// Read the third column of a solution table back as node samples per edge.
pub fn read_solution_samples<R: Read>(input: R, net: &Network) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let mut per = vec![Vec::new(); net.edge_count()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| {
            rec.get(k).ok_or_else(|| Error::Parse {
                line,
                column: k + 1,
                message: "missing column".into(),
            })
        };
        let e = net
            .edge_id(field(0)?)
            .ok_or_else(|| Error::UnknownId(field(0).unwrap_or_default().to_owned()))?;
        let v: f64 = field(2)?.parse().map_err(|_| Error::Parse {
            line,
            column: 3,
            message: format!("not a number: `{}`", field(2).unwrap_or_default()),
        })?;
        per[e.0].push(v);
    }
    Ok(per)
}

pub const SWEEP_HEADER: [&str; 8] = [
    "eps",
    "sup_u",
    "lipschitz",
    "kirchhoff_residual",
    "cauchy",
    "err_vs_oracle",
    "newton_iters",
    "trusted",
];

pub fn write_sweep_table<W: Write>(out: W, report: &SweepReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
    for e in &report.entries {
        w.write_record([
            fmt_float(e.eps),
            fmt_float(e.sup_u),
            fmt_float(e.lipschitz),
            fmt_float(e.kirchhoff_residual),
            opt(e.cauchy),
            opt(e.err_vs_oracle),
            e.newton_iters.to_string(),
            e.trusted.to_string(),
        ])?;
    }
    w.flush().map_err(csv_io("<csv>"))?;
    Ok(())
}

pub const MC_HEADER: [&str; 10] = [
    "edge_id",
    "y",
    "mc_mean",
    "std_error",
    "pde",
    "abs_diff",
    "tolerance",
    "truncated",
    "biased",
    "pass",
];

pub fn write_mc_table<W: Write>(out: W, rows: &[McComparison], net: &Network) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MC_HEADER)?;
    for c in rows {
        let m = &c.estimate;
        w.write_record([
            net.edge(m.edge).name.clone(),
            fmt_float(m.y),
            fmt_float(m.mean),
            fmt_float(m.std_error),
            fmt_float(c.reference),
            fmt_float(c.abs_diff),
            fmt_float(c.tolerance),
            m.truncated.to_string(),
            m.biased.to_string(),
            c.pass.to_string(),
        ])?;
    }
    w.flush().map_err(csv_io("<csv>"))?;
    Ok(())
}

/// Probe points as `edge:y` separated by commas, e.g. `e1:0.5,e2:0`.
pub fn parse_points(spec: &str, net: &Network) -> Result<Vec<(EdgeId, f64)>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, item)| {
            let bad = |msg: String| Error::Parse {
                line: 1,
                column: i + 1,
                message: msg,
            };
            let (e, y) = item
                .split_once(':')
                .ok_or_else(|| bad(format!("point `{item}` must look like edge:y")))?;
            let edge = net.edge_id(e).ok_or_else(|| Error::UnknownId(e.to_owned()))?;
            let y: f64 = y.parse().map_err(|_| bad(format!("bad position in `{item}`")))?;
            let l = net.edge(edge).length;
            if !(0.0..=l).contains(&y) {
                return Err(Error::OutOfRange {
                    edge: e.to_owned(),
                    y,
                    length: l,
                });
            }
            Ok((edge, y))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIPOD: &str = r#"
[[vertex]]
id = "c"
kind = "transition"

[[vertex]]
id = "a1"
kind = "boundary"
g = 0.0

[[vertex]]
id = "a2"
kind = "boundary"

[[vertex]]
id = "a3"
kind = "boundary"
g = 0

[[edge]]
id = "e1"
tail = "c"
head = "a1"
length = 1.0
n = 10

[[edge]]
id = "e2"
tail = "c"
head = "a2"
length = 1.0
h = 0.25

[[edge]]
id = "e3"
tail = "c"
head = "a3"
length = 1.0

[beta]
"c.e1" = 2.0

[problem]
type = "eikonal"
f = 1
"#;

    #[test]
    fn parses_tripod() {
        let p = parse_problem_str(TRIPOD).unwrap();
        assert_eq!(p.network.boundary_vertices().count(), 3);
        assert_eq!(p.network.transition_vertices().count(), 1);
        assert_eq!(p.grid.intervals(EdgeId(0)), 10);
        assert_eq!(p.grid.intervals(EdgeId(1)), 4);
        assert_eq!(p.grid.intervals(EdgeId(2)), 1000);
        assert_eq!(p.network.beta(p.network.vertex_id("c").unwrap(), EdgeId(0)), Some(2.0));
        assert!(p.defaults.iter().any(|d| d == "vertex.a2.g = 0"));
        assert!(p.defaults.iter().any(|d| d == "beta.c.e2 = 1"));
        assert!(p.defaults.iter().any(|d| d.starts_with("grid.h")));
        assert_eq!(p.problem.kind(), ProblemKind::Eikonal);
    }

    #[test]
    fn beta_on_boundary_vertex_is_a_validation_error() {
        let src = TRIPOD.replace("\"c.e1\" = 2.0", "\"a1.e1\" = 2.0");
        assert!(matches!(parse_problem_str(&src), Err(Error::BetaOnBoundaryVertex(_))));
    }

    #[test]
    fn wrong_sample_count_names_the_edge() {
        let src = TRIPOD.replace("f = 1\n", "f = { default = 1.0, edges = { e1 = [1, 1, 1] } }\n");
        match parse_problem_str(&src) {
            Err(Error::Parse { line, message, .. }) => {
                assert!(message.contains("e1"), "{message}");
                assert_eq!(line, TRIPOD.lines().position(|l| l == "f = 1").unwrap() + 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_are_line_anchored() {
        let src = TRIPOD.replace("length = 1.0\nn = 10", "length = 1.0\nn = ");
        match parse_problem_str(&src) {
            Err(Error::Parse { line, .. }) => assert!(line > 20),
            other => panic!("{other:?}"),
        }
        let src = TRIPOD.replace("kind = \"transition\"", "kind = \"junction\"");
        assert!(matches!(parse_problem_str(&src), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn affine_strings() {
        assert_eq!(parse_affine("1 + 0.5*y"), Some((1.0, 0.5)));
        assert_eq!(parse_affine("y"), Some((0.0, 1.0)));
        assert_eq!(parse_affine("3 - y"), Some((3.0, -1.0)));
        assert_eq!(parse_affine("-2.5"), Some((-2.5, 0.0)));
        assert_eq!(parse_affine("1e-3 + 2y"), Some((1e-3, 2.0)));
        assert_eq!(parse_affine("2*z"), None);
    }

    #[test]
    fn solution_csv_round_trip() {
        let p = parse_problem_str(TRIPOD).unwrap();
        let u = GridFunction::from_fn(p.grid.clone(), |e, y| (e.0 as f64 + 1.0) * y.sin() / 3.0);
        let mut buf = Vec::new();
        write_solution_csv(&mut buf, &u, "u_eps", None).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("edge_id,y,u_eps\n"));
        let samples = read_solution_samples(&buf[..], &p.network).unwrap();
        let back = GridFunction::from_field(
            p.grid.clone(),
            &EdgeField::PerEdge(samples.into_iter().map(EdgeFunction::Samples).collect()),
        );
        assert_eq!(back.sup_distance(&u), 0.0);
    }

    #[test]
    fn points() {
        let p = parse_problem_str(TRIPOD).unwrap();
        let pts = parse_points("e1:0.5, e3:0", &p.network).unwrap();
        assert_eq!(pts, vec![(EdgeId(0), 0.5), (EdgeId(2), 0.0)]);
        assert!(parse_points("e1:2", &p.network).is_err());
        assert!(parse_points("e9:0.1", &p.network).is_err());
    }
}
