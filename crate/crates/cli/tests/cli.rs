use std::path::PathBuf;
use std::process::{Command, Output};

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_graph-hj"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(o)))
}

fn write_problem(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const EDGE_HEAD: &str = r#"
[[vertex]]
id = "v0"
kind = "boundary"
g = 0.0

[[vertex]]
id = "v1"
kind = "boundary"
g = 0.0

[[edge]]
id = "e"
tail = "v0"
head = "v1"
length = 1.0
n = 4
"#;

#[test]
fn validate_reports_counts() {
    let o = run(&["validate", problem("tripod.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["edges"], 3);
    assert_eq!(v["boundary_vertices"], 3);
    assert_eq!(v["transition_vertices"], 1);
}

#[test]
fn validate_reports_vertex_splits() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(
        &dir,
        "split.toml",
        r#"
[[vertex]]
id = "a"
kind = "boundary"
g = 0.0

[[vertex]]
id = "c"
kind = "transition"

[[vertex]]
id = "b"
kind = "boundary"
g = 0.0

[[edge]]
id = "e1"
tail = "a"
head = "c"
length = 1.0

[[edge]]
id = "e2"
tail = "c"
head = "b"
length = 1.0

[[edge]]
id = "e3"
tail = "a"
head = "b"
length = 1.0

[problem]
type = "eikonal"
f = 1.0
"#,
    );
    let o = run(&["validate", &file]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!(!v["normalization"].as_array().unwrap().is_empty());
    assert!(stderr(&o).contains("split boundary vertex"));
}

#[test]
fn oracle_writes_solution_table_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let edge = problem("edge.toml");
    for out in [&a, &b] {
        let o = run(&["oracle", edge.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("edge_id,y,u"));
    assert_eq!(text.lines().count(), 4002);
    let mid = text.lines().nth(2001).unwrap();
    let u: f64 = mid.split(',').nth(2).unwrap().parse().unwrap();
    assert!((u - 0.5).abs() < 1e-12);
}

#[test]
fn solve_eikonal_matches_closed_form_at_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let edge = problem("edge.toml");
    let o = run(&[
        "solve-eikonal",
        edge.to_str().unwrap(),
        "--eps",
        "0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["report"]["trusted"], true);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("edge_id,y,u_eps,u_oracle,abs_err"));
    let mid: Vec<f64> = text
        .lines()
        .nth(2001)
        .unwrap()
        .split(',')
        .skip(1)
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(mid[0], 0.5);
    let want = -0.05 * (1.0 / (10.0f64).cosh()).ln();
    assert!((mid[1] - want).abs() < 1e-4);
}

#[test]
fn untrusted_eps_warns_but_succeeds() {
    let edge = problem("edge.toml");
    let o = run(&[
        "solve-eikonal",
        edge.to_str().unwrap(),
        "--eps",
        "0.0005",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    assert_eq!(json(&o)["report"]["trusted"], false);
}

#[test]
fn sweep_writes_table_and_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let sols = dir.path().join("sol");
    let o = run(&[
        "sweep",
        problem("edge.toml").to_str().unwrap(),
        "--out-table",
        table.to_str().unwrap(),
        "--out-solutions",
        sols.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("eps,sup_u,lipschitz,kirchhoff_residual,cauchy,err_vs_oracle,newton_iters,trusted")
    );
    assert_eq!(text.lines().count(), 5);
    assert_eq!(std::fs::read_dir(&sols).unwrap().count(), 4);
    assert_eq!(json(&o)["solution_files"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_to_stdout_without_out_table() {
    let o = run(&["sweep", problem("tripod.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("eps,sup_u,"));
    assert!(stderr(&o).contains("\"command\": \"sweep\""));
}

#[test]
fn solve_hj_and_validate_hamiltonian() {
    let file = problem("tripod-power.toml");
    let o = run(&["solve-hj", file.to_str().unwrap(), "--eps", "0.1", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["newton"]["converged"], true);
    assert!(v["kirchhoff_residual"].as_f64().unwrap() < 1e-8);

    let o = run(&["validate-hamiltonian", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["clean"], true);
}

#[test]
fn linear_solve_and_monte_carlo_check() {
    let file = problem("tripod-linear.toml");
    let o = run(&["solve-linear", file.to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["max_principle"]["kind"], "BoundaryMaximum");

    let args = [
        "mc-check",
        file.to_str().unwrap(),
        "--points",
        "e1:0,e3:0.5",
        "--paths",
        "2000",
        "--dt",
        "1e-3",
        "--seed",
        "3",
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let text = stdout(&a);
    assert!(text.starts_with("edge_id,y,mc_mean,std_error,pde,abs_diff,tolerance,truncated,biased,pass"));
    assert_eq!(text.lines().count(), 3);
    let b = run_env(&args, &[("GRAPH_HJ_THREADS", "1")]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = run_env(
        &["validate", problem("edge.toml").to_str().unwrap()],
        &[("GRAPH_HJ_THREADS", "many")],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(
        &dir,
        "bad.toml",
        &format!("{EDGE_HEAD}\n[problem]\ntype = \"eikonal\"\nf = [1.0, 2.0]\n"),
    );
    let o = run(&["validate", &file]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line"), "{err}");
    assert!(err.contains("edge `e` has 5 nodes but 2 samples"), "{err}");
}

#[test]
fn beta_on_boundary_vertex_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(
        &dir,
        "beta.toml",
        &format!("{EDGE_HEAD}\n[beta]\n\"v0.e\" = 2.0\n\n[problem]\ntype = \"eikonal\"\nf = 1.0\n"),
    );
    let o = run(&["validate", &file]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn wrong_problem_type_exits_2() {
    let o = run(&["oracle", problem("tripod-linear.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("needs problem type eikonal"));
}

#[test]
fn newton_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(
        &dir,
        "hj.toml",
        &format!(
            "{EDGE_HEAD}\n[problem]\ntype = \"hj\"\nhamiltonian = \"eikonal2\"\nf = 1.0\n\n[solver]\nmax_iterations = 1\n"
        ),
    );
    let o = run(&["solve-hj", &file, "--eps", "0.01", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
