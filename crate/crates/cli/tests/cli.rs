use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coopbandit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TWO_ARM: &str = r#"{
  "model": "unconstrained",
  "graph_spec": {"kind": "complete", "m": 4},
  "n": 2,
  "arm_spec": {"kind": "fixed", "means": [5.0, 0.0]},
  "sigma_s": 1.0,
  "t": 600,
  "runs": 60,
  "master_seed": 9
}"#;

/// `scope -> mean by t` for one metric.
fn curves(path: &Path) -> HashMap<String, Vec<f64>> {
    let mut out: HashMap<String, Vec<f64>> = HashMap::new();
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,scope,metric,mean,sem,runs,label"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f[2] == "cum_regret" {
            out.entry(f[1].to_string())
                .or_default()
                .push(f[3].parse().unwrap());
        }
    }
    out
}

#[test]
fn index_four_agent_centrality() {
    let out = run(&["index", "--preset", "four_agent", "--csv", "-"]);
    assert!(out.status.success());
    let eps: Vec<f64> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    for (got, want) in eps.iter().zip([0.0, 2.31, 2.31, 5.41]) {
        assert!((got - want).abs() <= 0.05, "{eps:?}");
    }
    assert_eq!(eps[0], 0.0);
}

#[test]
fn index_complete5_small_kappa() {
    let out = run(&["index", "--preset", "complete5", "--kappa", "0.02"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let line = text.lines().find(|l| l.starts_with("eps_n")).unwrap();
    let value: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((value - 439.0).abs() / 439.0 <= 0.005);
}

#[test]
fn index_two_nodes_from_edge_list() {
    let dir = TempDir::new().unwrap();
    let edges = write(&dir, "path2.txt", "2\n1 2\n");
    let csv_path = dir.path().join("idx.csv");
    let out = run(&[
        "index",
        "--edges",
        &edges,
        "--kappa",
        "0.5",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("eps_n = 1.414"));
    let text = std::fs::read_to_string(csv_path).unwrap();
    let eps_n: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((eps_n - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let disconnected = write(&dir, "split.txt", "4\n1 2\n3 4\n");
    assert_eq!(
        run(&["index", "--edges", &disconnected]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["index", "--preset", "nonsense7"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["index", "--preset", "ring5", "--kappa", "3"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["index", "--preset", "ring5", "--verbose"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["index", "--preset", "ring5", "--edges", &disconnected])
            .status
            .code(),
        Some(2)
    );

    let bad = write(
        &dir,
        "bad.json",
        "{\n  \"model\": \"unconstrained\",\n  \"n\": 2,\n  \"sigma\": 1\n}",
    );
    let out = run(&["simulate", "--config", &bad, "--out", "-"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("sigma") && err.contains("line 4"), "{err}");

    let resample = write(
        &dir,
        "r.json",
        &TWO_ARM.replace(
            r#""kind": "fixed", "means": [5.0, 0.0]"#,
            r#""kind": "resample""#,
        ),
    );
    assert_eq!(
        run(&["bounds", "--config", &resample, "--out", "-"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn help_documents_flags() {
    for (cmd, flags) in [
        (
            "index",
            &["--preset", "--edges", "--kappa", "--divisor", "--csv"][..],
        ),
        (
            "simulate",
            &[
                "--config",
                "--preset",
                "--out",
                "--workers",
                "--runs",
                "--horizon",
                "--seed",
            ][..],
        ),
        ("bounds", &["--config", "--out", "--horizon"][..]),
        (
            "graphgen",
            &["--kind", "--m", "--rho", "--seed", "--out"][..],
        ),
    ] {
        let text = stdout(&run(&[cmd, "--help"]));
        for f in flags {
            assert!(text.contains(f), "{cmd} --help is missing {f}");
        }
    }
}

#[test]
fn simulate_is_deterministic_across_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", TWO_ARM);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(run(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        a.to_str().unwrap(),
        "--workers",
        "1"
    ])
    .status
    .success());
    assert!(run(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        b.to_str().unwrap(),
        "--workers",
        "4"
    ])
    .status
    .success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn simulate_preset_shape_and_single_run_sem() {
    let out = run(&[
        "simulate",
        "--preset",
        "ex1",
        "--runs",
        "1",
        "--horizon",
        "40",
        "--out",
        "-",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 5 * 40);
    let scopes: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(
        scopes.into_iter().collect::<Vec<_>>(),
        ["agent:1", "agent:2", "agent:3", "agent:4", "group"]
    );
    assert!(rows.iter().all(|r| r[4] == "0.0"));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("group regret at T=40"));
}

#[test]
fn bounds_at_t1_and_domination() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", TWO_ARM);
    let sim = dir.path().join("sim.csv");
    let bnd = dir.path().join("bnd.csv");
    assert!(
        run(&["simulate", "--config", &cfg, "--out", sim.to_str().unwrap()])
            .status
            .success()
    );
    assert!(
        run(&["bounds", "--config", &cfg, "--out", bnd.to_str().unwrap()])
            .status
            .success()
    );
    let regret = &curves(&sim)["group"];
    let bounds = curves(&bnd);
    let cor1 = &bounds["bound:cor1_upper"];
    assert_eq!(bounds["bound:fusion_lower_unc"][0], 0.0);
    // At T = 1 only the constant L * Delta remains; it is positive and the curve never drops below it.
    assert!(cor1[0] > 0.0 && cor1.iter().all(|&v| v >= cor1[0]));
    assert_eq!(regret.len(), cor1.len());
    assert!(regret.iter().zip(cor1).all(|(r, b)| r <= b));
}

#[test]
fn graphgen_round_trips_through_index() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.txt");
    let p = path.to_str().unwrap();
    assert!(run(&[
        "graphgen", "--kind", "er", "--m", "8", "--rho", "0.4", "--seed", "2", "--out", p
    ])
    .status
    .success());
    assert!(run(&["index", "--edges", p]).status.success());
    let again = dir.path().join("h.txt");
    run(&[
        "graphgen",
        "--kind",
        "er",
        "--m",
        "8",
        "--rho",
        "0.4",
        "--seed",
        "2",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );
    assert_eq!(
        run(&["graphgen", "--kind", "er", "--m", "8"]).status.code(),
        Some(2)
    );
}
