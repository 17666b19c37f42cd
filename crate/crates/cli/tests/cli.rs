use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dagprobit::mcmc::{ChainTrace, GroupRecord, MoveStats, TraceRecord};
use dagprobit::simlab::{generate_scenario, Scenario, ScenarioConfig};
use dagprobit::Matrix;
use dagprobit_cli::io::{read_group, read_matrix, read_truth, write_group, write_truth, Provenance};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dagprobit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn simulate(dir: &Path, q: usize, n: usize, seed: u64) -> PathBuf {
    let out = dir.join("sim");
    ok(&[
        "simulate",
        "--q",
        &q.to_string(),
        "--n1",
        &n.to_string(),
        "--n2",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out-dir",
        s(&out),
    ]);
    out
}

fn fit(sim: &Path, out: &Path, iters: usize, burnin: usize, seed: u64) {
    ok(&[
        "fit",
        "--data1",
        s(&sim.join("group1.csv")),
        "--data2",
        s(&sim.join("group2.csv")),
        "--iters",
        &iters.to_string(),
        "--burnin",
        &burnin.to_string(),
        "--seed",
        &seed.to_string(),
        "--out-dir",
        s(out),
    ]);
}

#[test]
fn simulate_shapes_and_headers() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), 3, 5, 9);
    for k in 1..=2 {
        let path = sim.join(format!("group{k}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# seed=9, config_hash="));
        assert!(text.lines().next().unwrap().ends_with(&format!("version={}", env!("CARGO_PKG_VERSION"))));
        let lines = data_lines(&path);
        assert_eq!(lines[0], "y,x2,x3");
        assert_eq!(lines.len(), 6);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
    }
    let again = simulate(&dir.path().join("again"), 3, 5, 9);
    for f in ["group1.csv", "group2.csv", "truth/dag1.csv", "truth/l2.csv", "truth/params.csv"] {
        assert_eq!(std::fs::read(sim.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn truth_bundle_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig::new(7, 20, 30, 0.3);
    let sc: Scenario<f64> = generate_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let prov = Provenance {
        seed: 5,
        config_hash: "x".into(),
    };
    write_truth(dir.path(), &sc.truth, &prov).unwrap();
    assert_eq!(read_truth(dir.path()).unwrap(), sc.truth);
}

#[test]
fn fit_outputs_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), 10, 200, 2);
    let out = dir.path().join("fit");
    fit(&sim, &out, 5000, 1000, 2);
    for k in 1..=2 {
        let p = read_matrix(&out.join(format!("edge_probs_g{k}.csv"))).unwrap();
        assert_eq!((p.rows(), p.cols()), (10, 10));
        assert!(p.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        let d = read_matrix(&out.join(format!("dag_g{k}.csv"))).unwrap();
        assert!(d.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
        let r = read_matrix(&out.join(format!("partial_corr_g{k}.csv"))).unwrap();
        assert!(r.as_slice().iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }
    let trace = ChainTrace::<f64>::read_csv(std::fs::File::open(out.join("trace.csv")).unwrap()).unwrap();
    assert_eq!(trace.records.len(), 4000);
    assert_eq!(data_lines(&out.join("theta.csv")).len(), 4001);
}

#[test]
fn fit_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), 5, 60, 4);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    fit(&sim, &a, 300, 100, 4);
    fit(&sim, &b, 300, 100, 4);
    for f in ["trace.csv", "edge_probs_g1.csv", "dag_g2.csv", "theta.csv", "partial_corr_g1.csv", "summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    fit(&sim, &c, 300, 100, 5);
    assert_ne!(std::fs::read(a.join("trace.csv")).unwrap(), std::fs::read(c.join("trace.csv")).unwrap());
}

/// Two groups with 28 covariates and 64 / 134 rows, split 41+23 and 106+28.
#[test]
fn breast_cancer_shaped_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (k, (ones, zeros)) in [(41usize, 23usize), (106, 28)].into_iter().enumerate() {
        let n = ones + zeros;
        let y: Vec<bool> = (0..n).map(|i| i < ones).collect();
        let x = Matrix::from_fn(n, 28, |_, _| rng.random_range(-2.0..2.0));
        write_group(std::fs::File::create(dir.path().join(format!("group{}.csv", k + 1))).unwrap(), &y, &x).unwrap();
    }
    let g1 = read_group(&dir.path().join("group1.csv")).unwrap();
    let g2 = read_group(&dir.path().join("group2.csv")).unwrap();
    assert_eq!((g1.y.len(), g1.x.cols()), (64, 28));
    assert_eq!((g1.y.iter().filter(|&&v| v).count(), g2.y.iter().filter(|&&v| v).count()), (41, 106));
    assert_eq!(g2.y.len(), 134);
    let out = dir.path().join("fit");
    fit(dir.path(), &out, 200, 50, 1);
    let summary = data_lines(&out.join("summary.csv"));
    assert!(summary.contains(&"q,29".to_string()));
    assert!(summary.contains(&"n1,64".to_string()));
    assert!(summary.contains(&"n2,134".to_string()));
}

#[test]
fn ingestion_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("a.csv"), "y,x2,x3\n0,1,2\n1,2,3\n0,1,1\n1,0,0\n").unwrap();
    std::fs::write(p.join("b.csv"), "y,x2,x4\n0,1,2\n1,2,3\n0,1,1\n1,0,0\n").unwrap();
    std::fs::write(p.join("c.csv"), "y,x2,x3\n0,1,2\n3,2,3\n0,1,1\n1,0,0\n").unwrap();
    let out = run(&["fit", "--data1", s(&p.join("a.csv")), "--data2", s(&p.join("b.csv")), "--out-dir", s(p)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("x3") && err.contains("x4"), "{err}");
    let out = run(&["fit", "--data1", s(&p.join("a.csv")), "--data2", s(&p.join("c.csv")), "--out-dir", s(p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not 0 or 1"));
    let out = run(&["fit", "--data1", s(&p.join("missing.csv")), "--data2", s(&p.join("a.csv"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn effects_report() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), 4, 80, 3);
    let fit_dir = dir.path().join("fit");
    fit(&sim, &fit_dir, 1, 0, 3);
    let trace = fit_dir.join("trace.csv");
    let out = dir.path().join("eff");
    ok(&["effects", "--trace", s(&trace), "--x-tilde", "0.5", "--x-tilde", "2", "--out-dir", s(&out)]);
    let lines = data_lines(&out.join("effects.csv"));
    assert_eq!(lines[0], "group,node,x_tilde,mean,q2.5,q97.5");
    assert_eq!(lines.len(), 1 + 2 * 3 * 2);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[3], f[4]);
        assert_eq!(f[3], f[5]);
    }
    let bad = run(&["effects", "--trace", s(&trace), "--node", "1", "--out-dir", s(&out)]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = run(&["effects", "--trace", s(&dir.path().join("none.csv")), "--out-dir", s(&out)]);
    assert_eq!(missing.status.code(), Some(4));
}

fn frozen_trace(truth: &dagprobit::simlab::Truth<f64>) -> ChainTrace<f64> {
    let rec = TraceRecord {
        iteration: 0,
        theta: truth.theta,
        d: truth.factors[0].d.clone(),
        groups: truth
            .dags
            .iter()
            .zip(&truth.factors)
            .map(|(dag, f)| GroupRecord {
                dag: dag.clone(),
                l: dag.edges().map(|(i, j)| f.l[(i, j)]).collect(),
                effects: vec![],
            })
            .collect(),
    };
    ChainTrace {
        q: truth.q(),
        targets: vec![],
        x_tilde: 1.0,
        records: vec![rec; 3],
        dag_moves: vec![MoveStats::default(); 2],
        theta_moves: MoveStats::default(),
    }
}

#[test]
fn evaluate_perfect_fit_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), 6, 50, 12);
    let truth = read_truth(&sim.join("truth")).unwrap();
    let fit_dir = dir.path().join("perfect");
    std::fs::create_dir_all(&fit_dir).unwrap();
    frozen_trace(&truth)
        .write_csv(std::fs::File::create(fit_dir.join("trace.csv")).unwrap())
        .unwrap();
    let out = dir.path().join("ev");
    ok(&["evaluate", "--truth-dir", s(&sim.join("truth")), "--fit-dir", s(&fit_dir), "--out-dir", s(&out)]);
    let metrics = data_lines(&out.join("metrics.csv"));
    assert!(metrics.contains(&"auc,1".to_string()), "{metrics:?}");
    assert!(metrics.contains(&"theta_covered,1".to_string()));
    assert!(data_lines(&out.join("timing.csv"))[1].starts_with("wall_time,"));

    let small = simulate(&dir.path().join("small"), 4, 50, 12);
    let bad = run(&["evaluate", "--truth-dir", s(&small.join("truth")), "--fit-dir", s(&fit_dir), "--out-dir", s(&out)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn evaluate_grid_writes_table_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    std::fs::write(
        &cfg,
        "seed = 2\n[evaluate.grid]\nq = [4, 5]\nxi = [0.3]\nsizes = [[40, 40]]\nreplications = 2\niterations = 100\nburn_in = 20\n",
    )
    .unwrap();
    let out = dir.path().join("grid");
    ok(&["evaluate", "--config", s(&cfg), "--threads", "2", "--out-dir", s(&out)]);
    let table = data_lines(&out.join("auc_table.csv"));
    assert_eq!(table[0], "xi,n1,n2,q4,q5");
    assert!(table[1].starts_with("0.3,40,40,"));
    let timing = data_lines(&out.join("grid_timing.csv"));
    assert_eq!(timing[0], "q,xi,n1,n2,replication,wall_time");
    let metrics = data_lines(&out.join("grid_metrics.csv"));
    assert_eq!(metrics.len(), 3);
    let header = std::fs::read_to_string(out.join("grid_metrics.csv")).unwrap();
    assert!(header.starts_with("# seed=2, config_hash="));
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[simulate]\nqq = 3\n").unwrap();
    assert_eq!(run(&["simulate", "--config", s(&cfg)]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--q", "1", "--out-dir", s(dir.path())]).status.code(), Some(2));
}
