use std::path::Path;
use std::process::{Command, Output};

fn s2g(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s2g"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = s2g(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn gen_writes_valid_dimacs() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "gen", "--seed", "7", "--k", "3", "--n", "10", "--m", "42", "--out", "f.cnf",
        ],
    );
    let bytes = std::fs::read(dir.path().join("f.cnf")).unwrap();
    let f = s2g::cnf::parse_dimacs(&bytes).unwrap();
    assert_eq!((f.num_vars(), f.num_clauses(), f.clause_len()), (10, 42, 3));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("f.cnf.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "gen");
    assert_eq!(manifest["config"]["m"], 42);

    ok(dir.path(), &["gen", "--n", "50", "--alpha", "4.256", "--out", "g.cnf"]);
    let g = s2g::cnf::parse_dimacs(&std::fs::read(dir.path().join("g.cnf")).unwrap()).unwrap();
    assert_eq!(g.num_clauses(), 213);
}

#[test]
fn build_then_classify() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["gen", "--seed", "3", "--n", "20", "--m", "60", "--out", "f.cnf"],
    );
    ok(
        dir.path(),
        &[
            "build", "--mode", "s2gpa", "--theta", "0.33", "--rho", "1", "--seed", "1", "--in", "f.cnf", "--out",
            "g.json", "--dot", "g.dot",
        ],
    );
    let text = ok(dir.path(), &["classify", "--in", "g.json"]);
    let label: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = label.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["fraction_winner", "label", "nonwinner_mean", "nonwinner_std"]);
    let f = label["fraction_winner"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f));
    assert!(std::fs::read_to_string(dir.path().join("g.dot"))
        .unwrap()
        .starts_with("graph clauses {"));

    let spectrum: serde_json::Value = serde_json::from_str(&ok(dir.path(), &["spectrum", "--in", "g.json"])).unwrap();
    let total: u64 = spectrum["levels"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|l| l["states"].as_array().unwrap())
        .map(|s| s["particles"].as_u64().unwrap())
        .sum();
    let graph =
        s2g::graph::ClauseGraph::from_json(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(total, 2 * graph.link_events());
}

#[test]
fn solve_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2"] {
        ok(
            dir.path(),
            &[
                "gen",
                "--seed",
                seed,
                "--n",
                "30",
                "--alpha",
                "4.0",
                "--out",
                &format!("f{seed}.cnf"),
            ],
        );
    }
    ok(
        dir.path(),
        &[
            "solve", "--algo", "chainsat", "--budget", "5000", "--in", "f1.cnf", "f2.cnf", "--out", "a.json",
        ],
    );
    ok(
        dir.path(),
        &[
            "solve", "--algo", "nlc", "--budget", "5000", "--in", "f1.cnf", "f2.cnf", "--out", "b.json",
        ],
    );
    ok(dir.path(), &["build", "--in", "f1.cnf", "--out", "g1.json"]);
    ok(
        dir.path(),
        &[
            "solve", "--algo", "lc", "--graph", "g1.json", "--in", "f1.cnf", "--out", "c.json",
        ],
    );

    let a: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(a["params"]["p1"], 0.005);
    assert_eq!(a["results"].as_object().unwrap().len(), 2);

    let verdict: serde_json::Value = serde_json::from_str(&ok(dir.path(), &["compare", "a.json", "b.json"])).unwrap();
    assert!(["a_better", "b_better", "tie"].contains(&verdict["verdict"].as_str().unwrap()));
    let mismatch = s2g(dir.path(), &["compare", "a.json", "c.json"]);
    assert_eq!(code(&mismatch), 2);
}

#[test]
fn sweep_reads_config_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.toml"),
        "seed = 4\nn = [12]\ninstances = 2\ngraphs = 2\n[alpha]\nvalues = [1.0, 2.0, 3.0]\n[builder]\ntheta = 0.5\n",
    )
    .unwrap();
    ok(
        dir.path(),
        &["sweep", "--config", "s.toml", "--out", "r.csv", "--graphs", "3"],
    );
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "n,alpha,mean_fraction_winner,pct_full_bec,pct_partial_bec,pct_fgr,nonwinner_mean,nonwinner_std,samples"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("12,1.0,") && lines[1].ends_with(",6"));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("r.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["builder"]["theta"], 0.5);
    assert_eq!(manifest["config"]["graphs"], 3);
    assert_eq!(manifest["seed_root"], 4);

    std::fs::write(dir.path().join("bad.toml"), "colour = 1\n").unwrap();
    assert_eq!(
        code(&s2g(dir.path(), &["sweep", "--config", "bad.toml", "--out", "x.csv"])),
        1
    );
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn sweep_fit_output() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "sweep",
            "--n",
            "10",
            "--alphas",
            "1:4:0.5",
            "--instances",
            "1",
            "--graphs",
            "2",
            "--out",
            "r.csv",
            "--fit",
            "fit.json",
        ],
    );
    let fit: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit[0]["fit"]["coefficients"].as_array().unwrap().len(), 7);
    let x = fit[0]["argmax_second_derivative"].as_f64().unwrap();
    assert!((1.0..=4.0).contains(&x));
}

#[test]
fn bench_emits_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(
        dir.path(),
        &[
            "bench",
            "--n",
            "15",
            "--grid",
            "3,4",
            "--instances",
            "2",
            "--budget",
            "500",
            "--out",
            "t.csv",
            "--report",
            "t.txt",
        ],
    );
    assert!(stdout.starts_with("Solver"));
    assert_eq!(std::fs::read_to_string(dir.path().join("t.txt")).unwrap(), stdout);
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 + 3);
}

#[test]
fn usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = s2g(dir.path(), &["build", "--bogus", "--in", "f.cnf", "--out", "g.json"]);
    assert_eq!(code(&unknown), 1);
    assert_eq!(code(&s2g(dir.path(), &["frobnicate"])), 1);
    assert_eq!(
        code(&s2g(dir.path(), &["build", "--in", "missing.cnf", "--out", "g.json"])),
        1
    );
    std::fs::write(dir.path().join("bad.cnf"), "p cnf 2 1\n1 5 0\n").unwrap();
    assert_eq!(
        code(&s2g(dir.path(), &["build", "--in", "bad.cnf", "--out", "g.json"])),
        2
    );
    ok(dir.path(), &["gen", "--n", "5", "--m", "8", "--out", "f.cnf"]);
    assert_eq!(
        code(&s2g(
            dir.path(),
            &["build", "--theta", "1.5", "--in", "f.cnf", "--out", "g.json"]
        )),
        1
    );
    assert_eq!(code(&s2g(dir.path(), &["solve", "--p1", "0", "--in", "f.cnf"])), 1);
    let entries: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(entries.len(), 3, "{entries:?}");
    assert_eq!(code(&s2g(dir.path(), &["--help"])), 0);
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let build = ok(dir.path(), &["build", "--help"]);
    assert!(build.contains("[default: 0.33]") && build.contains("[default: 1]"));
    let solve = ok(dir.path(), &["solve", "--help"]);
    assert!(solve.contains("0.005 for k=3") && solve.contains("0.0001 for k=4") && solve.contains("0.0002 for k=5"));
}
