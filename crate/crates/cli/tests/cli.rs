//! End-to-end runs of the `dcomp` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dcomp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcomp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn dcomp")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = dcomp(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn blue_wins_second_scenario() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["run", "fig3b.json", "--out", "o"], dir.path());
    let o = dir.path().join("o");
    assert_eq!(json(&o.join("outcome.json"))["winner"], "Blue");
    let traj = fs::read_to_string(o.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,"));
    assert!(traj.lines().count() > 10);
    let meta = json(&o.join("metadata.json"));
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    assert!(o.join("config.resolved.json").exists());
}

#[test]
fn no_initiative_means_no_basin() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "simple.json", "--override", "beta1=0", "--out", "o"],
        dir.path(),
    );
    let basin = json(&dir.path().join("o/basin.json"));
    assert_eq!(basin["value"].as_f64(), Some(0.0));
}

#[test]
fn malformed_configs_exit_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("unknown_key.json"),
        r#"{"model": "simple-reduced", "task": "basin", "colour": 1}"#,
    )
    .unwrap();
    fs::write(p.join("not_json.json"), "{model: ").unwrap();
    fs::write(
        p.join("bad_param.json"),
        r#"{"model": "simple-reduced", "task": "basin", "params": {"r1": -1}}"#,
    )
    .unwrap();
    fs::write(
        p.join("no_section.json"),
        r#"{"model": "simple-reduced", "task": "heatmap"}"#,
    )
    .unwrap();
    let cases: &[&[&str]] = &[
        &["run", "unknown_key.json", "--out", "o"],
        &["run", "not_json.json", "--out", "o"],
        &["run", "bad_param.json", "--out", "o"],
        &["run", "no_section.json", "--out", "o"],
        &["run", "missing.json", "--out", "o"],
        &["run", "simple", "--override", "model=eco9", "--out", "o"],
        &["run", "simple", "--override", "solver.integrator.rtol=-1", "--out", "o"],
        &["run", "fig3a", "--override", "simulate.initial=[1,2]", "--out", "o"],
        &[
            "basin",
            "--config",
            "eco2",
            "--override",
            "basin.resolution=0",
            "--out",
            "o",
        ],
        &["run", "simple", "--override", "novalue", "--out", "o"],
        &["run", "--bogus-flag", "simple"],
    ];
    for args in cases {
        let out = dcomp(args, p);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
        assert!(!p.join("o").exists(), "{args:?} left artifacts");
    }
}

#[test]
fn presets_are_listed_and_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["presets", "--write", "cfgs"], dir.path());
    let listing = String::from_utf8(out.stdout).unwrap();
    assert!(listing.lines().count() >= 5);
    assert!(listing.contains("paper-usecase"));
    for name in ["paper-usecase", "simple", "fig3a", "fig3b"] {
        assert!(dir.path().join(format!("cfgs/{name}.json")).exists());
    }
    // A written preset runs from its file.
    ok(&["run", "cfgs/eco2.json", "--out", "o"], dir.path());
    assert!(dir.path().join("o/fixed_points.csv").exists());
}

#[test]
fn resolved_config_reruns_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&["run", "feedback", "--seed", "7", "--out", "a"], p);
    ok(&["run", "a/config.resolved.json", "--out", "b"], p);
    for f in ["trajectory.csv", "reduced.csv", "outcome.json"] {
        assert_eq!(
            fs::read(p.join("a").join(f)).unwrap(),
            fs::read(p.join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let (a, b) = (json(&p.join("a/metadata.json")), json(&p.join("b/metadata.json")));
    assert_eq!(a["seed"], 7);
    assert_eq!(a["config_sha256"], b["config_sha256"]);
}

#[test]
fn heatmap_with_svg() {
    let dir = tempfile::tempdir().unwrap();
    let axes = r#"heatmap={"x":{"param":"beta1","lo":0,"hi":6,"n":4},"y":{"param":"phi","lo":-1,"hi":1,"n":3}}"#;
    ok(
        &[
            "heatmap",
            "-c",
            "simple",
            "-o",
            axes,
            "-o",
            "basin.resolution=5",
            "--svg",
            "--jobs",
            "2",
            "--out",
            "h",
        ],
        dir.path(),
    );
    let h = dir.path().join("h");
    let csv = fs::read_to_string(h.join("heatmap.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].split(',').count(), 5);
    let svg = fs::read_to_string(h.join("heatmap.svg")).unwrap();
    assert_eq!(svg.matches("<rect").count(), 12);
    let meta = json(&h.join("heatmap.json"));
    assert_eq!(meta["model"], "simple-reduced");
    assert_eq!(meta["resolution"], serde_json::json!([4, 3]));
}

#[test]
fn sweep_writes_one_block_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#"sweep={"param":"beta1","range":[1,4],"n_points":3,"t_end":50}"#;
    ok(&["sweep", "-c", "simple", "-o", sweep, "--out", "s"], dir.path());
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert!(csv.starts_with("param,fp_label"));
    assert_eq!(csv.lines().filter(|l| l.contains(",attractor,")).count(), 3);
}

fn doe_args<'a>(n_total: &'a str) -> Vec<&'a str> {
    vec![
        "doe",
        "-c",
        "simple",
        "-o",
        r#"doe={"factors":[{"name":"beta1","lo":0,"hi":6},{"name":"phi","lo":-1.5,"hi":1.5}],"k_init":6,"n_total":0}"#,
        "-o",
        n_total,
        "-o",
        "basin.resolution=5",
        "--out",
        "d",
    ]
}

#[test]
fn doe_log_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&doe_args("doe.n_total=8"), p);
    let first = fs::read_to_string(p.join("d/doe_log.csv")).unwrap();
    assert!(first.starts_with("iter,source,beta1,phi,basin,objective\n"));
    assert_eq!(first.lines().count(), 9);
    assert_eq!(first.lines().filter(|l| l.contains(",nolh,")).count(), 6);

    ok(&doe_args("doe.n_total=10"), p);
    let resumed = fs::read_to_string(p.join("d/doe_log.csv")).unwrap();
    assert_eq!(resumed.lines().count(), 11);

    // A complete log is left as is.
    ok(&doe_args("doe.n_total=10"), p);
    assert_eq!(resumed, fs::read_to_string(p.join("d/doe_log.csv")).unwrap());

    let fresh = tempfile::tempdir().unwrap();
    ok(&doe_args("doe.n_total=10"), fresh.path());
    assert_eq!(resumed, fs::read_to_string(fresh.path().join("d/doe_log.csv")).unwrap());
}

#[test]
fn glm_on_a_campaign_log() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut log = String::from("iter,source,a,b,basin,objective\n");
    for i in 0..40 {
        let a = (i % 7) as f64 / 6.0;
        let b = (i % 5) as f64 / 4.0;
        let y = 1.0 / (1.0 + (-(3.0 * a - 1.5 + 0.3 * ((i * 37) % 11) as f64 / 10.0)).exp());
        log += &format!("{i},nolh,{a},{b},{y},0.5\n");
    }
    log += "40,acquisition,0.5,0.5,,\n";
    fs::write(p.join("log.csv"), log).unwrap();
    ok(
        &["glm", "-c", "simple", "-o", r#"glm={"input":"log.csv"}"#, "--out", "g"],
        p,
    );
    let coef = fs::read_to_string(p.join("g/coefficients.csv")).unwrap();
    let lines: Vec<&str> = coef.lines().collect();
    assert_eq!(lines[0], "term,Estimate,Std. Error,t-value,Deviance%");
    assert!(lines[1].starts_with("(Intercept),"));
    assert_eq!(lines.len(), 4);
    assert_eq!(json(&p.join("g/glm.json"))["n"], 40);
    let imp = fs::read_to_string(p.join("g/importance.csv")).unwrap();
    assert_eq!(imp.lines().count(), 3);
}
