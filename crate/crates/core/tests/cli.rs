use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sailrisk::config::RunConfig;
use sailrisk::gridfile::{FieldKind, GridFile};

fn sailrisk(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sailrisk"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("SAILRISK_THREADS", n),
        None => cmd.env_remove("SAILRISK_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "stdout:\n{stdout}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, extra_neutral: &str) -> PathBuf {
    let text = format!(
        r#"{{
  "model": {{"drift": 0.05, "sigma": 0.05, "f_max": 0.05, "switch_time": 2,
            "target_radius": 0.1, "outer_radius": 2}},
  "grid": {{"n_r": 24, "n_theta": 24, "s_max": 20, "ds": 0.25}},
  "solver": {{"neutral": {{"tol": 1e-7 {extra_neutral}}}}},
  "sim": {{"dt": 0.01, "n_samples": 300, "seed": 4}},
  "paths": {{"output_dir": "out"}}
}}"#
    );
    let path = dir.join("run.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref())
        .unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["calm.json", "drift.json"] {
        let run = RunConfig::load(&dir.join(name)).unwrap();
        assert_eq!(run.grid.n_r, 200, "{name}");
    }
}

#[test]
fn full_pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let c = config.to_str().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();

    let log = ok(&sailrisk(
        &["solve-neutral", "-c", c, "--output-dir", o, "--emit-csv"],
        None,
    ));
    assert!(log.contains("residual"));
    ok(&sailrisk(
        &[
            "solve-aware",
            "-c",
            c,
            "--output-dir",
            o,
            "--emit-slices",
            "0,40,80",
        ],
        None,
    ));

    for (file, kind) in [
        ("neutral_value.grid", FieldKind::NeutralValue),
        ("neutral_policy.grid", FieldKind::NeutralPolicy),
        ("aware_value.grid", FieldKind::AwareValue),
        ("aware_policy.grid", FieldKind::AwarePolicy),
    ] {
        let header = GridFile::read_header(&out.join(file)).unwrap();
        assert_eq!(header.kind, kind);
        assert_eq!(header.config_hash.len(), 64);
    }
    let slice = read(out.join("slice_k80.csv"));
    assert_eq!(slice.lines().next(), Some("r,theta,q,value,policy"));
    assert_eq!(slice.lines().count(), 1 + 2 * 25 * 24);
    assert_eq!(
        read(out.join("neutral_slice.csv")).lines().count(),
        1 + 2 * 25 * 24
    );

    let start = ["--start", "1.2,0.4,2", "--deadline", "18"];
    let sim = |policy: &str, threads| {
        let mut args = vec![
            "simulate",
            "-c",
            c,
            "--output-dir",
            o,
            "--policy",
            policy,
            "--save-paths",
            "2",
        ];
        args.extend(start);
        ok(&sailrisk(&args, threads));
        read(out.join(format!("{policy}_summary.json")))
    };
    let aware_one = sim("aware", Some("1"));
    let aware_any = sim("aware", None);
    assert_eq!(aware_one, aware_any);
    let summary: serde_json::Value = serde_json::from_str(&aware_one).unwrap();
    assert_eq!(summary["n_samples"], 300);
    assert_eq!(summary["deadline"], 18.0);
    assert_eq!(summary["start"], serde_json::json!([1.2, 0.4, 2.0]));
    sim("neutral", Some("2"));
    assert_eq!(
        read(out.join("aware_ecdf.csv")).lines().next(),
        Some("t,cdf")
    );
    let path = read(out.join("neutral_path_1.csv"));
    assert_eq!(path.lines().next(), Some("t,r,theta,q,s,phi,x,y"));
    assert!(path
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("0,1.2,0.4,2,18,0,"));

    let mut args = vec!["compare", "-c", c, "--output-dir", o];
    args.extend(start);
    ok(&sailrisk(&args, None));
    let compare = read(out.join("compare.csv"));
    assert_eq!(compare.lines().next(), Some("s,w,ecdf_neutral,ecdf_aware"));
    assert_eq!(compare.lines().count(), 1 + 81);
    let last: Vec<f64> = compare
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(last[0], 20.0);
    assert!(last.iter().all(|x| (0.0..=20.0).contains(x)));

    let info = ok(&sailrisk(
        &[
            "info",
            out.join("aware_policy.grid").to_str().unwrap(),
            "--stats",
        ],
        None,
    ));
    assert!(info.contains("\"kind\": \"aware_policy\""));
    assert!(info.contains("switch cells"));
}

#[test]
fn stale_fields_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let c = config.to_str().unwrap();
    let o = dir.path().join("out");
    let o = o.to_str().unwrap();
    ok(&sailrisk(
        &["solve-neutral", "-c", c, "--output-dir", o],
        None,
    ));
    let changed = write_config(dir.path(), r#", "gss_tol": 1e-3"#);
    let out = sailrisk(
        &[
            "simulate",
            "-c",
            changed.to_str().unwrap(),
            "--output-dir",
            o,
            "--policy",
            "neutral",
            "--start",
            "1,1,1",
            "--deadline",
            "10",
        ],
        None,
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("different configuration"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("out");
    let o = o.to_str().unwrap();

    let missing = sailrisk(&["solve-neutral", "-c", "/nonexistent/run.json"], None);
    assert_eq!(code(&missing), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"grid": {"n_r": 10, "n_theta": 10, "s_max": 10, "ds": 0.3}}"#,
    )
    .unwrap();
    assert_eq!(
        code(&sailrisk(
            &[
                "solve-aware",
                "-c",
                bad.to_str().unwrap(),
                "--output-dir",
                o
            ],
            None
        )),
        2
    );

    let stuck = write_config(dir.path(), r#", "max_iters": 1, "eval_sweeps": 0"#);
    let out = sailrisk(
        &[
            "solve-neutral",
            "-c",
            stuck.to_str().unwrap(),
            "--output-dir",
            o,
        ],
        None,
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));

    let good = write_config(dir.path(), "");
    assert_eq!(
        code(&sailrisk(&["info", "-c", good.to_str().unwrap()], None)),
        2
    );
    assert_eq!(
        code(&sailrisk(&["info", good.to_str().unwrap()], Some("0"))),
        2
    );
    let out = sailrisk(
        &[
            "solve-aware",
            "-c",
            good.to_str().unwrap(),
            "--output-dir",
            o,
            "--emit-slices",
            "81",
        ],
        None,
    );
    assert_eq!(code(&out), 2);
}
