use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn exmart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exmart"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> String {
    let out = dir.join(name);
    let path = out.to_str().unwrap().to_string();
    let mut args = vec!["synth", "--n", "400", "--dim", "4", "--seed", "7", "--out", &path];
    args.extend_from_slice(extra);
    let o = exmart(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn run_test(data: &str, out_dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "test",
        data,
        "--strategy",
        "constant",
        "--strategy",
        "mixture",
        "--strategy",
        "plugin",
        "--seed",
        "11",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    exmart(&args)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn synth_writes_header_and_rows() {
    let tmp = TempDir::new().unwrap();
    let path = synth(tmp.path(), "s.csv", &[]);
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x0,x1,x2,x3,label");
    assert_eq!(lines.count(), 400);
}

#[test]
fn end_to_end_outputs_are_consistent_and_reproducible() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), "s.csv", &[]);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = run_test(&data, dir, &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["trajectory.csv", "summary.json", "betting.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }

    let traj = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    let header: Vec<&str> = traj.lines().next().unwrap().split(',').collect();
    assert_eq!(header, ["index", "p_value", "theta", "log10_constant", "log10_mixture", "log10_plugin"]);
    let rows: Vec<Vec<f64>> = traj
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 400);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 6);
        assert_eq!(r[0], (i + 1) as f64);
        assert!(r[1] > 0.0 && r[1] <= 1.0);
        assert!(r[2] > 0.0 && r[2] < 1.0);
        assert_eq!(r[3], 0.0);
    }

    let s = summary(&a);
    assert_eq!(s["n_examples"], 400);
    assert_eq!(s["strategies"]["constant"]["final_log10"], 0.0);
    let last = rows.last().unwrap();
    let final_plugin = s["strategies"]["plugin"]["final_log10"].as_f64().unwrap();
    assert!((final_plugin - last[5]).abs() < 1e-6);

    let grid = fs::read_to_string(a.join("betting.csv")).unwrap();
    assert_eq!(grid.lines().next().unwrap(), "p,density");
    assert_eq!(grid.lines().count(), 202);
}

#[test]
fn shuffled_exchangeable_stream_stays_small() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), "s.csv", &[]);
    let out = tmp.path().join("o");
    assert!(run_test(&data, &out, &["--shuffle"]).status.success());
    let s = summary(&out);
    assert_eq!(s["shuffled"], true);
    for name in ["mixture", "plugin"] {
        assert!(s["strategies"][name]["final_log10"].as_f64().unwrap() < 20f64.log10());
    }
}

#[test]
fn changepoint_stream_raises_alarms() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("big.csv");
    let o = exmart(&[
        "synth", "--n", "2000", "--changepoint", "1000", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let dir = tmp.path().join("o");
    let o = run_test(out.to_str().unwrap(), &dir, &[]);
    assert!(o.status.success());
    let s = summary(&dir);
    let plugin = &s["strategies"]["plugin"];
    assert!(plugin["final_log10"].as_f64().unwrap() >= 2.0);
    let step = plugin["crossings"]["100"].as_u64().expect("crossed 100");
    assert!(step > 1000);
}

#[test]
fn max_examples_and_label_index() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), "s.csv", &[]);
    let out = tmp.path().join("o");
    assert!(run_test(&data, &out, &["--label", "4", "--max-examples", "50"]).status.success());
    assert_eq!(summary(&out)["n_examples"], 50);
}

#[test]
fn betting_dump_to_stdout_and_file() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), "s.csv", &[]);
    let out = tmp.path().join("o");
    assert!(run_test(&data, &out, &[]).status.success());
    let traj = out.join("trajectory.csv");
    let o = exmart(&["betting-dump", traj.to_str().unwrap()]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    // the trajectory keeps 9 significant digits, so the refit agrees closely but not bit for bit
    let parse = |text: &str| -> Vec<(f64, f64)> {
        text.lines()
            .skip(1)
            .map(|l| {
                let (p, d) = l.split_once(',').unwrap();
                (p.parse().unwrap(), d.parse().unwrap())
            })
            .collect()
    };
    let refit = parse(&stdout);
    let original = parse(&fs::read_to_string(out.join("betting.csv")).unwrap());
    assert_eq!(refit.len(), 201);
    for (a, b) in refit.iter().zip(&original) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - b.1).abs() <= 1e-6 * b.1.max(1.0), "{a:?} {b:?}");
    }

    let file = tmp.path().join("grid.csv");
    assert!(exmart(&["betting-dump", traj.to_str().unwrap(), "--out", file.to_str().unwrap()]).status.success());
    assert_eq!(fs::read_to_string(file).unwrap(), stdout);
}

#[test]
fn validation_failures_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), "s.csv", &[]);
    let out = tmp.path().join("o");
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "a,b,label\n1,2,x\n3,nan,y\n").unwrap();

    let cases: Vec<Vec<&str>> = vec![
        vec!["test", &data, "--strategy", "power:1.5", "--seed", "1"],
        vec!["test", &data, "--strategy", "bogus", "--seed", "1"],
        vec!["test", &data, "--strategy", "plugin", "--strategy", "plugin", "--seed", "1"],
        vec!["test", &data, "--strategy", "plugin", "--seed", "1", "--threshold", "0.5"],
        vec!["test", &data, "--strategy", "plugin", "--seed", "1", "--label", "nope"],
        vec!["test", bad.to_str().unwrap(), "--strategy", "plugin", "--seed", "1"],
        vec!["test", &data, "--seed", "1"],
    ];
    for mut args in cases {
        args.extend(["--out-dir", out.to_str().unwrap()]);
        let o = exmart(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.csv");
    let o = exmart(&["test", missing.to_str().unwrap(), "--strategy", "plugin", "--seed", "1", "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
