use std::path::Path;
use std::process::{Command, Output};

fn nashapr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nashapr"))
        .args(args)
        .current_dir(dir)
        .env("NASHAPR_THREADS", "0")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = nashapr(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn unit_interval(value: &str) -> bool {
    value.parse::<f64>().is_ok_and(|v| (0.0..=1.0).contains(&v))
}

#[test]
fn full_pipeline_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "gen",
            "--class",
            "grab_the_dollar",
            "--actions",
            "5",
            "--count",
            "300",
            "--validation",
            "30",
            "--test",
            "20",
            "--seed",
            "4",
            "--out",
            "g.nfg",
        ],
        d,
    );
    ok(
        &[
            "train",
            "--data",
            "g.nfg",
            "--arch",
            "16",
            "--iters",
            "100",
            "--batch",
            "16",
            "--val-every",
            "50",
            "--out",
            "m.nea",
        ],
        d,
    );
    let log = std::fs::read_to_string(d.join("m.nea.log.csv")).unwrap();
    assert!(log.starts_with("step,train_loss,val_loss\n"));
    assert_eq!(log.lines().count(), 101);

    let eval = ok(
        &[
            "eval", "--model", "m.nea", "--data", "g.nfg", "--split", "test",
        ],
        d,
    );
    let mut lines = eval.lines();
    assert_eq!(lines.next(), Some("split,games,mean,std"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&fields[..2], &["test", "20"]);
    assert!(unit_interval(fields[2]));

    ok(
        &[
            "race",
            "--model",
            "m.nea",
            "--data",
            "g.nfg",
            "--max-iters",
            "2000",
            "--out",
            "rep",
            "--no-timing",
        ],
        d,
    );
    let race = std::fs::read_to_string(d.join("rep/race.csv")).unwrap();
    let mut rows = race.lines();
    assert_eq!(
        rows.next(),
        Some("solver,class,mean_time_s,mean_iterations,failures")
    );
    let solvers: Vec<&str> = rows.map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(solvers, ["nea", "fp", "rm", "rd"]);
    let echo: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("rep/race.json")).unwrap()).unwrap();
    assert_eq!(echo["max_iters"], 2000);

    ok(
        &[
            "warmstart",
            "--model",
            "m.nea",
            "--data",
            "g.nfg",
            "--max-iters",
            "2000",
            "--out",
            "rep",
            "--no-timing",
        ],
        d,
    );
    let warm = std::fs::read_to_string(d.join("rep/warmstart.csv")).unwrap();
    assert_eq!(warm.lines().count(), 1 + 2 * 20);
    for row in warm.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        assert!(unit_interval(f[6]) && unit_interval(f[7]));
        if f[3] == "approximator" {
            assert!(f[7].parse::<f64>().unwrap() <= f[6].parse::<f64>().unwrap());
        }
    }
    assert!(d.join("rep/warmstart_summary.csv").exists());

    // Resuming to the same total reproduces the one-shot model.
    ok(
        &[
            "train", "--data", "g.nfg", "--arch", "16", "--iters", "40", "--batch", "16", "--out",
            "half.nea",
        ],
        d,
    );
    ok(
        &[
            "train",
            "--data",
            "g.nfg",
            "--arch",
            "16",
            "--iters",
            "100",
            "--batch",
            "16",
            "--resume",
            "half.nea",
            "--out",
            "resumed.nea",
        ],
        d,
    );
    assert_eq!(
        std::fs::read(d.join("resumed.nea")).unwrap(),
        std::fs::read(d.join("m.nea")).unwrap()
    );
}

#[test]
fn bound_and_selfcheck() {
    let dir = tempfile::tempdir().unwrap();
    let bound = ok(
        &[
            "bound", "--m", "1000000", "--delta", "0.05", "--r-grid", "0.25",
        ],
        dir.path(),
    );
    assert!(bound.starts_with("r,log_ln_covering,delta_m,overflow\n"));
    assert!(bound.contains("bound=717.22591739"));

    let check = ok(
        &["selfcheck", "--samples", "500", "--oracle-samples", "50"],
        dir.path(),
    );
    assert!(check.trim_end().ends_with("overall PASS"));
}

#[test]
fn bad_input_exits_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nashapr(&["gen", "--class", "poker", "--out", "x.nfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown game class"));
    let out = nashapr(
        &["eval", "--model", "missing.nea", "--data", "missing.nfg"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
