use std::path::PathBuf;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .output()
        .expect("spawn bench")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("smbo-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const SMALL: [&str; 8] = ["--init", "6", "--iters", "4", "--seeds", "2", "--focus-points", "200"];

#[test]
fn run_writes_csv_to_stdout() {
    let mut args = vec!["run", "--problems", "sphere2", "--optimizers", "random,mbo:ei"];
    args.extend(SMALL);
    let out = bench(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "problem,optimizer,seed,eval_index,best_so_far,failure"
    );
    assert_eq!(lines.count(), 2 * 2 * 10);
}

#[test]
fn run_then_rank() {
    let path = scratch("rank.csv");
    let mut args = vec![
        "run",
        "--problems",
        "sphere2,branin",
        "--optimizers",
        "random,mbo",
        "--out",
        path.to_str().unwrap(),
        "--timing",
    ];
    args.extend(SMALL);
    assert_eq!(bench(&args).status.code(), Some(0));
    let out = bench(&["rank", "--in", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "optimizer,mean_rank,cells,mean_wall_seconds");
    assert_eq!(lines.len(), 3);
    let ranks: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((ranks - 3.0).abs() < 1e-3);
}

#[test]
fn json_format() {
    let mut args = vec![
        "run",
        "--problems",
        "sphere2",
        "--optimizers",
        "random",
        "--format",
        "json",
    ];
    args.extend(SMALL);
    let out = bench(&args);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 20);
    assert_eq!(rows[0]["problem"], "sphere2");
}

#[test]
fn bad_input_exits_nonzero() {
    let out = bench(&["run", "--problems", "nosuch2", "--optimizers", "random"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuch2"));
    let out = bench(&["run", "--problems", "sphere2", "--optimizers", "mbo:bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bench(&["rank", "--in", "/nonexistent/file.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_ne!(bench(&["run"]).status.code(), Some(0));
}

#[test]
fn mo_run_small() {
    let out = bench(&[
        "mo-run",
        "--pair",
        "sphere2,shiftedsphere2",
        "--algo",
        "parego,random",
        "--budget",
        "8d",
        "--init",
        "3d",
        "--seeds",
        "1",
        "--focus-points",
        "100",
        "--reference",
        "60,60",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "pair,algorithm,seed,evaluations,front_size,ref1,ref2,hypervolume,failure"
    );
    assert_eq!(lines.len(), 3);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        // the pair name contains a comma and is quoted
        assert!(l.starts_with("\"sphere2,shiftedsphere2\""));
        assert_eq!(f[f.len() - 6], "16");
        assert!(f[f.len() - 2].parse::<f64>().unwrap() > 0.0);
    }
    assert_eq!(bench(&["mo-run", "--pair", "sphere2,sphere3"]).status.code(), Some(2));
}
