use std::path::Path;
use std::process::{Command, Output};

use ncsim_core::{derive_coefficients, ModelParams};
use serde_json::Value;

fn ncsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("NCSIM_JOBS")
        .output()
        .expect("binary runs")
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn simulate_writes_series_summary_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncsim(
        &[
            "simulate",
            "--N",
            "3",
            "--p",
            "0.5",
            "--q",
            "0.5",
            "--r",
            "0.5",
            "--steps",
            "5000",
            "--seed",
            "42",
            "--track",
            "0,1",
            "--out",
            "run.jsonl",
            "--snapshot",
            "snap.json",
            "--gnuplot",
            "plot.gp",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = lines(&dir.path().join("run.jsonl"));
    let header = &rows[0]["header"];
    assert_eq!(header["config"]["seed"], 42);
    assert_eq!(header["params"]["N"], 3);
    assert!(header["generator"].as_str().unwrap().contains("ChaCha8"));
    assert!(header["version"].is_string());
    assert_eq!(
        header["coefficients"]["alpha"].as_f64().unwrap(),
        0.25 + 0.5 * 0.5 * 2.0 / 3.0
    );
    for row in &rows[1..] {
        for key in ["n", "V", "maxW", "maxD", "tracked"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
        assert!(row["tracked"]["0"]["W"].is_u64());
    }
    let last = rows.last().unwrap();
    assert_eq!(last["n"], 5000);

    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run.summary.json")).unwrap(),
    )
    .unwrap();
    let counts = &summary["replicas"][0]["branch_counts"];
    let total: u64 = ["new_pref", "new_uniform", "old_pref", "old_uniform"]
        .iter()
        .map(|k| counts[k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 5000);
    assert!(summary["runtime_seconds"].is_f64());

    let snap = std::fs::read_to_string(dir.path().join("snap.json")).unwrap();
    let state = ncsim_core::GraphState::from_json(&snap).unwrap();
    assert_eq!(state.step(), 5000);
    assert_eq!(state.vertex_count() as u64, last["V"].as_u64().unwrap());
    assert!(dir.path().join("plot.dat").exists());
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "simulate",
            "--steps",
            "3000",
            "--seed",
            "9",
            "--replicas",
            "2",
            "--out",
            out,
            "--track",
            "-1,0,4",
        ]
    };
    assert!(ncsim(&args("a.jsonl"), dir.path()).status.success());
    assert!(ncsim(&args("b.jsonl"), dir.path()).status.success());
    let a = std::fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.jsonl")).unwrap();
    // the header echoes the output path; the data lines must match exactly
    assert_eq!(
        a.lines().skip(1).collect::<Vec<_>>(),
        b.lines().skip(1).collect::<Vec<_>>()
    );
    assert!(a.lines().any(|l| l.contains("\"replica\":1")));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"N": 4, "p": 0.3, "q": 0.8, "r": 0.3}"#,
    )
    .unwrap();
    let out = ncsim(
        &[
            "simulate", "--config", "cfg.json", "--r", "0.5", "--steps", "100", "--out", "c.jsonl",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let header = &lines(&dir.path().join("c.jsonl"))[0]["header"];
    assert_eq!(header["params"]["N"], 4);
    assert_eq!(header["params"]["p"], 0.3);
    assert_eq!(header["params"]["r"], 0.5);
}

#[test]
fn exit_codes_for_config_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncsim(&["simulate", "--p", "1.2", "--out", "x.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p = 1.2"));
    let out = ncsim(&["simulate", "--N", "2", "--out", "x.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = ncsim(
        &[
            "simulate",
            "--checkpoints",
            "geometric:0.5",
            "--out",
            "x.jsonl",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let out = ncsim(
        &["simulate", "--steps", "10", "--out", "missing/dir/x.jsonl"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let out = ncsim(
        &["simulate", "--config", "nope.json", "--out", "x.jsonl"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let out = ncsim(
        &[
            "sweep",
            "--q",
            "0.1,0.2,0.3",
            "--r",
            "0.1,0.2",
            "--max-cells",
            "4",
            "--out",
            "s.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let out = ncsim(
        &[
            "sweep", "--p", "0.5,1.5", "--steps", "1000", "--out", "s.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_subset_and_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncsim(
        &[
            "verify",
            "--only",
            "martingale",
            "--k",
            "1,2,3",
            "--steps",
            "10000",
            "--out",
            "v.json",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 6);
    for c in checks {
        assert!(c["name"].as_str().unwrap().starts_with("martingale."));
        assert_eq!(c["pass"], true);
        assert!(c["statistic"].is_f64() && c["tolerance"].is_f64());
    }
    let out = ncsim(
        &[
            "verify",
            "--only",
            "martingale",
            "--steps",
            "2000",
            "--corrupt",
            "b-table",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = ncsim(&["verify", "--only", "nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jobs_default_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ncsim"))
        .args([
            "simulate",
            "--steps",
            "200",
            "--replicas",
            "3",
            "--out",
            "j.jsonl",
        ])
        .current_dir(dir.path())
        .env("NCSIM_JOBS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        lines(&dir.path().join("j.jsonl"))[0]["header"]["config"]["jobs"],
        2
    );
}

#[test]
fn oracle_check_on_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ncsim(
        &[
            "simulate",
            "--N",
            "4",
            "--steps",
            "6",
            "--out",
            "s.jsonl",
            "--snapshot",
            "s.json"
        ],
        dir.path()
    )
    .status
    .success());
    let out = ncsim(
        &["oracle-check", "--snapshot", "s.json", "--out", "o.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let mass: f64 = report["distribution"]["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["probability"].as_f64().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_grid_rows_and_na_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncsim(
        &[
            "sweep",
            "--N",
            "3",
            "--p",
            "0.5",
            "--q",
            "0,0.5,0.8",
            "--r",
            "0,0.5,0.8",
            "--steps",
            "2000",
            "--replicas",
            "2",
            "--out",
            "s.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = text.lines();
    let header: Value =
        serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(header["command"], "sweep");
    assert_eq!(
        lines.next().unwrap(),
        "N,p,q,r,alpha,alpha2_over_alpha,slope_W,slope_D,ratio_D_W,V_over_pn"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for row in &rows {
        let params = ModelParams {
            clique_size: row[0].parse().unwrap(),
            p: row[1].parse().unwrap(),
            q: row[2].parse().unwrap(),
            r: row[3].parse().unwrap(),
        };
        let coeffs = derive_coefficients(&params).unwrap();
        // exact, bit for bit
        assert_eq!(row[4].parse::<f64>().unwrap(), coeffs.alpha);
        if coeffs.alpha == 0.0 {
            assert_eq!(&row[5..9], ["NA"; 4]);
            assert_ne!(row[9], "NA");
        } else {
            assert!(row[5..].iter().all(|c| c.parse::<f64>().is_ok()));
        }
    }
}

#[test]
fn zero_alpha_runs_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncsim(
        &[
            "simulate",
            "--q",
            "0",
            "--r",
            "0",
            "--steps",
            "200",
            "--out",
            "flat.jsonl",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha = 0"));
}
