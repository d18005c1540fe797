use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rdpc::irf;
use rdpc::probcore::{DistortionMatrix, DivergenceKind, Pmf};
use serde_json::Value;
use tempfile::TempDir;

fn rdpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdpc"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = rdpc(&args);
    let report = serde_json::from_slice(&o.stdout).unwrap_or(Value::Null);
    (o.status.code().unwrap(), report)
}

const BSC: &str = r#"{"source": [0.5, 0.5], "distortion": "hamming", "divergence": {"kind": "tv"},
    "theta_d": 0.25, "theta_div": "inf", "seed": 1, "trials": 2000}"#;

#[test]
fn solve_exit_codes() {
    let dir = TempDir::new().unwrap();
    let lossless = write_config(
        dir.path(),
        "l.json",
        r#"{"source": [0.5, 0.5], "distortion": "hamming", "divergence": {"kind": "tv"},
            "theta_d": 0, "theta_div": 0, "seed": 1, "trials": 1}"#,
    );
    let (code, report) = run("solve", &lossless, dir.path(), &[]);
    assert_eq!(code, 0);
    assert!((report["rate_bits"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let infeasible = write_config(
        dir.path(),
        "i.json",
        r#"{"source": [0.5, 0.5], "distortion": [[0.5, 1], [1, 0.5]], "theta_d": 0.25,
            "seed": 1, "trials": 1}"#,
    );
    let (code, report) = run("solve", &infeasible, dir.path(), &[]);
    assert_eq!(code, 2);
    assert_eq!(report["status"], "infeasible");

    let (code, report) = run(
        "solve",
        &write_config(dir.path(), "b.json", BSC),
        dir.path(),
        &[],
    );
    assert_eq!(code, 0);
    assert!((report["rate_bits"].as_f64().unwrap() - 0.188_721_875_540_867).abs() < 1e-2);
}

#[test]
fn config_errors_exit_one_with_location() {
    let dir = TempDir::new().unwrap();
    let unknown = write_config(
        dir.path(),
        "u.json",
        &BSC.replace("\"seed\"", "\"colour\": 1, \"seed\""),
    );
    let o = rdpc(&["solve", "--config", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let broken = write_config(
        dir.path(),
        "s.json",
        "{\n  \"source\": [0.5, 0.5],\n  oops\n}",
    );
    let o = rdpc(&["solve", "--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = rdpc(&[
        "solve",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let no_seed = write_config(dir.path(), "n.json", &BSC.replace("\"seed\": 1,", ""));
    assert_eq!(run("solve", &no_seed, dir.path(), &[]).0, 1);
    let cfg = write_config(dir.path(), "b.json", BSC);
    assert_eq!(
        run("verify-thm1", &cfg, dir.path(), &["--trials", "0"]).0,
        1
    );
}

#[test]
fn budget_exhaustion_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "b.json", BSC);
    assert_eq!(run("roundtrip", &cfg, dir.path(), &["--budget", "1"]).0, 3);
    assert_eq!(
        run("verify-thm1", &cfg, dir.path(), &["--budget", "1"]).0,
        3
    );
}

#[test]
fn sweep_csv_round_trips_and_matches_solver() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"source": [0.3, 0.7], "distortion": "hamming", "divergence": {"kind": "tv"},
            "sweep": {"theta_d": [0.05, 0.2], "theta_div": [0.1, "inf"]}, "seed": 1, "trials": 1}"#,
    );
    let (code, report) = run("sweep", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_eq!(report["rows"], 4);
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "theta_d",
            "theta_D",
            "rate_bits",
            "achieved_d",
            "achieved_D",
            "status",
            "gap_estimate"
        ]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let grid = [
        (0.05, 0.1),
        (0.05, f64::INFINITY),
        (0.2, 0.1),
        (0.2, f64::INFINITY),
    ];
    let p = Pmf::new(vec![0.3, 0.7]).unwrap();
    let d = DistortionMatrix::hamming(2, 2).unwrap();
    for (row, (td, tv)) in rows.iter().zip(grid) {
        let parsed: Vec<f64> = [0, 1, 2, 3, 4, 6]
            .iter()
            .map(|&i| row[i].parse().unwrap())
            .collect();
        assert_eq!((parsed[0], parsed[1]), (td, tv));
        let sol = irf::rdpf(&p, &d, &DivergenceKind::TotalVariation, td, tv, 1e-6).unwrap();
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        assert!(
            same(parsed[2], sol.rate_bits),
            "{} vs {}",
            parsed[2],
            sol.rate_bits
        );
        assert!(same(parsed[3], sol.achieved[0]));
        assert!(same(parsed[5], sol.gap_estimate));
        assert_eq!(&row[5], "optimal");
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "b.json", BSC);
    for cmd in ["roundtrip", "verify-thm1", "solve"] {
        let (a, b) = (
            dir.path().join(format!("{cmd}-a")),
            dir.path().join(format!("{cmd}-b")),
        );
        let oa = rdpc(&[
            cmd,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            a.to_str().unwrap(),
        ]);
        let ob = rdpc(&[
            cmd,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
        ]);
        assert_eq!(oa.stdout, ob.stdout, "{cmd}");
        let mut names: Vec<_> = fs::read_dir(&a)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            assert_eq!(
                fs::read(a.join(&n)).unwrap(),
                fs::read(b.join(&n)).unwrap(),
                "{cmd} {n:?}"
            );
        }
    }
}

#[test]
fn roundtrip_regimes() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("symbols.txt"),
        "# binary input\n0 1 1 0\n1 1 0 0 0 1\n",
    )
    .unwrap();
    let identity = write_config(
        dir.path(),
        "id.json",
        r#"{"source": [0.5, 0.5], "distortion": "hamming", "theta_d": 0,
            "input": "symbols.txt", "seed": 4, "trials": 1}"#,
    );
    let out = dir.path().join("id");
    let (code, report) = run("roundtrip", &identity, &out, &[]);
    assert_eq!(code, 0);
    assert_eq!(report["samples"], 10);
    let recon = fs::read_to_string(out.join("reconstruction.txt")).unwrap();
    assert_eq!(
        recon.split_whitespace().collect::<Vec<_>>(),
        "0 1 1 0 1 1 0 0 0 1".split(' ').collect::<Vec<_>>()
    );

    // A zero-rate code sends k = 1 for every sample.
    let independent = write_config(
        dir.path(),
        "ind.json",
        r#"{"source": [0.5, 0.5], "channel": [[0.5, 0.5], [0.5, 0.5]], "seed": 4, "trials": 500}"#,
    );
    let out = dir.path().join("ind");
    let (code, report) = run("roundtrip", &independent, &out, &[]);
    assert_eq!(code, 0);
    assert_eq!(report["bits_per_sample"], 1.0);
    let stream =
        rdpc::bitcode::read_stream(&fs::read(out.join("roundtrip.rdpc")).unwrap()).unwrap();
    assert!(stream.indices.iter().all(|&k| k == 1));

    let bad = write_config(
        dir.path(),
        "bad.json",
        &BSC.replace("\"seed\"", "\"input\": \"nope.txt\", \"seed\""),
    );
    assert_eq!(run("roundtrip", &bad, &out, &[]).0, 1);
}

#[test]
fn verify_commands_report_and_write() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &BSC.replace(
            "\"trials\": 2000",
            "\"trials\": 40000, \"block_sizes\": [1, 2]",
        ),
    );
    for cmd in ["verify-converse", "verify-thm3"] {
        let (code, report) = run(cmd, &cfg, dir.path(), &[]);
        assert_eq!(code, 0, "{cmd}: {report}");
        assert_eq!(report["pass"], true);
        assert!(dir.path().join(format!("{cmd}.json")).exists());
    }
    // Too few trials to resolve the law within tolerance.
    let (code, report) = run("verify-thm3", &cfg, dir.path(), &["--trials", "200"]);
    assert_eq!(code, 4);
    assert_eq!(report["pass"], false);

    let big = write_config(
        dir.path(),
        "big.json",
        r#"{"source": [0.25, 0.25, 0.25, 0.25], "distortion": "hamming", "theta_d": 0.3,
            "seed": 1, "trials": 10}"#,
    );
    assert_eq!(run("verify-converse", &big, dir.path(), &[]).0, 1);
    assert_eq!(run("verify-thm3", &big, dir.path(), &[]).0, 1);
}

#[test]
fn roundtrip_matches_channel_statistics() {
    let cfg = rdpc::harness::ExperimentConfig::from_json(
        &BSC.replace("\"trials\": 2000", "\"trials\": 100000"),
    )
    .unwrap();
    let out = rdpc::harness::cmd_roundtrip(&cfg).unwrap();
    let rows = out.report["empirical_constraints"].as_array().unwrap();
    let distortion = rows[0]["empirical"].as_f64().unwrap();
    assert!((distortion - 0.25).abs() <= 0.01, "{distortion}");
    let achieved = rows[1]["channel_value"].as_f64().unwrap();
    let tv = rows[1]["empirical"].as_f64().unwrap();
    assert!((tv - achieved).abs() <= 0.01, "{tv} vs {achieved}");
}
