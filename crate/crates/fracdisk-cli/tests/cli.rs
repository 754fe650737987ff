//! End-to-end runs of the `fracdisk` binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracdisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    run(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = read(path);
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

/// Full width at half maximum of a signed cross-section `s,r,phi,value`.
fn fwhm(rows: &[Vec<f64>]) -> f64 {
    let peak = rows.iter().map(|r| r[3]).fold(f64::MIN, f64::max);
    let above: Vec<f64> = rows
        .iter()
        .filter(|r| r[3] >= peak / 2.0)
        .map(|r| r[0])
        .collect();
    above.last().unwrap() - above.first().unwrap()
}

#[test]
fn steady_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "steady", "--alpha", "1.7", "--k1", "3", "--k2", "9", "--source", "bubble", "--R",
            "40", "--grid", "41x32",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = csv_rows(&dir.path().join("field.csv"));
    assert_eq!(header, "r,phi,x,y,value");
    assert_eq!(rows.len(), 41 * 32);
    for row in rows.iter().filter(|r| r[0] == 1.0) {
        assert_eq!(row[4], 0.0);
    }
    assert!(rows.iter().any(|r| r[4] > 0.0));

    let (hx, x) = csv_rows(&dir.path().join("cross_x.csv"));
    let (_, y) = csv_rows(&dir.path().join("cross_y.csv"));
    assert_eq!(hx, "s,r,phi,value");
    assert_eq!(x.len(), 2 * 41 - 1);
    assert_eq!((x[0][0], x[x.len() - 1][0]), (-1.0, 1.0));
    assert!(x.windows(2).all(|w| w[0][0] < w[1][0]));
    assert_eq!(x[0][3], 0.0);
    // Stronger diffusion along x2 spreads the profile along the y axis.
    assert!(fwhm(&y) > fwhm(&x), "{} vs {}", fwhm(&y), fwhm(&x));

    let sol = read(&dir.path().join("solution.json"));
    let doc: serde_json::Value = serde_json::from_str(&sol).unwrap();
    assert_eq!(doc["alpha"], 1.7);
    assert_eq!(doc["R"], 40);
}

#[test]
fn classical_limit_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["steady", "--alpha", "2.0", "--R", "12", "--grid", "5x4"],
    );
    assert_eq!(code(&o), 0);
    let (_, rows) = csv_rows(&dir.path().join("field.csv"));
    assert_eq!(rows.len(), 20);
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(
            code(&run_in(
                d.path(),
                &["steady", "--source", "cusp", "--R", "16", "--grid", "21x24"]
            )),
            0
        );
        assert_eq!(
            code(&run_in(
                d.path(),
                &["evolve", "--R", "8", "--grid", "9x8", "--T", "0.2", "--dt", "0.05"]
            )),
            0
        );
    }
    for f in [
        "field.csv",
        "cross_x.csv",
        "cross_y.csv",
        "solution.json",
        "snapshot_003.csv",
        "manifest.json",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["steady", "--alpha"],
        vec!["steady", "--alpha", "0.5"],
        vec!["steady", "--k1", "-1"],
        vec!["steady", "--grid", "10by20"],
        vec!["steady", "--source", "gaussian"],
        vec!["evolve", "--T", "1", "--dt", "0.3"],
        vec!["evolve", "--T", "1", "--dt", "0.25", "--times", "0.3"],
        vec!["converge-steady", "--ref-R", "20"],
        vec!["converge-evolve", "--schedule-p", "0"],
        vec!["steady", "--config", "/nonexistent/config.json"],
    ] {
        let o = run_in(dir.path(), &args);
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"alpha": 1.5, "R": 6, "grid": "3x4", "source": {"kind": "bubble", "radius": 0.3}}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let out1 = dir.path().join("a");
    assert_eq!(code(&run_in(&out1, &["steady", "--config", cfg])), 0);
    let doc: serde_json::Value = serde_json::from_str(&read(&out1.join("solution.json"))).unwrap();
    assert_eq!(doc["alpha"], 1.5);
    assert_eq!(doc["R"], 6);

    let out2 = dir.path().join("b");
    assert_eq!(
        code(&run_in(
            &out2,
            &["steady", "--config", cfg, "--alpha", "1.9", "--R", "4"]
        )),
        0
    );
    let doc: serde_json::Value = serde_json::from_str(&read(&out2.join("solution.json"))).unwrap();
    assert_eq!(doc["alpha"], 1.9);
    assert_eq!(doc["R"], 4);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpah": 1.5}"#).unwrap();
    assert_eq!(
        code(&run_in(
            &out2,
            &["steady", "--config", bad.to_str().unwrap()]
        )),
        2
    );
}

#[test]
fn evolve_snapshots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["evolve", "--R", "10", "--grid", "6x8"]);
    assert_eq!(code(&o), 0);
    let m: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(m["T"], 0.5);
    assert_eq!(m["N"], 200);
    assert_eq!(m["times"], serde_json::json!([0.125, 0.25, 0.375, 0.5]));
    for f in m["files"].as_array().unwrap() {
        let (_, rows) = csv_rows(&dir.path().join(f.as_str().unwrap()));
        assert!(rows.iter().filter(|r| r[0] == 1.0).all(|r| r[4] == 0.0));
    }

    let zero = dir.path().join("zero");
    assert_eq!(
        code(&run_in(
            &zero,
            &["evolve", "--T", "0", "--R", "4", "--grid", "3x4"]
        )),
        0
    );
    let m: serde_json::Value = serde_json::from_str(&read(&zero.join("manifest.json"))).unwrap();
    assert_eq!(m["N"], 0);
    assert_eq!(m["files"].as_array().unwrap().len(), 1);
    let (_, rows) = csv_rows(&zero.join("snapshot_000.csv"));
    assert!(rows.iter().all(|r| r[4] == 0.0));
}

#[test]
fn evolve_manufactured_tracks_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "evolve",
            "--source",
            "manufactured",
            "--R",
            "12",
            "--dt",
            "0.015625",
            "--times",
            "1.5",
            "--grid",
            "3x4",
        ],
    );
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("snapshot_000.json"))).unwrap();
    // T(1.5) = 0, so the final state is small.
    let max = doc["coeffs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["a"].as_f64().unwrap().abs())
        .fold(0.0, f64::max);
    assert!(max < 5e-3, "{max}");
}

#[test]
fn converge_steady_defaults_and_custom_caps() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["converge-steady"]);
    assert_eq!(code(&o), 0);
    let csv = read(&dir.path().join("convergence.csv"));
    let caps: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(caps, vec!["4", "12", "20", "28", "34", "42", "50", "58"]);
    assert!(read(&dir.path().join("convergence.txt")).ends_with("Theoretical CR: 4.35\n"));
    assert!(dir.path().join("cache").read_dir().unwrap().count() == 1);

    let custom = dir.path().join("custom");
    std::fs::create_dir_all(&custom).unwrap();
    let cfg = custom.join("c.json");
    std::fs::write(&cfg, r#"{"caps": [4, 8], "ref_R": 16}"#).unwrap();
    assert_eq!(
        code(&run_in(
            &custom,
            &["converge-steady", "--config", cfg.to_str().unwrap()]
        )),
        0
    );
    assert_eq!(read(&custom.join("convergence.csv")).lines().count(), 3);
    assert!(!read(&custom.join("convergence.txt")).contains("Theoretical"));
}

#[test]
fn converge_evolve_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"levels": 3}"#).unwrap();
    let o = run_in(
        dir.path(),
        &["converge-evolve", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir.path().join("convergence.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("2,5.0000000000000000e-1,"));
    assert!(lines[3].starts_with("8,1.2500000000000000e-1,"));
    assert!(read(&dir.path().join("convergence.txt")).ends_with("Theoretical CR: 1.0875\n"));
}

#[test]
fn project_emits_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run_in(
            dir.path(),
            &["project", "--source", "cusp", "--R", "6", "--grid", "5x8"]
        )),
        0
    );
    let doc: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("coefficients.json"))).unwrap();
    let x2 = doc["coeffs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["l"] == 1 && c["n"] == 0 && c["mu"] == -1)
        .unwrap();
    assert_eq!(x2["a"], 1.0);
    let (_, rows) = csv_rows(&dir.path().join("source.csv"));
    // The projection of |x1|³ + x2 is close to the source at interior points.
    for r in rows.iter().filter(|r| r[0] <= 0.5) {
        let want = r[2].abs().powi(3) + r[3];
        assert!((r[4] - want).abs() < 2e-2, "{r:?}");
    }
}
