//! End-to-end runs of the compiled CLI binary across its subcommands.

use std::path::Path;
use std::process::Command;

fn geomarket() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geomarket"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("binary runs");
    let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
    assert!(
        output.status.success(),
        "command failed: {}\nstdout: {stdout}\nstderr: {}",
        format!("{cmd:?}"),
        String::from_utf8_lossy(&output.stderr)
    );
    stdout
}

fn write_checkins(path: &Path, rows: usize) {
    let mut text = String::new();
    for i in 0..rows {
        let lat = 33.70 + (i as f64 * 0.61) % 0.64;
        let lon = -118.68 + (i as f64 * 0.37) % 0.53;
        text.push_str(&format!("u{i}\t2010-10-19T23:55:27Z\t{lat:.6}\t{lon:.6}\t{i}\n"));
    }
    // One row outside the box, dropped on ingest.
    text.push_str("zz\t2010-10-19T23:55:27Z\t51.0\t0.1\t0\n");
    std::fs::write(path, text).unwrap();
}

#[test]
fn full_pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();

    // init-config
    let config = base.join("geomarket.toml");
    run_ok(geomarket().args(["init-config", "--path"]).arg(&config));
    assert!(std::fs::read_to_string(&config).unwrap().contains("[domain]"));

    // ingest with nested samples
    let raw = base.join("checkins.txt");
    write_checkins(&raw, 400);
    let dataset = base.join("dataset.json");
    let stdout = run_ok(
        geomarket()
            .args(["ingest", "--input"])
            .arg(&raw)
            .arg("--output")
            .arg(&dataset)
            .args(["--samples", "50,100"]),
    );
    assert!(stdout.contains("ingested 400 check-ins"));
    assert!(base.join("dataset.sample50.json").exists());

    // workload generation
    let workload = base.join("workload.json");
    run_ok(
        geomarket()
            .args(["workload", "--dataset"])
            .arg(&dataset)
            .args(["--count", "3", "--output"])
            .arg(&workload),
    );

    // symmetric bench on a small overridden grid
    let out = base.join("reports");
    let stdout = run_ok(
        geomarket()
            .args(["--l", "64", "--h-max", "0", "--format", "csv", "--out-dir"])
            .arg(&out)
            .args(["bench-sse", "--dataset"])
            .arg(&dataset)
            .args(["--queries", "2"]),
    );
    assert!(stdout.contains("restricted 1 pair"));
    let csv = std::fs::read_to_string(out.join("bench-sse.csv")).unwrap();
    assert!(csv.starts_with("l,h_max,objects"));

    // asymmetric bench
    let stdout = run_ok(
        geomarket()
            .args(["--l", "64", "--out-dir"])
            .arg(&out)
            .args(["bench-hve", "--objects", "40", "--workers", "1,2"]),
    );
    assert!(stdout.contains("3 pairings per match"));

    // cost bench, loading the emitted config file back in
    let stdout = run_ok(
        geomarket()
            .arg("--config")
            .arg(&config)
            .arg("--out-dir")
            .arg(&out)
            .arg("bench-cost"),
    );
    assert!(stdout.contains("purchase total: 421219 gas"));
    assert!(out.join("bench-cost.json").exists());

    // scenario demo: emit then replay
    let script = base.join("demo.json");
    run_ok(
        geomarket()
            .args(["scenario", "--emit-demo"])
            .arg(&script)
            .arg("--out-dir")
            .arg(&out),
    );
    let stdout = run_ok(
        geomarket()
            .args(["scenario", "--script"])
            .arg(&script)
            .arg("--out-dir")
            .arg(&out),
    );
    assert!(stdout.contains("offers completed 1, reversed 1"));
    assert!(stdout.contains("funds conserved: true"));
    assert!(out.join("scenario-txlog.jsonl").exists());
}

#[test]
fn binary_reports_errors_cleanly() {
    let output = geomarket()
        .args(["workload", "--dataset", "/nonexistent/ds.json"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error:"));

    let output = geomarket()
        .args(["--l", "100", "bench-cost"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("power of two"));
}
