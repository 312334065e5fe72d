use std::path::Path;
use std::process::{Command, Output};

use bhacs::acs::standard_structure;
use bhacs::snapshot::Snapshot;
use bhacs::topology::sphere_map_seed;
use bhacs::{Grid, MetricField};

fn bhacs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bhacs"))
        .args(args)
        .env("BHACS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn minimize_writes_run_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n = 8\nseed = perturbation\nepsilon = 0.2\nmax_iters = 25\ncheckpoint_every = 10\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = bhacs(&["--quiet", "--config", path(&cfg), "--out", path(&out_dir), "minimize"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["trace.csv", "periods.csv", "checkpoint_000000.bhacs", "checkpoint_000020.bhacs", "final.bhacs", "summary.txt"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 27);
    assert!(text(&out).contains("status max_iters"));

    let verify = bhacs(&["verify", path(&out_dir.join("final.bhacs")), "--tests", "2"]);
    assert_eq!(verify.status.code(), Some(0));
    assert!(text(&verify).contains("residual_weak_max"));

    let plot = bhacs(&[
        "--out",
        path(dir.path()),
        "plot",
        "--trace",
        path(&out_dir.join("trace.csv")),
        "--periods",
        path(&out_dir.join("periods.csv")),
    ]);
    assert_eq!(plot.status.code(), Some(0));
    let script = std::fs::read_to_string(dir.path().join("plot.gp")).unwrap();
    assert!(script.contains("$trace << EOD") && script.contains("$periods << EOD"));
}

#[test]
fn constant_seed_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, format!("n = 8\nseed = constant\nout = {}\n", path(&dir.path().join("o")))).unwrap();
    let out = bhacs(&["--quiet", "--config", path(&cfg), "minimize"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out).contains("status converged"));
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n = 8\nspeed = 3\n").unwrap();
    let out = bhacs(&["--config", path(&cfg), "minimize"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let junk = dir.path().join("junk.bhacs");
    std::fs::write(&junk, b"not a snapshot").unwrap();
    assert_eq!(bhacs(&["verify", path(&junk)]).status.code(), Some(1));
    assert_eq!(bhacs(&["chern", path(&dir.path().join("missing.bhacs"))]).status.code(), Some(1));
    assert_eq!(bhacs(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn chern_glue_and_scan_on_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let metric = MetricField::flat(Grid::new(8).unwrap());
    let bubble = dir.path().join("bubble.bhacs");
    let flat = dir.path().join("flat.bhacs");
    Snapshot::capture(&sphere_map_seed(&[0, 0, 0, 1, 0, 0], &metric).unwrap(), &metric, "").unwrap().write(&bubble).unwrap();
    Snapshot::capture(&standard_structure(&metric).unwrap(), &metric, "").unwrap().write(&flat).unwrap();

    let chern = bhacs(&["chern", path(&bubble)]);
    assert_eq!(chern.status.code(), Some(0));
    assert!(text(&chern).contains("p12=2.000000000"), "{}", text(&chern));

    let glue = bhacs(&["--out", path(dir.path()), "glue", path(&flat), path(&flat), "--center", "4,4,4,4"]);
    assert_eq!(glue.status.code(), Some(0), "{}", String::from_utf8_lossy(&glue.stderr));
    assert!(text(&glue).contains("annulus_energy 0e0"));
    let glued = Snapshot::read(&dir.path().join("glued.bhacs")).unwrap();
    assert_eq!(glued.field, Snapshot::read(&flat).unwrap().field);

    let scan = bhacs(&["scan", path(&bubble), "--eps0", "1e-9"]);
    assert_eq!(scan.status.code(), Some(0));
    assert!(text(&scan).contains("flagged center="));
}
