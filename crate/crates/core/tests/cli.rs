use std::path::Path;
use std::process::{Command, Output};

use gslab::report::SweepReport;

fn gslab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gslab")).args(args).current_dir(dir).env("GSLAB_THREADS", "2").output().unwrap()
}

const BETA: &[&str] = &["--beta", "0.1,0.5", "--nu", "1,2,4"];

#[test]
fn passing_check_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let o = gslab(&["check", "maximal"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
}

#[test]
fn failing_gate_exits_two() {
    // ν = 1/2, 1 on a single interval: the full-kernel norm falls off, so the slope gate fails
    let d = tempfile::tempdir().unwrap();
    let args = ["sweep", "norms", "--piece", "full", "--nu", "1,2", "--interval", "1:2", "--tgrid", "9", "--rounds", "1"];
    let o = gslab(&args, d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL sweep.norms full.slope"));
}

#[test]
fn config_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec!["check", "phase", "--nu", "0.3"],
        vec!["compare", "beta"],
        vec!["compare", "beta", "--baseline", "missing.json"],
        vec!["sweep", "norms", "--piece", "t7"],
    ] {
        let o = gslab(&args, d.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{args:?}");
    }
    // a store without the lattice's entry is a configuration error too
    let store = d.path().join("b.json");
    let mut args = vec!["freeze-baseline", "beta", "--baseline", store.to_str().unwrap()];
    args.extend(BETA);
    assert_eq!(gslab(&args, d.path()).status.code(), Some(0));
    let o = gslab(&["compare", "beta", "--nu", "1,2", "--baseline", store.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn freeze_then_compare_reports_zero_drift() {
    let d = tempfile::tempdir().unwrap();
    let store = d.path().join("b.json");
    let out = d.path().join("c.json");
    let mut args = vec!["freeze-baseline", "beta", "--baseline", store.to_str().unwrap()];
    args.extend(BETA);
    assert_eq!(gslab(&args, d.path()).status.code(), Some(0));
    let mut args = vec!["compare", "beta", "--baseline", store.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend(BETA);
    let o = gslab(&args, d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let rep = SweepReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep.summary.metrics["baseline_drift"], 0.0);
    assert!(rep.rows.iter().all(|r| r.delta == Some(0.0)));
}

#[test]
fn csv_output_is_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = d.path().join(format!("run{k}.csv"));
        let mut args = vec!["sweep", "beta", "--out", out.to_str().unwrap()];
        args.extend(BETA);
        assert_eq!(gslab(&args, d.path()).status.code(), Some(0));
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    assert!(text.starts_with("beta,nu,a_best,value,delta,verdict\n"), "{text}");
}

#[test]
fn config_file_values_apply_and_flags_win() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("g.ini"), "[beta]\nbeta = 0.5\nnu = 1,2\n").unwrap();
    let a = d.path().join("a.json");
    let o = gslab(&["sweep", "beta", "--config", "g.ini", "--out", a.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(SweepReport::from_json(&std::fs::read_to_string(&a).unwrap()).unwrap().rows.len(), 2);
    let o = gslab(&["sweep", "beta", "--config", "g.ini", "--nu", "1,2,4", "--out", a.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(SweepReport::from_json(&std::fs::read_to_string(&a).unwrap()).unwrap().rows.len(), 3);
}
