use std::path::Path;
use std::process::{Command, Output};

use maviscid::analysis::{order, parse_table_csv};

fn maviscid(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maviscid"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("MAVISCID_THREADS", "2")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn empty_lists_and_unknown_cases_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["convergence", "--case", "II", "--h-list", "", "--eps-list", ""][..],
        &["convergence", "--case", "VII"],
        &["convergence"],
        &["solve", "--case", "II"],
        &["convergence", "--case", "III", "--h-list", "4,8"],
        &["verify", "--h-list", "1/x"],
    ] {
        let o = maviscid(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn convergence_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = maviscid(&["convergence", "--case", "II", "--degree", "2", "--h-list", "1/4,1/8,1/16"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("| 1/16 |"));
    let csv = std::fs::read_to_string(dir.path().join("convergence_II_k2.csv")).unwrap();
    assert!(csv.starts_with("h,L2,L2_order,H1,H1_order,H2_broken,H2_broken_order\n"));
    let rows = parse_table_csv(&csv).unwrap();
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        for c in 0..3 {
            let again = order(w[0].parameter, w[0].errors[c], w[1].parameter, w[1].errors[c]).unwrap();
            assert!((again - w[1].orders[c].unwrap()).abs() < 1e-12);
        }
    }
    let h2 = rows[2].orders[2].unwrap();
    assert!((h2 - 1.0).abs() < 0.1, "{h2}");
    let md = std::fs::read_to_string(dir.path().join("convergence_II_k2.md")).unwrap();
    assert!(md.lines().nth(3).unwrap().starts_with("| 1/8 | "), "{md}");
}

#[test]
fn config_file_fills_absent_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "case = III\nn = 4\neps = 0.05\nsigma = 30\n").unwrap();
    let o = maviscid(&["solve", "--config", cfg.to_str().unwrap(), "--eps-list", "0.1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("n = 4, eps = 1e-1"), "{}", stdout(&o));
}

#[test]
fn solve_writes_dump_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = maviscid(&["solve", "--case", "III", "--h-list", "4", "--eps-list", "0.05"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dump = std::fs::read_to_string(dir.path().join("solution_III.txt")).unwrap();
    // P2 on 4x4 squares: 9 x 9 nodes
    assert_eq!(dump.lines().count(), 81);
    let mut negative = false;
    for line in dump.lines() {
        let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(v.len(), 3);
        let on_boundary = v[..2].iter().any(|&c| c == 0.0 || c == 1.0);
        if on_boundary {
            assert!(v[2].abs() < 1e-10);
        }
        negative |= v[2] < 0.0;
    }
    assert!(negative);
    let grid = std::fs::read_to_string(dir.path().join("grid_III.csv")).unwrap();
    let data: Vec<&str> = grid.lines().skip(1).filter(|l| !l.is_empty()).collect();
    assert_eq!(data.len(), 101 * 101);
    assert!(data.iter().all(|l| l.split(',').count() == 3 && !l.contains("NaN")));
}

#[test]
fn solve_writes_six_slices_in_3d() {
    let dir = tempfile::tempdir().unwrap();
    let o = maviscid(&["solve", "--case", "VI", "--h-list", "2", "--eps-list", "0.1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for axis in ["x", "y"] {
        for p in ["0.25", "0.5", "0.75"] {
            let s = std::fs::read_to_string(dir.path().join(format!("slice_VI_{axis}{p}.csv"))).unwrap();
            assert_eq!(s.lines().skip(1).filter(|l| !l.is_empty()).count(), 101 * 101);
        }
    }
}

#[test]
fn solver_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "case = negative\nf = -1\ng = 0\npsi = eps\nn = 6\neps = 0.01\n").unwrap();
    let o = maviscid(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_is_deterministic_and_reports_unpenalized_failures() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "--samples", "1", "--seed", "9", "--h-list", "2,4"];
    let (oa, ob) = (maviscid(&args, a.path()), maviscid(&args, b.path()));
    assert!(oa.status.success());
    assert_eq!(oa.stdout, ob.stdout);
    let read = |d: &Path| std::fs::read(d.join("verify.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));

    let o = maviscid(&["verify", "--sigma", "0", "--eps-list", "0.01"], a.path());
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("FAIL coercivity") && text.contains("level n = ") && text.contains("worst seed"), "{text}");
}

#[test]
fn failed_sweep_leaves_partial_table() {
    // without penalty the n = 4 solve breaks down after n = 2 succeeded
    let dir = tempfile::tempdir().unwrap();
    let o = maviscid(&["convergence", "--case", "II", "--degree", "2", "--sigma", "0", "--h-list", "2,4,8"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("convergence_II_k2.csv")).unwrap();
    let rows = parse_table_csv(&csv).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].parameter, 0.5);
    assert!(stdout(&o).contains("| 1/2 |"));
}
