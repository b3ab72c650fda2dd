use std::process::{Command, Output};

fn vise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vise")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sweep_emits_csv_with_requested_methods() {
    let o = vise(&["sweep", "--n", "21", "--sigma", "1", "--points", "5", "--method", "all", "--proposals", "2000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("rho,"), "{header}");
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 15);
    for m in ["exact_sum", "normal_approx", "monte_carlo"] {
        assert_eq!(body.iter().filter(|l| l.contains(m)).count(), 5, "{m}");
    }
}

#[test]
fn pit_reports_the_known_right_zero() {
    let o = vise(&["pit", "--n", "21", "--sigma", "1", "--alpha", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "right_zero").unwrap();
    let z: f64 = row[col].parse().unwrap();
    assert!((z + 0.266).abs() < 0.005, "{z}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# ladder run\nn = 21\nrho_min = -0.5\nrho-max = 0.5\npoints = 7\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = vise(&["ladder", "--config", cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 8);

    let o = vise(&["ladder", "--config", cfg, "--points", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let args = ["spline", "--n", "11", "--points", "9"];
    let a = vise(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let b = vise(&with_out);
    assert!(a.status.success() && b.status.success());
    assert!(b.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
}

#[test]
fn bad_input_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "n = 21\nwidth = 3\n").unwrap();
    let o = vise(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(vise(&["sweep", "--method", "fancy"]).status.code(), Some(2));
    assert_eq!(vise(&["sweep", "--sigma", "-1"]).status.code(), Some(2));
    assert_eq!(vise(&["sensitivity", "--points", "0"]).status.code(), Some(2));
}

#[test]
fn simulate_is_independent_of_thread_count() {
    let base = ["simulate", "--rho", "-0.3", "--steps", "3000", "--trials", "12", "--seed", "5"];
    let run = |t: &str| {
        let mut a = base.to_vec();
        a.extend(["--threads", t]);
        vise(&a)
    };
    let (a, b) = (run("1"), run("3"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 2);
}

#[test]
fn verify_passes_and_detects_a_corrupted_cdf() {
    let ok = vise(&["verify", "--proposals", "200000"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).ends_with("overall=pass\n"));

    let bad = vise(&["verify", "--proposals", "200000", "--corrupt-cdf"]);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    assert!(text.contains("overall=fail"));
    assert!(text.contains("foc_stationarity=fail"));
    assert!(text.contains("mc_vs_exact=fail"));
}
