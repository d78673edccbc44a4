use std::process::{Command, Output};

fn cfg(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multicrit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_config_reports_a_code() {
    let o = run(&["map", "build", "--map", "/nonexistent.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[InvalidInput]"));
}

#[test]
fn bounds_csv_is_deterministic() {
    let args = [
        "partition",
        "bounds",
        "--map",
        &cfg("golden-sine.cfg"),
        "--levels",
        "10",
    ];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# real bounds"));
    assert_eq!(lines.next().unwrap(), "level,constant,max_ratio,min_ratio");
    assert_eq!(lines.count(), 10);
}

#[test]
fn seeded_scan_is_reproducible() {
    let base = [
        "conjugacy",
        "qs",
        "--map",
        &cfg("bicritical-a.cfg"),
        "--target",
        &cfg("bicritical-matched.cfg"),
    ];
    let mut args: Vec<&str> = base.to_vec();
    args.extend([
        "--length", "4000", "--points", "6", "--tmin", "1e-3", "--seed", "7",
    ]);
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).lines().nth(1) == Some("x,t,K"));
    let other: Vec<&str> = args
        .iter()
        .map(|s| if *s == "7" { "8" } else { s })
        .collect();
    assert_ne!(run(&other).stdout, a.stdout);
}

#[test]
fn digits_flag_controls_precision() {
    let o = run(&[
        "map",
        "build",
        "--map",
        &cfg("golden-sine.cfg"),
        "--digits",
        "12",
    ]);
    let text = stdout(&o);
    let omega = text.lines().find(|l| l.starts_with("omega:")).unwrap();
    let mantissa = omega
        .trim_start_matches("omega: ")
        .split('e')
        .next()
        .unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 12);
}

#[test]
fn mismatched_grids_are_a_verification_failure() {
    let o = run(&[
        "conjugacy",
        "grid-check",
        "--map",
        &cfg("golden-sine.cfg"),
        "--target",
        &cfg("golden-bisine.cfg"),
        "--levels",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[NotIsomorphic]"));
}

#[test]
fn grid_validates() {
    let o = run(&[
        "grid",
        "validate",
        "--map",
        &cfg("golden-sine.cfg"),
        "--levels",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("max children"));
}

#[test]
fn report_runs_selected_criteria() {
    let o = run(&["report", "all", "--only", "2,8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("criterion 2 [PASS]") && text.contains("criterion 8 [PASS]"));
}

#[test]
fn yoccoz_report_has_fit_and_rows() {
    let o = run(&["yoccoz", "--map", &cfg("longbridge.cfg"), "--level", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("slope"));
    assert!(text.contains("bridge_id,nu,order,length,predicted_length,residual"));
}
