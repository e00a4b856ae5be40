use std::process::{Command, Output};

fn derivsamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_derivsamp")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn tables_rows_are_exact() {
    let out = derivsamp(&["tables"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# derivsamp v1,command=tables,"));
    assert_eq!(lines.next(), Some("table_id,m,degree,coefficients"));
    assert!(text.contains("\n1,3,0,1\n"));
    assert!(text.contains("\n1,7,4,1,-154,666,-154,1\n"));
    assert!(text.contains("\n2,3,1,-1,1\n"));
}

#[test]
fn check_exit_codes() {
    let cis = derivsamp(&["check", "--m", "3"]);
    assert_eq!(cis.status.code(), Some(0));
    let text = stdout(&cis);
    assert!(text.contains("is_cis,\"true\""));
    assert!(text.contains("upper_frame,\"15\""));
    for args in [["check", "--m", "4", "--a", "0"], ["check", "--m", "5", "--a", "1/2"]] {
        let out = derivsamp(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stdout(&out).contains("verdict,\"vanishing\""));
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(derivsamp(&["check", "--m", "2", "--rho", "2"]).status.code(), Some(2));
    assert_eq!(derivsamp(&["check", "--a", "x/y"]).status.code(), Some(2));
    assert_eq!(derivsamp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(derivsamp(&["approx", "--W", "4,banana"]).status.code(), Some(2));
}

#[test]
fn approx_on_jump_node_advises_irrational_dilation() {
    let out = derivsamp(&["approx", "--signal", "f3", "--W", "2,4,8,16"]);
    assert_ne!(out.status.code(), Some(0));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("sqrt(7)"), "{err}");
}

#[test]
fn approx_reports_fit() {
    let out = derivsamp(&["approx", "--m", "3", "--signal", "f1", "--W", "4,8,16,32"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("W,error,log10W,log10err"));
    let slope: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# slope="))
        .and_then(|s| s.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(slope >= 1.7);
}

#[test]
fn non_cis_kernel_request_exits_one() {
    assert_eq!(derivsamp(&["kernel-dump", "--m", "4", "--a", "0", "--rho", "2"]).status.code(), Some(1));
}

#[test]
fn tabulated_signal_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.csv");
    let mut body = String::from("t,f,f1\n");
    for n in -400..=400 {
        let t = n as f64 / 40.0;
        body.push_str(&format!("{t},{t},1\n"));
    }
    std::fs::write(&path, body).unwrap();
    let out = derivsamp(&["tau", "--signal-csv", path.to_str().unwrap(), "--r", "2", "--delta", "0.4,0.2,0.1,0.05"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().contains("signal=csv:"));

    std::fs::write(&path, "t,f\n0,1\n1,oops\n").unwrap();
    let bad = derivsamp(&["tau", "--signal-csv", path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn out_flag_writes_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let direct = derivsamp(&["scan", "--m-max", "6", "--rho-max", "3"]);
    let to_file = derivsamp(&["scan", "--m-max", "6", "--rho-max", "3", "--out", path.to_str().unwrap()]);
    assert!(direct.status.success() && to_file.status.success());
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn bounds_subcommand() {
    let out = derivsamp(&["bounds", "--m", "3", "--trials", "50"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(2).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[6], "0");
    assert!((fields[3].parse::<f64>().unwrap() - 15.0).abs() < 1e-9);
}
