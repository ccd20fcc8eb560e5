use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn keyrate_prints_one_row_per_state_and_channel() {
    let o = cvqkd(&["keyrate", "--state_kinds=TMSV,PSS", "--squeezing_db=10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "state,squeezing_db,xi,mean_loss_db,channel,T_opt,P_c,K,PcK");
    assert_eq!(lines.len(), 1 + 4);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 9);
        assert_eq!(f[3], "1.00000000000e1");
        assert_eq!(f[5].is_empty(), f[0] == "TMSV", "{l}");
        let k: f64 = f[7].parse().unwrap();
        assert!(k > 0.0, "{l}");
    }
    assert!(text.contains("# epsilon = 0.01") && text.contains("# nu_el = 0.04361"));
}

#[test]
fn sweeps_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let o = cvqkd(&[
            "sweep",
            "--state_kinds=PSS,TMSV",
            "--squeezing_db=5,16",
            "--loss_db=2:10:4",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (a, b) = (fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(data_lines(&text).len(), 1 + 2 * 2 * 3 * 2);
}

#[test]
fn empty_table_writes_header_only_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.csv");
    // 0.5 dB lies below the fading loss floor, so every point is skipped
    let o = cvqkd(&[
        "sweep",
        "--channel=fading",
        "--loss_db=0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&text), vec!["state,squeezing_db,xi,mean_loss_db,channel,T_opt,P_c,K,PcK"]);
    assert!(text.contains("# skipped: state=TMSV"));
}

#[test]
fn config_file_errors_name_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# run\nxi = 1.5\n").unwrap();
    let o = cvqkd(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("`xi`"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn command_line_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "xi = 0.9\nloss_db = 10\nstate_kinds = TMSV\nchannel = fixed\n").unwrap();
    let o = cvqkd(&["sweep", "--config", cfg.to_str().unwrap(), "--xi=0.85", "--format=tsv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("# xi = 0.85"));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("TMSV\t1.00000000000e1\t8.50000000000e-1\t"));
}

#[test]
fn bad_invocations_exit_with_config_error() {
    for args in [
        &["fig6"][..],
        &["sweep", "--bogus=1"],
        &["sweep", "--mu=1"],
        &["sweep", "--config", "/nonexistent/run.cfg"],
        &[],
    ] {
        let o = cvqkd(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn unwritable_output_names_the_path() {
    let o = cvqkd(&["keyrate", "--state_kinds=TMSV", "--out", "/nonexistent-dir/k.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent-dir/k.csv"));
}

#[test]
fn validate_passes_with_defaults() {
    let o = cvqkd(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("# mu = 0.526"));
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 4);
}

#[test]
fn validate_fails_loudly_with_tiny_cutoff() {
    let o = cvqkd(&["validate", "--cutoff=5"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("FAIL fock-covariance")), "{text}");
    assert!(stderr(&o).contains("validation failed"));
}

#[test]
fn fig5_writes_three_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("surf.csv");
    let o = cvqkd(&[
        "fig5",
        "--loss_db=0.8,11.2",
        "--xi_grid=0.9,1.0",
        "--squeezing_grid=5:15:5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for (suffix, rows) in [("xi", 4), ("squeezing", 6), ("xi1", 6)] {
        let path = dir.path().join(format!("surf_{suffix}.csv"));
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains(&format!("# table = {suffix}")));
        assert_eq!(data_lines(&text).len(), 1 + rows, "{}", path.display());
    }
    assert!(!Path::new(&out).exists());
}

#[test]
fn help_exits_cleanly() {
    let o = cvqkd(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("--config"));
}
