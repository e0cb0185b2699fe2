use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainphase"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn process_exit_codes() {
    assert_eq!(run(&["efficiency", "--family", "sp", "--eta", "0.9"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["efficiency", "--family", "noon", "--n", "0", "--eta", "0.9"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["validate", "--quick", "--mutate"]).status.code(), Some(2));
    assert_eq!(run(&["figure", "fig1b", "--out", "/nonexistent-dir/x.csv"]).status.code(), Some(3));
}

#[test]
fn results_go_to_stdout_and_errors_to_stderr() {
    let o = run(&["efficiency", "--family", "sp", "--eta", "0.9"]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("family,n,m,n_sq,eta,"));
    assert!(o.stderr.is_empty());

    let o = run(&["efficiency", "--family", "sp", "--eta", "-0.5"]);
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8(o.stderr).unwrap().contains("eta = -0.5"));
}
