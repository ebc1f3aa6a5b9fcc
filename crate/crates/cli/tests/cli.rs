use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyson-iso")).args(args).env_remove("DYSON_ISO_SEED").output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap().trim().to_string()
}

/// `<p_2^2> = d (d + 2)` with `d = n + beta n (n - 1) / 2`; here `d = 21/2`.
#[test]
fn exact_moment_is_printed_as_a_rational() {
    let out = run(&["gbe", "moment", "--nu", "2,2", "--beta", "5/2", "--n", "3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "525/4");
}

/// `p_2 / 2` is a squared Bessel process of dimension `d` from 0, so
/// `<p_2(s) p_2(t)> = 4 (s^2 (d^2 + 2 d) + d^2 s (t - s))`; `d = 6`.
#[test]
fn halfline_evaluation_is_exact() {
    let out = run(&["pnu", "eval", "--mode", "halfline", "--nu", "2,2", "--points", "1/2,1", "--beta", "1", "--n", "3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "84");
}

#[test]
fn polynomial_is_printed_in_canonical_form() {
    let out = run(&["pnu", "build", "--nu", "2"]);
    assert_eq!(stdout(&out), "(1/2*beta*n^2 - 1/2*beta*n + n)*Y(1,1)");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["verify", "--suite", "appendix-golden", "--no-timing"]).status.code(), Some(0));
    let failing = ["verify", "--suite", "network-n2", "--samples", "200", "--z-bound", "0.001", "--format", "csv"];
    assert_eq!(run(&failing).status.code(), Some(1));
    assert_eq!(run(&["verify", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "appendix-golden", "--samples", "1"]).status.code(), Some(2));
    assert_eq!(run(&["pnu", "build", "--nu", "3"]).status.code(), Some(2));
}

#[test]
fn reports_are_reproducible_without_timing() {
    let args = ["verify", "--suite", "network-n2", "--samples", "500", "--seed", "3", "--no-timing"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
