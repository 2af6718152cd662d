use std::path::Path;
use std::process::Command;

fn lpfdr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lpfdr"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let st = lpfdr()
            .args(["simulate", "--preset", "1", "--n", "300", "--reps", "6", "--seed", "42", "--threads", threads, "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(st.success());
    }
    for f in ["metrics.csv", "curves.csv", "coeffs.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let metrics = read(a.path(), "metrics.csv");
    let methods: Vec<&str> = metrics.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["glb", "max", "mix", "seq"]);
    assert_eq!(read(a.path(), "curves.csv").lines().count(), 1 + 4 * 300);
    assert_eq!(read(a.path(), "coeffs.csv").lines().count(), 1 + 2 * 300 * 3);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"
[model]
a = 0.1
nu = [0.6, 0.4]
nulls = [{ dist = "normal", mean = 0.0, sd = 1.0 }, { dist = "normal", mean = -1.0, sd = 1.0 }]
alternative = { dist = "normal", mean = -4.0, sd = 1.0 }

[run]
n = 200
reps = 2
alpha = 0.1
methods = ["mix", "max"]
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = lpfdr().args(["simulate", "--config"]).arg(&cfg).args(["--methods", "max", "--alpha", "0.25", "--out"]).arg(&out).status().unwrap();
    assert!(st.success());
    let metrics = read(&out, "metrics.csv");
    assert_eq!(metrics.lines().count(), 2);
    assert!(metrics.lines().nth(1).unwrap().starts_with("max,"));
    assert_eq!(read(&out, "coeffs.csv"), "method,i_over_n,k,c_avg\n");
}

#[test]
fn validation_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "preset = 1\n[run]\nalpha = 2.0\n").unwrap();
    let out = lpfdr().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.alpha"));

    let out = lpfdr().args(["simulate", "--preset", "6"]).output().unwrap();
    assert!(!out.status.success());
    let out = lpfdr().args(["simulate", "--preset", "1", "--pair-margin", "loose"]).output().unwrap();
    assert!(!out.status.success());
    let out = lpfdr().args(["simulate"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn mle_from_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("x.txt");
    let values: Vec<String> = (0..400).map(|i| format!("{}", -3.0 + 6.0 * (i as f64 + 0.5) / 400.0)).collect();
    std::fs::write(&sample, format!("# grid\n{}\n", values.join("\n"))).unwrap();
    let out = lpfdr().args(["mle", "--preset", "1", "--sample"]).arg(&sample).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("observations    400"));
    assert!(text.contains("converged       true"));

    std::fs::write(&sample, "1.0\nabc\n").unwrap();
    let out = lpfdr().args(["mle", "--preset", "1", "--sample"]).arg(&sample).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
}

#[test]
fn mle_simulated_extended() {
    let out = lpfdr().args(["mle", "--preset", "1", "--a", "0", "--n", "3000", "--extended"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("nu_hat"));
}
