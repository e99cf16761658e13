use std::path::Path;
use std::process::{Command, Output};

use padesym_cli::csv::CsvSeries;

fn padesym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padesym"))
        .args(args)
        .env_remove("PADESYM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_csv(out: &Output) -> CsvSeries {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    CsvSeries::parse(&String::from_utf8(out.stdout.clone()).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn list_shows_builtins() {
    let out = padesym(&["--list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["kubo-(1,1)", "kubo-(4,4)", "oscillator-integral", "oscillator-left-rectangle-moment"] {
        assert!(text.lines().any(|l| l.split('\t').next() == Some(name)), "{name} missing");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), "empty.toml", "builtin = \"kubo-(1,1)\"\ngrid = []\n");
    let out = padesym(&["convergence", "--config", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));

    let out = padesym(&["convergence", "--builtin", "no-such-experiment"]);
    assert_eq!(out.status.code(), Some(2));

    let unknown = write_config(dir.path(), "unknown.toml", "builtin = \"kubo-(1,1)\"\nstep = 0.1\n");
    assert_eq!(padesym(&["convergence", "--config", &unknown]).status.code(), Some(2));
}

#[test]
fn singular_denominator_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // I - hA⁰/2 is singular for this drift at h = 0.05.
    let path = write_config(
        dir.path(),
        "singular.toml",
        r#"
grid = [0.05]
t_end = 1.0
[system]
kind = "linear"
generators = [[[-40.0, 0.0], [0.0, 40.0]], [[0.0, 0.0], [0.0, 0.0]]]
initial = [1.0, 1.0]
[scheme]
kind = "pade"
order = [1, 1]
"#,
    );
    let out = padesym(&["trajectory", "--config", &path]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_check_exits_4() {
    // One tiny Euler step cannot drift past the threshold.
    let out = padesym(&["invariants", "--builtin", "kubo-euler-maruyama", "--h", "0.0001", "--t-end", "0.0001", "--check"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn passing_check_exits_0() {
    let out = padesym(&["invariants", "--builtin", "kubo-hamiltonian-(1,1)", "--t-end", "2", "--check"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));
}

#[test]
fn seed_from_environment() {
    let args = ["trajectory", "--builtin", "kubo-hamiltonian-(2,2)", "--t-end", "1"];
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_padesym"));
        cmd.args(args).env_remove("PADESYM_SEED");
        if let Some(s) = seed {
            cmd.env("PADESYM_SEED", s);
        }
        cmd.output().unwrap().stdout
    };
    let from_env = run(Some("9"));
    let mut flagged = args.to_vec();
    flagged.extend(["--seed", "9"]);
    assert_eq!(from_env, padesym(&flagged).stdout);
    assert_ne!(from_env, run(Some("10")));
    assert!(String::from_utf8(from_env).unwrap().contains("# seed: 9"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("run{i}.csv"));
            let out = padesym(&[
                "convergence",
                "--builtin",
                "kubo-(1,1)",
                "--paths",
                "50",
                "--deterministic-reduce",
                "--out",
                path.to_str().unwrap(),
            ]);
            assert!(out.status.success());
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    let csv = CsvSeries::parse(std::str::from_utf8(&outputs[0]).unwrap()).unwrap();
    assert_eq!(csv.header, ["h", "rms_error", "stderr"]);
    assert_eq!(csv.rows.len(), 5);
    assert!(csv.footer_value("slope").unwrap().parse::<f64>().is_ok());
    assert_eq!(csv.render().as_bytes(), &outputs[0][..]);
}

#[test]
fn noiseless_kubo_follows_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "calm.toml",
        r#"
grid = [0.01]
t_end = 2.0
[system]
kind = "kubo"
sigma = 0.0
[scheme]
kind = "pade"
order = [2, 2]
"#,
    );
    let csv = stdout_csv(&padesym(&["trajectory", "--config", &path]));
    assert_eq!(csv.rows.len(), 201);
    for row in &csv.rows {
        let t = row[0];
        // dp = -q dt, dq = p dt from (1, 0).
        assert!((row[1] - t.cos()).abs() < 1e-6 && (row[2] - t.sin()).abs() < 1e-6, "t={t}");
    }
}

#[test]
fn midpoint_kubo_stays_on_circle() {
    let out = padesym(&["trajectory", "--builtin", "kubo-hamiltonian-(1,1)", "--hamiltonian", "--defect"]);
    let csv = stdout_csv(&out);
    assert_eq!(csv.header, ["t", "p", "q", "H", "defect"]);
    assert_eq!(*csv.column("t").unwrap().last().unwrap(), 100.0);
    for row in &csv.rows {
        assert!(((row[1] * row[1] + row[2] * row[2]).sqrt() - 1.0).abs() < 1e-4);
    }
}

#[test]
fn moment_growth_output_shape() {
    let out = padesym(&["moment-growth", "--builtin", "oscillator-integral-moment", "--t-end", "5", "--paths", "20"]);
    let csv = stdout_csv(&out);
    assert_eq!(csv.header, ["t", "second_moment"]);
    assert_eq!(csv.rows.len(), 51);
    assert!(csv.footer_value("slope").is_some());
    assert_eq!(csv.footer_value("paths"), Some("20"));
}

#[test]
fn invariants_columns() {
    let csv = stdout_csv(&padesym(&["invariants", "--builtin", "kubo-(1,2)", "--t-end", "1"]));
    assert_eq!(csv.header, ["t", "H", "defect"]);
    assert_eq!(csv.rows[0][2], 0.0);
    assert!(csv.footer_value("max_defect").unwrap().parse::<f64>().unwrap() > 1e-6);
}
