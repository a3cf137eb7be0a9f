use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn prefest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prefest"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

const TINY: &str = r#"{"family": "gaussian", "d": 1, "n_max": 100, "runs": 2, "checkpoints": "geometric:4",
  "base_seed": 5, "estimators": ["so", "sp", "dp", "any"]}"#;

#[test]
fn missing_config_exits_2_naming_the_path() {
    let o = prefest(&["simulate", "--config", "/no/such/config.json", "--out", "/tmp/unused.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/config.json"));
}

#[test]
fn invalid_config_and_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"family": "gaussian", "n_max": 5, "runs": 1, "estimators": ["so"]}"#).unwrap();
    let out = dir.path().join("r.csv");
    let o = prefest(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_max"));
    assert_eq!(prefest(&["matrices", "--family", "gaussian", "--bogus"]).status.code(), Some(2));
    assert_eq!(prefest(&["divergences", "--family", "gaussian", "--b", "2", "--theta1", "0", "--theta2", "1"]).status.code(), Some(2));
    assert_eq!(prefest(&["nonsense"]).status.code(), Some(2));
    let help = prefest(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("Exit codes"));
}

#[test]
fn tiny_simulation_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    fs::write(&cfg, TINY).unwrap();
    let out = dir.path().join("r.csv");
    let o = prefest(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = body(&out).lines().count() - 1;
    let summary = fs::read_to_string(dir.path().join("r.csv.summary.csv")).unwrap();
    let groups = summary.lines().count() - 1;
    assert_eq!(rows, 2 * 4 * 4);
    assert_eq!(groups, 4 * 4);
    assert!(summary.starts_with("estimator,n,mean,median,q10,q90,failures"));
    assert!(fs::read_to_string(&out).unwrap().contains("# config: "));
}

#[test]
fn output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    fs::write(&cfg, TINY.replace("\"runs\": 2", "\"runs\": 9")).unwrap();
    let mut files = Vec::new();
    for jobs in ["1", "8", "1"] {
        let out = dir.path().join(format!("r{}.csv", files.len()));
        let o = prefest(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert_eq!(o.status.code(), Some(0));
        files.push(fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    fs::write(&cfg, TINY).unwrap();
    let out = dir.path().join("missing_dir").join("r.csv");
    let o = prefest(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

fn write_table(path: &Path, f: impl Fn(&str, usize) -> f64, estimators: &[&str]) {
    let ns = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000];
    let mut s = String::from("# synthetic\nrun_id,n,estimator,error,wall_seconds\n");
    for run in 0..3 {
        for &n in &ns {
            for e in estimators {
                s.push_str(&format!("{run},{n},{e},{},0\n", f(e, n)));
            }
        }
    }
    fs::write(path, s).unwrap();
}

#[test]
fn rates_on_synthetic_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    write_table(&p, |e, n| if e == "fast" { 2.0 / n as f64 } else { 1.0 / (n as f64).sqrt() }, &["fast", "slow"]);
    let o = prefest(&["rates", "--in", p.to_str().unwrap(), "--estimator", "fast"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "estimator,slope\nfast,-1.000000\n");
    let o = prefest(&["rates", "--in", p.to_str().unwrap(), "--estimator", "all"]);
    assert_eq!(stdout(&o), "estimator,slope\nfast,-1.000000\nslow,-0.500000\n");
    let o = prefest(&["rates", "--in", p.to_str().unwrap(), "--estimator", "absent"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "run_id,n,estimator,error,wall_seconds\n0,10,x,oops,0\n").unwrap();
    assert_eq!(prefest(&["rates", "--in", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn analysis_subcommands_are_seeded() {
    let args = ["matrices", "--family", "gaussian", "--d", "2", "--samples", "20000", "--seed", "7"];
    let a = prefest(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&prefest(&args)));
    assert_eq!(stdout(&a).lines().count(), 1 + 3 * 4);
    let other = prefest(&["matrices", "--family", "gaussian", "--d", "2", "--samples", "20000", "--seed", "8"]);
    assert_ne!(stdout(&a), stdout(&other));

    let d = prefest(&["divergences", "--family", "laplace", "--b", "2", "--theta1", "0.5", "--theta2", "0.5"]);
    for line in stdout(&d).lines().skip(1) {
        assert_eq!(line.split(',').nth(1), Some("0"), "{line}");
    }

    let neg = prefest(&["divergences", "--family", "rayleigh", "--theta1", "-0.5", "--theta2", "-0.8"]);
    assert!(!stderr(&neg).contains("unexpected argument"), "{}", stderr(&neg));
    let neg = prefest(&["divergences", "--family", "laplace", "--theta1", "-0.5", "--theta2", "0.8"]);
    assert_eq!(neg.status.code(), Some(0));

    let c = prefest(&["check-assumptions", "--family", "laplace", "--samples", "200000", "--seed", "1"]);
    let row = stdout(&c).lines().nth(1).unwrap().to_string();
    let p: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((p - 0.25).abs() < 0.005, "{p}");
}

#[test]
fn estimate_reads_a_triplet_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, "i,x,y,z\n0,1.0,3.0,1\n1,-2.0,0.0,-1\n2,0.2,0.4,-1\n").unwrap();
    let o = prefest(&[
        "estimate", "--family", "gaussian", "--data", data.to_str().unwrap(), "--estimator", "so,dp,ce,wc",
        "--theta-star", "0.6",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "estimator,theta1,error,iterations,feasible");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("so,"));
    assert!(lines[2].ends_with(",true"));
}
