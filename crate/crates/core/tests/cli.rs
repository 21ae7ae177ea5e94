//! End-to-end runs of the `neckpinch` binary.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use neckpinch::io::{config_pairs, parse_config, RunManifest, Table};
use tempfile::TempDir;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neckpinch"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn evolve_round_geometry_rounds() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &["evolve", "--lambda", "0.2", "--n-points", "102"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let m = RunManifest::read(&dir.path().join("manifest")).unwrap();
    assert_eq!(m.get("outcome"), Some("subcritical"));
    let round_tol: f64 = m.get("round-tol").unwrap().parse().unwrap();

    let ts = Table::read(&dir.path().join("timeseries.csv")).unwrap();
    let r_s2 = ts.numbers("max_R_s2").unwrap();
    let r_perp = ts.numbers("max_R_perp").unwrap();
    let r_hat = ts.numbers("r_hat").unwrap();
    let last = r_s2.len() - 1;
    assert!((r_s2[last] - r_perp[last]).abs() <= round_tol * r_hat[last].abs());

    // every listed file exists
    for name in m.get("files").unwrap().split(',') {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
}

#[test]
fn invalid_lambda_is_reported() {
    let dir = TempDir::new().unwrap();
    let o = run(&["evolve", "--lambda", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda"), "{}", stderr(&o));
    assert!(!dir.path().join("manifest").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "lambda = 0.2\nlamda = 0.3\n").unwrap();
    let o = run(
        &["evolve", "--config", cfg.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lamda"), "{}", stderr(&o));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# short run\nlambda = 0.3\nn-points = 42\nt-max = 0.01\nsnapshot-every = 7\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(
        &[
            "evolve",
            "--config",
            cfg.to_str().unwrap(),
            "--lambda",
            "0.25",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let m = RunManifest::read(&out.join("manifest")).unwrap();
    assert_eq!(m.get("outcome"), Some("undecided"));
    let config = m.config().unwrap();
    assert_eq!(config.lambda, 0.25);
    assert_eq!(config.n_total, 42);
    assert_eq!(config.snapshot_every, 7);
}

#[test]
fn manifest_echoes_effective_config() {
    let dir = TempDir::new().unwrap();
    let args = [
        "evolve",
        "--lambda",
        "0.3",
        "--n-points",
        "62",
        "--t-max",
        "0.05",
        "--fixed-dt",
        "1e-4",
    ];
    let o = run(&args, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let flags: Vec<(String, String)> = args[1..]
        .chunks(2)
        .map(|kv| {
            (
                kv[0].trim_start_matches("--").to_string(),
                kv[1].to_string(),
            )
        })
        .collect();
    let expected = parse_config(None, &flags).unwrap();
    let m = RunManifest::read(&dir.path().join("manifest")).unwrap();
    assert_eq!(config_pairs(&m.config().unwrap()), config_pairs(&expected));
    assert_eq!(m.get("dt-policy"), Some("fixed"));
}

#[test]
fn zero_horizon_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &[
            "evolve",
            "--lambda",
            "0.2",
            "--n-points",
            "42",
            "--t-max",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert_eq!(
        text,
        "t,max_R_s2,argmax_psi_R_s2,max_R_perp,r_hat,volume,min_area\n"
    );
}

#[test]
fn identical_configs_give_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "evolve",
        "--lambda",
        "0.15",
        "--n-points",
        "82",
        "--profile-every",
        "5",
    ];
    let oa = run(&args, a.path());
    let ob = run(&args, b.path());
    assert_eq!(oa.status.code(), ob.status.code());

    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 3, "{names:?}");
    for name in names {
        let fa = fs::read(a.path().join(&name)).unwrap();
        let fb = fs::read(b.path().join(&name)).unwrap();
        assert!(fa == fb, "{name:?} differs");
    }
}

#[test]
fn initial_data_neck_at_equator() {
    let dir = TempDir::new().unwrap();
    let o = run(&["initial-data", "--lambda", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let prof = Table::read(&dir.path().join("profile_0.csv")).unwrap();
    let t = prof.numbers("t").unwrap();
    let psi = prof.numbers("psi").unwrap();
    let area = prof.numbers("area").unwrap();
    assert!(t.iter().all(|&t| t == 0.0));
    assert_eq!(psi.len(), 400);

    // the neck is the interior local minimum
    let neck = (1..psi.len() - 1)
        .filter(|&i| area[i] <= area[i - 1] && area[i] <= area[i + 1])
        .min_by(|&i, &j| area[i].total_cmp(&area[j]))
        .unwrap();
    assert!((psi[neck] - PI / 2.0).abs() < 0.01, "{}", psi[neck]);
    assert!((area[neck] - 4.0 * PI * 0.1).abs() < 1e-3, "{}", area[neck]);
}

#[test]
fn bisect_writes_log_and_bracket() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &["bisect", "--n-points", "62", "--width-tol", "0.02"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let m = RunManifest::read(&dir.path().join("manifest")).unwrap();
    assert_eq!(m.get("halted"), Some("no"));
    let lo: f64 = m.get("lambda-lo").unwrap().parse().unwrap();
    let hi: f64 = m.get("lambda-hi").unwrap().parse().unwrap();
    assert!(0.11 <= lo && lo < hi && hi <= 0.2 && hi - lo <= 0.02);

    let log = Table::read(&dir.path().join("bisect_log.csv")).unwrap();
    let iters = log.numbers("iter").unwrap();
    let evaluations: usize = m.get("evaluations").unwrap().parse().unwrap();
    assert_eq!(iters.len(), evaluations);
    // both ends were checked before the first midpoint
    let lambdas = log.numbers("lambda").unwrap();
    assert_eq!(&lambdas[..2], &[0.11, 0.2]);
}

#[test]
fn bisect_rejects_swapped_bracket() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &["bisect", "--lo", "0.2", "--hi", "0.11", "--n-points", "42"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}
