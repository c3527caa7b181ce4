use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kslab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_dir(o: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8(o.stdout.clone()).unwrap().trim())
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn no_equilibrium_is_a_computational_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kslab(&["equilibria", "--lambda", "0.5"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("equilibri"));
    // the failed run leaves nothing behind
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn borderline_dimension_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kslab(&["morse", "--dimension", "10", "--lambda", "0.1"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = kslab(&["equilibria", "--dimension", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = kslab(&["no-such-command"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn equilibria_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kslab(&["equilibria", "--lambda", "0.1"], tmp.path());
    assert!(o.status.success());
    let dir = run_dir(&o);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("equilibria.json")).unwrap()).unwrap();
    assert!((json["u_upper"].as_f64().unwrap() - 3.5771520639572971).abs() < 1e-14);
    let csv = fs::read_to_string(dir.join("thresholds.csv")).unwrap();
    assert!(csv.starts_with("N,lambda_star,"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = kslab(&["singular", "--lambda", "0.1"], tmp.path());
    assert!(a.status.success());
    let da = run_dir(&a);
    let first = read_dir_sorted(&da);
    fs::remove_dir_all(&da).unwrap();
    let b = kslab(&["singular", "--lambda", "0.1"], tmp.path());
    assert_eq!(run_dir(&b), da);
    assert_eq!(read_dir_sorted(&da), first);

    // every CSV field has 17 significant digits and round-trips
    let mut rdr = csv::Reader::from_path(da.join("profile.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["r", "u", "u_prime"]);
    for rec in rdr.records().take(200) {
        for field in rec.unwrap().iter() {
            let x: f64 = field.parse().unwrap();
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
            assert_eq!(format!("{x:.16e}"), field);
        }
    }
}

#[test]
fn config_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "dimension = 3\nlambda = 0.2\n[grid]\nrho_max = 50.0\n").unwrap();
    let o = kslab(&["emden", "--config", cfg.to_str().unwrap(), "--lambda", "1.0"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written = fs::read_to_string(run_dir(&o).join("config.toml")).unwrap();
    let back = kslab::config::parse_config(&written).unwrap();
    assert_eq!(back.lambda, Some(1.0));
    assert_eq!(back.grid.rho_max, Some(50.0));

    fs::write(&cfg, "dimension = 3\nlamda = 0.2\n").unwrap();
    let o = kslab(&["equilibria", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn branch_run_writes_trace_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kslab(&["branch", "--dimension", "3", "--radius", "1"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = run_dir(&o);
    let trace = fs::read_to_string(dir.join("branch.csv")).unwrap();
    assert!(trace.starts_with("gamma,lambda,index_i,residual\n"));
    assert!(trace.lines().count() > 40);
    assert!(dir.join("mu_plane.csv").exists());
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("oscillation.json")).unwrap()).unwrap();
    assert!(summary["oscillation"]["sign_changes"].as_u64().unwrap() >= 2);
}
