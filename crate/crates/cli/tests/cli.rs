use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dicke_qfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke-qfi")).args(args).output().expect("spawn dicke-qfi")
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

const SMALL: [&str; 12] =
    ["--probe", "dicke-1", "--kappa", "0.2", "--gamma", "0.6", "--n", "2,3", "--t-max", "4", "--points", "21"];

fn time_scan(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["time-scan", "-q", "--out", out.to_str().unwrap()];
    args.extend(SMALL);
    args.extend(extra);
    dicke_qfi(&args)
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases: [&[&str]; 6] = [
        &["time-scan", "--bogus"],
        &["time-scan", "--out", out, "--probe", "dicke-1", "--kappa", "0.1", "--gamma", "0.1", "--n", ""],
        &["time-scan", "--out", out, "--probe", "dicke-1", "--kappa", "0.1", "--gamma", "0.1", "--n", "4:x"],
        &["time-scan", "--out", out, "--probe", "tophat", "--kappa", "0.1", "--gamma", "0.1", "--n", "4"],
        &["time-scan", "--out", out, "--probe", "dicke-1", "--kappa", "-1", "--gamma", "0.1", "--n", "4"],
        &["exponent-map", "--out", out, "--probe", "ghz", "--kappa-grid", "0.1", "--gamma-grid", "0.1", "--n-list", "4,8"],
    ];
    for args in cases {
        let o = dicke_qfi(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn help_exits_0() {
    assert_eq!(dicke_qfi(&["--help"]).status.code(), Some(0));
}

#[test]
fn time_scan_writes_series_peaks_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = time_scan(dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = csv_files(dir.path());
    let series = String::from_utf8(files["time_dicke-1_k0.2_g0.6_N3.csv"].clone()).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("gt,F,F_g2,F_over_t"));
    assert_eq!(lines.count(), 21);
    assert!(files.contains_key("time_dicke-1_k0.2_g0.6_N2.csv"));
    assert!(files.contains_key("peaks_dicke-1_k0.2_g0.6.csv"));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("manifest_time-scan.json")).unwrap()).unwrap();
    assert_eq!(manifest["failures"], 0);
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(time_scan(a.path(), &["--workers", "1"]).status.success());
    assert!(time_scan(b.path(), &["--workers", "3"]).status.success());
    assert_eq!(csv_files(a.path()), csv_files(b.path()));
}

#[test]
fn warm_cache_reproduces_cold_output() {
    let cache = tempfile::tempdir().unwrap();
    let (cold, warm, off) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let c = cache.path().to_str().unwrap();
    assert!(time_scan(cold.path(), &["--cache", c]).status.success());
    assert_eq!(fs::read_dir(cache.path()).unwrap().count(), 2);
    assert!(time_scan(warm.path(), &["--cache", c]).status.success());
    assert!(time_scan(off.path(), &[]).status.success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(warm.path().join("manifest_time-scan.json")).unwrap()).unwrap();
    assert!(manifest["cells"].as_array().unwrap().iter().all(|c| c["cache"] == "hit"));
    assert_eq!(csv_files(cold.path()), csv_files(warm.path()));
    assert_eq!(csv_files(cold.path()), csv_files(off.path()));
}

#[test]
fn config_file_supplies_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[grid]\nt_max = 4.0\npoints = 21\n\n[time_scan]\nprobe = \"dicke-1\"\nkappa = 0.2\ngamma = 0.6\nn = [2, 3]\n",
    )
    .unwrap();
    let from_file = dir.path().join("a");
    let o = dicke_qfi(&["time-scan", "-q", "--config", cfg.to_str().unwrap(), "--out", from_file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let from_flags = dir.path().join("b");
    fs::create_dir(&from_flags).unwrap();
    assert!(time_scan(&from_flags, &[]).status.success());
    assert_eq!(csv_files(&from_file), csv_files(&from_flags));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[grid]\nt_mx = 4.0\n").unwrap();
    let o = dicke_qfi(&["time-scan", "--config", cfg.to_str().unwrap(), "--probe", "ghz", "--kappa", "0", "--gamma", "0", "--n", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dicke_scan_reports_argmax_per_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = dicke_qfi(&[
        "dicke-scan", "-q", "--out", out, "--n", "4", "--gamma", "0.2", "--kappa", "0.1,1", "--t-max", "6", "--points", "31",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = csv_files(dir.path());
    let argmax = String::from_utf8(files["dicke_argmax_N4_g0.2.csv"].clone()).unwrap();
    let rows: Vec<&str> = argmax.lines().collect();
    assert_eq!(rows[0], "kappa,n_star,peak_F");
    assert_eq!(rows.len(), 3);
    let table = String::from_utf8(files["dicke_N4_g0.2.csv"].clone()).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 4);
}
