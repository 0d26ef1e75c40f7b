use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bmdr_cli::{EXIT_CONFIG, EXIT_OK};

fn bmdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmdr")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two QPSK UEs on the shipped tables, few slots.
fn small_config(dir: &Path) -> PathBuf {
    let cfg = dir.join("small.toml");
    let tables = configs().join("tables");
    let mcs = configs().join("qpsk_mcs.csv");
    fs::write(
        &cfg,
        format!(
            "seed = 2\ndrops = 2\nslots = 20\ncodewords_per_slot = 2\nn_r = 4\nepsilon = 0.01\n\
             mcs_table = {mcs:?}\ntables_dir = {tables:?}\nues = [{{ n_t = 1, count = 2 }}]\n\
             detectors = [{{ name = \"lmmse\" }}, {{ name = \"kbest4\" }}]\n\
             schemes = [\"lmmse-bmdr\", \"lmmse-eesm\", \"kbest4-bmdr\", \"hybrid\"]\n[power]\nsnr_db = 0.0\n"
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn missing_config_is_a_configuration_error() {
    let out = bmdr(&["simulate", "--config", "/no/such/scenario.toml"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/scenario.toml"));
}

#[test]
fn unknown_flag_prints_usage() {
    let out = bmdr(&["simulate", "--config", "x.toml", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(bmdr(&["--help"]).status.code(), Some(EXIT_OK));
}

#[test]
fn bad_values_are_configuration_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    for extra in [["--gamma", "1.5"], ["--detector", "mld"]] {
        let mut args = vec!["simulate", "--config", path(&cfg)];
        args.extend(extra);
        assert_eq!(bmdr(&args).status.code(), Some(EXIT_CONFIG), "{extra:?}");
    }
}

#[test]
fn build_table_writes_csv_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("awgn.toml");
    fs::write(
        &cfg,
        "slots = 1\nn_r = 1\nepsilon = 0.01\nues = [{ n_t = 1 }]\ndetectors = [{ name = \"lmmse\" }]\n\
         [table_build]\ninclude_mcs = false\nmax_codewords = 100\nmax_errors = 10\nmi_samples = 2000\n\
         extra = [{ m = 2, r = 0.5, n = 648 }]\n",
    )
    .unwrap();
    let out = tmp.path().join("tables");
    let o = bmdr(&["build-table", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("bmdr_m2_k324_n648.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("snr_db,bmdr,cer"));
    assert!(text.lines().count() > 5);
    assert!(out.join("manifest.toml").is_file());
}

#[test]
fn compare_writes_an_agreement_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("cmp");
    let o = bmdr(&["compare", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("compare_summary.csv")).unwrap();
    assert!(summary.starts_with("scheme,full_am_mbps"));
    assert_eq!(summary.lines().count(), 1 + 4);
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"compare\""));
    assert!(manifest.contains("seed = 2"));
}

#[test]
fn simulate_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let mut outs = Vec::new();
    for w in ["1", "2"] {
        let out = tmp.path().join(format!("w{w}"));
        let o = bmdr(&["simulate", "--config", path(&cfg), "--out", path(&out), "--workers", w, "--seed", "9"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(out);
    }
    for f in ["summary.csv", "ue_metrics.csv", "la_trace.csv", "confusion.csv", "cer_percentiles.csv"] {
        assert_eq!(fs::read(outs[0].join(f)).unwrap(), fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn detector_and_gamma_flags_shape_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("lmmse");
    let o = bmdr(&["abstract", "--config", path(&cfg), "--out", path(&out), "--detector", "lmmse"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.contains("lmmse-bmdr"));
    assert!(!summary.contains("kbest4"));
    assert!(out.join("abstraction.csv").is_file());

    let out = tmp.path().join("gamma");
    let o = bmdr(&["la-trace", "--config", path(&cfg), "--out", path(&out), "--gamma", "0.0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // with all weight on complexity the cheapest detector is always selected
    let trace = fs::read_to_string(out.join("la_trace.csv")).unwrap();
    let selected: Vec<&str> = trace
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(3) == Some("1"))
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert!(!selected.is_empty());
    assert!(selected.iter().all(|&s| s == "lmmse-bmdr"));
}

#[test]
fn mi_curves_are_written() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bmdr(&["mi-curves", "--out", path(tmp.path())]);
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("mi_curves.csv")).unwrap();
    assert!(text.lines().count() > 700);
}
