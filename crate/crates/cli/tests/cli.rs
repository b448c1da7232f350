use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn blockband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockband")).args(args).output().unwrap()
}

fn with_out(args: &[&str], out: &Path) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let dir = out.to_str().unwrap();
    all.extend(["--out-dir", dir]);
    blockband(&all)
}

#[test]
fn divisibility_violation_exits_one_with_message() {
    let out = blockband(&["esd", "--n", "1000", "--bandwidth", "300"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not divide"));
}

#[test]
fn too_few_blocks_and_bad_flags_exit_one() {
    assert_eq!(blockband(&["lsv", "--n", "20", "--bandwidth", "10"]).status.code(), Some(1));
    assert_eq!(blockband(&["esd", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(blockband(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(blockband(&["esd", "--atom", "cauchy"]).status.code(), Some(1));
    assert_eq!(blockband(&["stieltjes-rate", "--zeta-im", "1.5"]).status.code(), Some(1));
    assert_eq!(blockband(&["--help"]).status.code(), Some(0));
}

#[test]
fn esd_writes_declared_csv_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_out(&["esd", "--n", "120", "--bandwidth", "12", "--trials", "2", "--seed", "9"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);
    let eig = fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    let mut lines = eig.lines();
    assert!(lines.next().unwrap().starts_with("# run_config: "));
    assert_eq!(lines.next(), Some("trial,re,im"));
    assert_eq!(lines.count(), 240);
    let disc = fs::read_to_string(dir.path().join("discrepancy.csv")).unwrap();
    assert_eq!(disc.lines().nth(1), Some("trial,radial_sup,angular_sup"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["run_config"]["seed"], 9);
    assert_eq!(summary["run_config"]["bandwidth"], 12);
    assert_eq!(summary["report"]["master_seed"], 9);
}

#[test]
fn plotdata_is_whitespace_delimited_with_comment_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_out(&["esd", "--n", "60", "--bandwidth", "6", "--format", "plotdata"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("eigenvalues.dat")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).collect();
    assert_eq!(data.len(), 60);
    assert!(data.iter().all(|l| l.split_whitespace().map(|t| t.parse::<f64>().unwrap()).count() == 2));
}

#[test]
fn json_format_embeds_data_in_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_out(&["esd", "--n", "60", "--bandwidth", "6", "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["eigenvalues"][0].as_array().unwrap().len(), 60);
    assert!(!dir.path().join("eigenvalues.csv").exists());
}

#[test]
fn config_file_is_overridden_by_flags_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n = 90\nbandwidth = 9\ntrials = 4\natom = gaussian-real\nseed = 3\n").unwrap();
    let out = with_out(&["lsv", "--config", cfg.to_str().unwrap(), "--trials", "6"], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/lsv.csv")).unwrap();
    let first = csv.lines().next().unwrap();
    assert!(first.contains("\"n\":90") && first.contains("\"trials\":6") && first.contains("\"atom\":\"gaussian-real\""));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 7);
}

#[test]
fn other_subcommands_produce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["stieltjes-rate", "--n", "120", "--bandwidth", "10", "--trials", "4"], "stieltjes.csv"),
        (&["girko-compare", "--n", "60", "--bandwidth", "6"], "girko.csv"),
        (&["density", "--n", "50", "--z-re", "0.5"], "density.csv"),
        (&["verify-lemmas", "--trials", "200", "--seed", "3"], "lemmas.json"),
    ];
    for (i, (args, file)) in cases.iter().enumerate() {
        let out_dir = dir.path().join(i.to_string());
        let out = with_out(args, &out_dir);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join(file).exists(), "{file}");
    }
    let st = fs::read_to_string(dir.path().join("0/stieltjes.csv")).unwrap();
    assert_eq!(st.lines().nth(1), Some("zeta_re,zeta_im,m_emp_re,m_emp_im,m_lim_re,m_lim_im,abs_diff"));
    let lemmas: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("3/lemmas.json")).unwrap()).unwrap();
    assert!(lemmas["results"].as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn girko_compare_honours_an_explicit_shift() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_out(&["girko-compare", "--n", "60", "--bandwidth", "6", "--z-re", "0.5", "--z-im", "-0.5", "--trials", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("girko.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.contains(",0.5,-0.5,")));
}
