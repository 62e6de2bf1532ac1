use bukhgeim::forward::assemble_dn;
use bukhgeim::io::write_dn;
use bukhgeim::potentials::Bump;
use bukhgeim::{make_grid, Domain, Potential};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bukhgeim"));
    c.env_remove("BUKHGEIM_OUT");
    c
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path, sub: &str) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join(format!("manifest_{sub}.json"))).unwrap()).unwrap()
}

fn dn_file(dir: &Path, name: &str, n: usize, amplitude: f64) -> std::path::PathBuf {
    let g = make_grid(1.5, n, Domain::unit_disk(), 1.0).unwrap();
    let q = Potential::from_field(Bump::standard().with_amplitude(amplitude).field(&g)).unwrap();
    let path = dir.join(name);
    write_dn(&path, &assemble_dn(&q).unwrap()).unwrap();
    path
}

#[test]
fn missing_config_is_an_operational_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["stability", "--config"]).arg(dir.path().join("nope.json")).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("error[BAD_CONFIG]"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"stability": {"slak": 3.0}}"#).unwrap();
    let o = bin().arg("stability").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("BAD_CONFIG"));
    let o = bin().args(["recon", "--tau", "4", "--tau-sweep", "1:2:2"]).output().unwrap();
    assert_eq!(code(&o), 1);
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);
}

#[test]
fn stability_run_writes_manifest_matching_config_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stability.json");
    let text = r#"{"seed": 7, "stability": {"epsilons": [0.1, 0.01, 0.001]}}"#;
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("run");
    let o = bin().arg("stability").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("PASS"));
    assert!(o.stdout.is_empty());
    let m = manifest(&out, "stability");
    let sha: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(m["config_sha256"], sha);
    assert_eq!(m["subcommand"], "stability");
    for p in m["outputs"].as_array().unwrap() {
        let p = Path::new(p.as_str().unwrap());
        assert!(p.starts_with(&out) && p.exists(), "{}", p.display());
    }
}

#[test]
fn tampered_tolerance_is_a_property_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tampered.json");
    std::fs::write(&cfg, r#"{"stability": {"slack": 1e-6}}"#).unwrap();
    let o = bin().arg("stability").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL"));
    assert!(dir.path().join("manifest_stability.json").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().arg("stability").current_dir(dir.path()).env("BUKHGEIM_OUT", dir.path().join("env")).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("env/manifest_stability.json").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn csv_bytes_do_not_depend_on_rerun_or_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, workers: &str| {
        let out = dir.path().join(sub);
        let o = bin().args(["stability", "--workers", workers, "--out"]).arg(&out).output().unwrap();
        assert_eq!(code(&o), 0);
        std::fs::read(out.join("stability.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "4"));
}

#[test]
fn print_config_emits_the_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["cgo", "--print-config", "--out"]).arg(dir.path().join("x")).output().unwrap();
    assert_eq!(code(&o), 0);
    let printed: bukhgeim::experiments::ExperimentConfig = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, Default::default());
    assert!(!dir.path().join("x").exists());
}

#[test]
fn tau_sweep_gives_log_spaced_values() {
    let dir = tempfile::tempdir().unwrap();
    let dn = dn_file(dir.path(), "q.dnmp", 32, 0.1);
    let dn0 = dn_file(dir.path(), "zero.dnmp", 32, 0.0);
    let out = dir.path().join("r");
    let o = bin().arg("recon").arg("--dn").arg(&dn).arg("--dn-ref").arg(&dn0).args(["--tau-sweep", "8:128:5", "--out"]).arg(&out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rd = csv::Reader::from_path(out.join("recon_sweep.csv")).unwrap();
    let col = rd.headers().unwrap().iter().position(|h| h == "tau").unwrap();
    let taus: Vec<f64> = rd.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    let expect = [8.0, 16.0, 32.0, 64.0, 128.0];
    assert_eq!(taus.len(), 5);
    assert!(taus.iter().zip(expect).all(|(a, b)| (a - b).abs() <= 1e-9 * b), "{taus:?}");
    assert!(out.join("recon_tau8.0000.bfld").exists() && out.join("recon_tau128.0000.svg").exists());
    let bad = bin().arg("recon").arg("--dn").arg(&dn).arg("--dn-ref").arg(&dn0).args(["--tau-sweep", "8:4:5", "--out"]).arg(&out).output().unwrap();
    assert_eq!(code(&bad), 1);
}

#[test]
fn dn_grid_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let a = dn_file(dir.path(), "a.dnmp", 32, 0.1);
    let b = dn_file(dir.path(), "b.dnmp", 64, 0.0);
    let o = bin().arg("recon").arg("--dn").arg(&a).arg("--dn-ref").arg(&b).args(["--tau", "4", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("error[GRID_MISMATCH]"), "{}", stderr(&o));
}

#[test]
fn writes_outside_the_output_directory_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for target in [dir.path().join("escape.dnmp"), out.join("../escape.dnmp")] {
        let o = bin().args(["forward", "--out"]).arg(&out).arg("--emit-dn").arg(&target).output().unwrap();
        assert_eq!(code(&o), 1);
        assert!(stderr(&o).contains("INVALID_PARAMETER"), "{}", stderr(&o));
    }
    assert!(!dir.path().join("escape.dnmp").exists());
}

#[test]
fn omitted_reference_means_zero_potential() {
    let dir = tempfile::tempdir().unwrap();
    let dn = dn_file(dir.path(), "q.dnmp", 32, 0.1);
    let dn0 = dn_file(dir.path(), "zero.dnmp", 32, 0.0);
    let run = |out: &str, with_ref: bool| {
        let mut c = bin();
        c.arg("recon").arg("--dn").arg(&dn);
        if with_ref {
            c.arg("--dn-ref").arg(&dn0);
        }
        let o = c.args(["--tau", "8", "--out"]).arg(dir.path().join(out)).output().unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read(dir.path().join(out).join("recon_tau8.0000.bfld")).unwrap()
    };
    assert_eq!(run("a", true), run("b", false));

    let missing = dir.path().join("missing.dnmp");
    let o = bin().arg("recon").arg("--dn").arg(&missing).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("error[IO]") && stderr(&o).contains("missing.dnmp"), "{}", stderr(&o));
}
