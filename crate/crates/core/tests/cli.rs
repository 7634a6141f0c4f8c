use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bdlab::io::sha256_file;

fn bdlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bdlab"));
    c.env_remove("BDLAB_OUTPUT_ROOT").env("RUST_LOG", "warn");
    c
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const KINETIC: &str = r#"
kind = "kinetic"
output_dir = "kin"

[domain]
dim = 1
edge = 20.0
points = 32

[params]
m = 1.0
a_plus = { shape = "gaussian", mass = 3.0, sigma = 1.0 }
a_minus = { shape = "gaussian", mass = 2.0, sigma = 1.0 }

[initial]
profile = "sine"
mean = 0.5
amplitude = 0.3

[run]
t_end = 1.0
dt = 0.01
output_every = 10
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_configs_validate() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let o = bdlab().arg("validate").arg(&p).output().unwrap();
            assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
            n += 1;
        }
    }
    assert!(n >= 6);
}

#[test]
fn negative_mortality_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &KINETIC.replace("m = 1.0", "m = -0.5"),
    );
    for sub in ["validate", "run"] {
        let o = bdlab()
            .arg(sub)
            .arg(&cfg)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("params.m"), "{}", stderr(&o));
    }
    assert!(!dir.path().join("kin").exists());
}

#[test]
fn unknown_key_names_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &KINETIC.replace("dt = 0.01", "dt = 0.01\nsteps = 3"),
    );
    let o = bdlab().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run"), "{}", stderr(&o));
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));
}

#[test]
fn run_writes_hashed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.toml", KINETIC);
    let out = dir.path().join("explicit");
    let o = bdlab()
        .arg("run")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));

    let manifest = json(&out.join("manifest.json"));
    let summary = json(&out.join("summary.json"));
    assert_eq!(manifest["config_hash"], summary["config_hash"]);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    let files = manifest["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(
        names.contains(&"trajectory.csv")
            && names.contains(&"summary.json")
            && names.contains(&"config.toml")
    );
    for f in files {
        let p = out.join(f["path"].as_str().unwrap());
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_file(&p).unwrap());
    }
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x_index,rho"));
    assert_eq!(lines.count(), 11 * 32);

    // The echoed config reproduces the same hash.
    let o = bdlab()
        .arg("run")
        .arg(out.join("config.toml"))
        .arg("--output-dir")
        .arg(dir.path().join("again"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        json(&dir.path().join("again/manifest.json"))["config_hash"],
        manifest["config_hash"]
    );
    assert_eq!(
        std::fs::read(out.join("trajectory.csv")).unwrap(),
        std::fs::read(dir.path().join("again/trajectory.csv")).unwrap()
    );
}

#[test]
fn output_root_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.toml", KINETIC);
    let root = dir.path().join("root");
    let o = bdlab()
        .arg("run")
        .arg(&cfg)
        .args(["--seed-override", "42", "--threads", "2"])
        .env("BDLAB_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = json(&root.join("kin/manifest.json"));
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["threads"], 2);
}

#[test]
fn certify_reports_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert");
    let text = std::fs::read_to_string(configs_dir().join("certify.toml")).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &text.replace("t_end = 20.0", "t_end = 2.0"),
    );
    let o = bdlab()
        .arg("run")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let certs = json(&out.join("certificates.json"));
    let certs = certs.as_array().unwrap();
    let by_name = |n: &str| certs.iter().find(|c| c["theorem"] == n).unwrap();
    assert_eq!(by_name("350tm")["verdict"], "hypotheses-hold");
    assert_eq!(by_name("350tm")["conclusion"]["status"], "verified");
    assert_eq!(by_name("K2tm")["conclusion"]["status"], "skipped");
    let traj = &by_name("350tm")["trajectory"];
    assert_eq!(
        traj["sha256"].as_str().unwrap(),
        sha256_file(&out.join("trajectory.csv")).unwrap()
    );
}
