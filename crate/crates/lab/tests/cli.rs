use std::process::Command;

use serde_json::Value;

fn abslit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abslit"))
}

fn trailer(stderr: &[u8]) -> Value {
    let text = String::from_utf8_lossy(stderr);
    serde_json::from_str(text.lines().last().expect("stderr has a trailer")).unwrap()
}

#[test]
fn spectrum_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = abslit().args(["spectrum", "--k", "3", "--h", "0.1", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(trailer(&out.stderr)["status"], "ok");
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,lambda"));
    assert_eq!(csv.lines().count(), 4);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["artifacts"][0]["file"], "spectrum.csv");
    assert_eq!(manifest["config"]["command"]["name"], "spectrum");
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        abslit().args(["--domain", "rectangle", "--width", "0", "spectrum", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let t = trailer(&out.stderr);
    assert_eq!(t["status"], "error");
    assert_eq!(t["exit_code"], 2);
    assert_eq!(t["kind"], "validation");

    let out = abslit().args(["sweep", "--a0", "1,0", "--d", "0.1,0.2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = abslit().args(["spectrum", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_files_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 7, "domain": {"kind": "disk"}, "command": {"name": "spectrum", "h": 0.1, "k": 3}}"#,
    )
    .unwrap();
    let out = abslit().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(trailer(&out.stderr)["message"].as_str().unwrap().contains("schema_version"));

    let out = abslit().arg("run").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(trailer(&out.stderr)["kind"], "io");
}

#[test]
fn print_config_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = abslit()
        .args(["--print-config", "oracle", "--eps-grid", "1e-2,1e-3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let path = dir.path().join("config.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let out = abslit().arg("run").arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("eps,xi_eps,c1,c2,grad_energy,mass_rho,E_leading"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn fit_reads_a_csv_column() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    let mut text = String::from("d,y\n");
    for d in [0.2f64, 0.1, 0.05, 0.025, 0.0125] {
        let l = d.ln().abs();
        text.push_str(&format!("{d},{}\n", 2.0 / l - 0.5 / (l * l)));
    }
    std::fs::write(&input, text).unwrap();
    let out =
        abslit().args(["fit", "--column", "y", "--input"]).arg(&input).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert!((fit["c1"].as_f64().unwrap() - 2.0).abs() < 1e-9, "{fit}");
    assert!((fit["c2"].as_f64().unwrap() + 0.5).abs() < 1e-8);
}
