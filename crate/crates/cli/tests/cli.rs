use std::process::Command;

fn frw_dirac() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frw-dirac"))
}

#[test]
fn invalid_config_exits_one_with_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "tolerance = 1.0\n[[backgrounds]]\nname = \"m\"\nkind = \"massless\"\ndomain = [0.0, 2.0]\n[[families]]\nkind = \"identity\"\n[averaging]\nd = 2.0\nfamily = \"identity\"\n",
    )
    .unwrap();
    let out = frw_dirac().arg("--config").arg(&cfg).arg("--out").arg(dir.path()).arg("equivalence").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tolerance") && err.contains("averaging.d"), "{err}");
}

#[test]
fn equivalence_writes_enveloped_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = frw_dirac()
        .args(["--n-max", "300", "--out"])
        .arg(dir.path())
        .args(["equivalence", "--family", "identity", "--family", "swap"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("equivalence.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["payload"].as_array().unwrap().len(), 2);
    assert_eq!(v["config"]["modes"]["n_max"], 300);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 2);
}

#[test]
fn bound_demo_accepts_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = frw_dirac()
        .arg("--out")
        .arg(dir.path())
        .args(["bound-demo", "--d", "0.25", "--delta", "0.1", "--n0", "12"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("bound.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["averaging"]["n0"], 12);
    assert!(v["payload"]["verification"]["passed"].as_bool().unwrap());
}
