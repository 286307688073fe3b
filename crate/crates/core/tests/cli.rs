use std::process::Command;

fn kw(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kw")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn exit_codes() {
    let (code, out) = kw(&["spectrum", "--pair", "torus:2:1", "--lambda-max", "3"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"m_modes\""));

    assert_eq!(kw(&["spectrum", "--pair", "torus:2:3", "--lambda-max", "3"]).0, 1);
    assert_eq!(kw(&["spectrum", "--lambda-max", "3"]).0, 1);
    assert_eq!(kw(&["spectrum", "--pair", "torus:4:1", "--lambda-max", "1e5"]).0, 3);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/c06-subcritical-ratio.toml")).unwrap();
    let text = text.replace("tolerance = 0.15", "tolerance = 1e-9");
    let text = format!(
        "output_dir = {:?}\ncache_dir = {:?}\n{text}",
        dir.path().join("out"),
        dir.path().join("cache")
    );
    std::fs::write(&cfg, text).unwrap();
    let (code, out) = kw(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("FAIL"));

    std::fs::write(&cfg, "name = \"x\"\n[experiment]\nkind = \"growth\"\nc = [2.0]\n").unwrap();
    assert_eq!(kw(&["run", cfg.to_str().unwrap()]).0, 1);
}

#[test]
fn fit_reads_sums_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, csv) = kw(&[
        "sums", "--pair", "torus:2:1", "--test", "fejer:a=1", "--grid", "dyadic:20:80:4", "--cache-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let path = dir.path().join("sums.csv");
    std::fs::write(&path, csv).unwrap();
    let (code, json) = kw(&["fit", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let p = v["exponent"].as_f64().unwrap();
    assert!((p - 1.5).abs() < 0.2, "{p}");
}
