use std::process::Command;

use factstory_testkit::{fixture, golden_story_path, workspace_root};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_factstory"));
    c.current_dir(workspace_root()).env("RUST_LOG", "warn");
    c
}

#[test]
fn generate_matches_the_golden_story() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = out_dir.path().join("story.json");
    let debug = out_dir.path().join("debug");
    let status = bin()
        .args(["generate", "--mode", "mock", "--corpus", "fixtures/homeschooling", "--seed", "42", "--out"])
        .arg(&out)
        .arg("--debug-dir")
        .arg(&debug)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(golden_story_path()).unwrap());
    for stage in ["01_articles.json", "02_extraction.json", "03_organization.json", "04_units.json"] {
        let text = std::fs::read_to_string(debug.join(stage)).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap();
    }
}

#[test]
fn generate_to_stdout_and_failures() {
    let out = bin()
        .args(["generate", "--mode", "mock", "--corpus"])
        .arg(fixture("homeschooling"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(out.stdout, std::fs::read(golden_story_path()).unwrap());

    let out = bin()
        .args(["generate", "--mode", "mock", "--query", "homeschooling statistics", "--fixture-dir", "fixtures/web-offline"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("AllFetchesFailed"));

    let out = bin().args(["generate", "--mode", "mock", "--query", ""]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn validate_reports_violation_count() {
    let out = bin().arg("validate").arg(golden_story_path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: "));

    let mut doc: serde_json::Value = serde_json::from_slice(&std::fs::read(golden_story_path()).unwrap()).unwrap();
    doc["stats"]["total_facts"] = serde_json::json!(9999);
    doc["clusters"][0]["relevance"] = serde_json::json!("not a number");
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let out = bin().arg("validate").arg(&broken).output().unwrap();
    let lines = String::from_utf8_lossy(&out.stdout).lines().count();
    assert!(lines >= 1);
    assert_eq!(out.status.code(), Some(lines as i32));

    doc["clusters"][0]["relevance"] = serde_json::json!("0.5");
    std::fs::write(&broken, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let out = bin().arg("validate").arg(&broken).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(stdout.contains("total_facts"), "{stdout}");
    assert_eq!(out.status.code(), Some(stdout.lines().count() as i32));

    let out = bin().arg("validate").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(125));
    std::fs::write(&broken, "{").unwrap();
    assert_eq!(bin().arg("validate").arg(&broken).output().unwrap().status.code(), Some(125));
}
