use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_consensus-nids"))
}

#[test]
fn simulate_writes_phase_and_summary_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["simulate", "--topology", "petersen", "--mitigation", "fault", "--attack", "additive"])
        .args(["--magnitude", "0.5", "--phases", "20", "--seed", "3", "--trace-phase", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let phases = std::fs::read_to_string(dir.path().join("phases.csv")).unwrap();
    assert_eq!(phases.lines().count(), 21);
    assert!(phases.starts_with("phase_id,ground_truth,decision,iterations,detection_iteration,removed_node,wall_time_us"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 3);
    assert_eq!(summary["metrics"]["phases"], 20);
    assert_eq!(summary["config"]["mitigation"], "fault");
    for trace in ["trajectory.csv", "residuals.csv"] {
        assert!(dir.path().join(trace).exists(), "{trace}");
    }
}

#[test]
fn config_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"topology": {"kind": "torus", "rows": 3, "cols": 3}, "mitigation": "outlier",
            "attack": {"form": "additive", "magnitude": 0.5}, "phases": 10, "seed": 9}"#,
    )
    .unwrap();
    let out = cli()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .args(["--format", "json", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("phases.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 10);
}

#[test]
fn bad_input_exits_with_one() {
    for args in [
        &["simulate", "--mitigation", "bogus"][..],
        &["simulate", "--phases", "0"],
        &["simulate", "--epsilon", "-1"],
        &["no-such-command"],
    ] {
        let status = cli().args(args).output().unwrap().status;
        assert_eq!(status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn runtime_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["simulate", "--phases", "2", "--data"])
        .arg(dir.path().join("missing.txt"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
}

#[test]
fn train_then_simulate_on_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.txt");
    let mut text = String::new();
    for k in 0..60 {
        let (proto, service, flag, label) = if k % 2 == 0 {
            ("tcp", "private", "S0", "neptune")
        } else {
            ("udp", "domain_u", "SF", "normal")
        };
        let mut fields: Vec<String> = (0..41).map(|f| format!("{}", (k * (f + 1)) % 7)).collect();
        fields[1] = proto.into();
        fields[2] = service.into();
        fields[3] = flag.into();
        fields.push(label.into());
        fields.push("20".into());
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    std::fs::write(&data, text).unwrap();
    let model = dir.path().join("model.json");
    let out = cli().arg("train").arg("--data").arg(&data).arg("--out").arg(&model).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cli()
        .args(["simulate", "--phases", "10", "--data"])
        .arg(&data)
        .arg("--model")
        .arg(&model)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // 10 phases of 9 modules need more records than either class has
    assert!(String::from_utf8_lossy(&out.stderr).contains("reused"));
}

#[test]
fn demo_attack_reports_both_runs() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("hist.csv");
    let out = cli()
        .args(["demo-attack", "--phases", "50", "--out"])
        .arg(&hist)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("honest:") && stdout.contains("attacked:"));
    assert!(std::fs::read_to_string(&hist).unwrap().starts_with("iterations,honest,attacked"));
}
