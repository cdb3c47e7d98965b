use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fedcarbon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedcarbon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_sim_config(dir: &Path) -> String {
    let text = r#"{
        "schemes": ["CL", "FL", "CFL"],
        "fleet": {
            "total_devices": 10,
            "active_per_round": 6,
            "device_compute": {"ratio": 0.22},
            "center_profile": {"power_w": 182, "batch_time_s": 0.02, "batches_per_round": 3, "pue": 1.67, "avg_fraction": 0.1}
        },
        "links": {"ee_up": 1e5, "ee_down": 1e5, "model_bits": 2.32e6, "dataset_bits_per_device": 2.4e8},
        "carbon": {"preset": "FI"},
        "topology": {"kind": "ring"},
        "target_loss": 0.1,
        "learner": {
            "model": {"input_dim": 16, "classes": 6, "optimizer": {"adam": {"step_size": 0.02}}, "batch_size": 128},
            "dataset": {"per_class": 100, "spread": 0.3},
            "max_rounds": 150
        },
        "seed": 3
    }"#;
    let path = dir.join("sim.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn analyze_preset_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3a.csv");
    let o = fedcarbon(&["analyze", "--preset", "fig3a", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 50 * 3);
    assert!(text.starts_with("scheme,n,K,K_a,N,ee_u,ee_d,ee_m,"));
}

#[test]
fn analyze_jsonl_to_stdout() {
    let o = fedcarbon(&["analyze", "--preset", "fig3c", "--format", "jsonl"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2 * 8 * 3);
    assert!(text.lines().all(|l| l.starts_with('{') && l.ends_with('}')));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"schemes": ["CL"], "unexpected": 1}"#).unwrap();
    let o = fedcarbon(&["analyze", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));

    let missing = fedcarbon(&["analyze", "--config", "/no/such/file.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let unknown = fedcarbon(&["analyze", "--preset", "fig9"]);
    assert_eq!(unknown.status.code(), Some(2));

    let wrong_mode = fedcarbon(&["analyze", "--preset", "table3"]);
    assert_eq!(wrong_mode.status.code(), Some(2));

    let no_source = fedcarbon(&["analyze"]);
    assert_eq!(no_source.status.code(), Some(2));
}

#[test]
fn simulate_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_sim_config(dir.path());
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = fedcarbon(&[
            "simulate",
            "--config",
            &config,
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out).unwrap()
    };
    let one = run("1", "t1.csv");
    let eight = run("8", "t8.csv");
    assert_eq!(one, eight);
    assert_eq!(String::from_utf8(one).unwrap().lines().count(), 4);
}

#[test]
fn simulate_writes_event_logs_and_honours_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_sim_config(dir.path());
    let events = dir.path().join("events");
    let o = fedcarbon(&[
        "simulate",
        "--config",
        &config,
        "--seed",
        "11",
        "--events",
        events.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for scheme in ["CL", "FL", "CFL"] {
        let log = fs::read_to_string(events.join(format!("events-{scheme}.jsonl"))).unwrap();
        assert!(log.lines().count() > 0);
        assert!(log.lines().all(|l| l.contains("\"round\"") && l.contains("\"kind\"")));
    }
    let cl = fs::read_to_string(events.join("events-CL.jsonl")).unwrap();
    assert_eq!(cl.lines().filter(|l| l.contains("\"kind\":\"ul\"")).count(), 10);
}

#[test]
fn breakeven_reports_crossover() {
    let o = fedcarbon(&["breakeven", "--preset", "fig3c", "--scheme-a", "CFL", "--n-a", "27"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("break-even EE"), "{text}");

    let none = fedcarbon(&["breakeven", "--preset", "fig3a", "--scheme-a", "CL", "--scheme-b", "CL"]);
    assert!(none.status.success());
    assert!(String::from_utf8(none.stdout).unwrap().contains("no positive break-even"));
}
