use std::path::Path;
use std::process::{Command, Output};

fn bullwhip(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bullwhip"))
        .args(args)
        .current_dir(dir)
        .env("RUST_BACKTRACE", "0")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn minimal_config_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("min.toml"), "").unwrap();
    let o = bullwhip(dir.path(), &["simulate", "--config", "min.toml", "--out", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("team cost         9945.92"), "{}", stdout(&o));
    let echo: toml::Table = std::fs::read_to_string(dir.path().join("run/config.toml")).unwrap().parse().unwrap();
    let game = echo["game"].as_table().unwrap();
    assert_eq!(game["schedule"]["horizon"].as_integer(), Some(52));
    assert_eq!(game["schedule"]["pre_step_demand"].as_float(), Some(4.0));
    assert_eq!(game["schedule"]["post_step_demand"].as_float(), Some(8.0));
    assert_eq!(game["costs"]["holding_cost_per_unit_period"].as_float(), Some(0.5));
    assert_eq!(game["costs"]["backorder_cost_per_unit_period"].as_float(), Some(1.0));
    let csv = std::fs::read_to_string(dir.path().join("run/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 52 * 4);
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "seed = 2\n[sweep]\nrepz = 3\n").unwrap();
    let o = bullwhip(dir.path(), &["sweep", "--config", "c.toml"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("repz") && err.contains("line 3"), "{err}");
}

#[test]
fn validation_errors_are_line_anchored() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "seed = 2\n\n[game.conventions]\ncustomer_order_delay = 1\n").unwrap();
    let o = bullwhip(dir.path(), &["simulate", "--config", "c.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("c.toml:4: game.conventions.customer_order_delay"), "{}", stderr(&o));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "seed = 2\n").unwrap();
    let o = bullwhip(dir.path(), &["simulate", "--config", "c.toml", "--seed", "77", "--factory-lead", "pipeline", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo: toml::Table = std::fs::read_to_string(dir.path().join("r/config.toml")).unwrap().parse().unwrap();
    assert_eq!(echo["seed"].as_integer(), Some(77));
    assert_eq!(echo["game"]["conventions"]["factory_lead"].as_str(), Some("pipeline"));
}

#[test]
fn echoed_config_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[simulate]\nsigma = 3.0\n").unwrap();
    assert!(bullwhip(dir.path(), &["simulate", "--config", "c.toml", "--out", "a"]).status.success());
    let o = bullwhip(dir.path(), &["simulate", "--config", "a/config.toml", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/trajectory.csv"), read("b/trajectory.csv"));
    // rerunning in place leaves the input config untouched
    let before = read("a/config.toml");
    assert!(bullwhip(dir.path(), &["simulate", "--config", "a/config.toml"]).status.success());
    assert_eq!(read("a/config.toml"), before);
    let o = bullwhip(dir.path(), &["simulate", "--config", "a/config.toml", "--seed", "5"]);
    assert!(!o.status.success());
    assert_eq!(read("a/config.toml"), before);
}

#[test]
fn sweep_without_agent_bundle_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = bullwhip(dir.path(), &["sweep", "--reps", "1", "--sigma-max", "0", "--position", "1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing artifact"), "{}", stderr(&o));
}

#[test]
fn report_emits_plot() {
    let dir = tempfile::tempdir().unwrap();
    let summary = "sigma,position,agent_kind,mean_reduction_pct,stderr,n\n\
                   0.0,1,model_based,-40.0,0.0,1\n1.0,1,model_based,-20.0,1.0,1\n";
    std::fs::write(dir.path().join("summary_in.csv"), summary).unwrap();
    let o = bullwhip(dir.path(), &["report", "--input", "summary_in.csv", "--out", "rep"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("rep/report.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    // an input that would be overwritten is refused
    let o = bullwhip(dir.path(), &["report", "--input", "rep/summary.csv", "--out", "rep"]);
    assert!(!o.status.success());
}

#[test]
fn zero_jobs_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!bullwhip(dir.path(), &["simulate", "--jobs", "0"]).status.success());
}
