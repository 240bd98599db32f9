mod common;

use std::process::Command;

use common::*;
use guided_synth::grammar::WeightedGrammarFile;
use guided_synth::harness::{self, Domain, Mode, RunConfig};
use guided_synth::search::Halt;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_guided-synth"))
}

fn cfg(domain: Domain, tasks: Vec<std::path::PathBuf>, mode: Mode, out: &std::path::Path) -> RunConfig {
    RunConfig {
        domain,
        tasks,
        mode,
        cache_dir: fixtures().join("cache"),
        out_dir: out.to_path_buf(),
        offline: true,
        timeout_secs: 30.0,
        ..RunConfig::default()
    }
}

#[test]
fn binary_mode_without_the_needed_operator_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(Domain::String, vec![fixtures().join("string/tld.sl")], Mode::Binary, dir.path());
    c.cache_dir = fixtures().join("cache-no-substr");
    c.timeout_secs = 2.0;
    let report = harness::run(&c).unwrap();
    let r = &report.tasks[0];
    assert!(!r.result.solved);
    assert_eq!(r.result.halt, Some(Halt::Deadline));
    assert_eq!(r.result.samples, 10);
    // cooperative deadline: a little past the timeout at most
    assert!(r.timing.elapsed_secs < c.timeout_secs + 1.0, "{}", r.timing.elapsed_secs);

    // the same completions with smoothing keep every operator alive
    c.mode = Mode::NonStrict;
    c.timeout_secs = 60.0;
    assert!(harness::run(&c).unwrap().tasks[0].result.solved);
}

#[test]
fn failures_stay_with_their_task() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.txt");
    std::fs::write(&bad, "TRAIN\nINPUT\nR Q\n").unwrap();
    let c = cfg(Domain::Arc, vec![bad, fixtures().join("arc/recolor.txt")], Mode::Uniform, dir.path());
    let report = harness::run(&c).unwrap();
    assert_eq!(report.tasks.len(), 2);
    assert!(report.tasks[0].result.error.is_some());
    assert!(report.tasks[1].result.solved);
}

#[test]
fn two_modes_give_two_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut series = Vec::new();
    for mode in [Mode::NonStrict, Mode::Uniform] {
        let c = cfg(Domain::Arc, vec![fixtures().join("arc")], mode, &dir.path().join(mode.name()));
        let report = harness::run(&c).unwrap();
        report.write(&c.out_dir, mode.name()).unwrap();
        let back = harness::read_timing(&c.out_dir.join("timing.csv")).unwrap();
        assert_eq!(back.len(), 2);
        series.push((mode.name().to_string(), back));
    }
    let csv = harness::solved_over_time(&series);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "series,time_secs,solved");
    assert_eq!(rows.iter().filter(|r| r.starts_with("non-strict,")).count(), 2);
    assert_eq!(rows.iter().filter(|r| r.starts_with("uniform,")).count(), 2);
    assert!(rows[2].ends_with(",2") && rows[4].ends_with(",2"));
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        format!(
            "domain = \"arc\"\nmode = \"strict\"\ntasks = [{:?}]\ncache_dir = {:?}\nout_dir = {:?}\noffline = true\ntimeout_secs = 30\n",
            fixtures().join("arc/fig1a.txt"),
            fixtures().join("cache"),
            dir.path().join("out")
        ),
    )
    .unwrap();
    let c = RunConfig::load(&path).unwrap();
    let report = harness::run(&c).unwrap();
    let r = &report.tasks[0].result;
    assert!(r.solved);
    assert_eq!(r.test_correct, Some(true));
    assert_eq!((r.samples, r.parsed, r.validity), (10, 10, Some(1.0)));
}

#[test]
fn cli_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--domain", "arc", "--tasks"])
        .arg(fixtures().join("arc"))
        .args(["--mode", "non-strict", "--samples", "10", "--timeout", "30", "--offline", "--cache"])
        .arg(fixtures().join("cache"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let results = std::fs::read_to_string(out.join("results.jsonl")).unwrap();
    assert_eq!(results.lines().count(), 2);
    assert!(out.join("timing.csv").exists());
    assert!(std::fs::read_to_string(out.join("solved_over_time.csv")).unwrap().starts_with("series,time_secs,solved\n"));

    let report = bin().arg("report").arg(&out).output().unwrap();
    assert!(report.status.success());
    assert_eq!(String::from_utf8_lossy(&report.stdout).lines().count(), 3);
}

#[test]
fn cli_learn_and_solve() {
    let learn = bin()
        .arg("learn")
        .arg(fixtures().join("arc/fig1a.txt"))
        .args(["--offline", "--cache"])
        .arg(fixtures().join("cache"))
        .output()
        .unwrap();
    assert!(learn.status.success(), "{}", String::from_utf8_lossy(&learn.stderr));
    let wg = WeightedGrammarFile::from_json(&String::from_utf8_lossy(&learn.stdout)).unwrap();
    let pg = wg.probabilistic().unwrap().expect("learned grammars carry probabilities");
    let g = pg.grammar();
    let weight = |op: &str| -pg.prob(g.production_with_operator("$Transform", op).unwrap()).log2();
    assert!(weight("update_color") < weight("move"));

    let solve = bin()
        .arg("solve")
        .arg(fixtures().join("arc/recolor.txt"))
        .args(["--mode", "uniform", "--timeout", "30"])
        .output()
        .unwrap();
    assert!(solve.status.success());
    assert!(String::from_utf8_lossy(&solve.stdout).starts_with("(do (rule"));
    assert!(String::from_utf8_lossy(&solve.stderr).contains("test pairs correct"));
}

#[test]
fn unknown_task_file_is_an_error_exit() {
    let out = bin().args(["solve", "/nonexistent/task.sl", "--timeout", "1"]).output().unwrap();
    assert!(!out.status.success());
}
