//! Runs the grid fixtures through the batch harness from cached completions,
//! guided and uniform, and prints the merged solved-over-time table.
//!
//! cargo run --release --example batch_run [out_dir]

use std::path::PathBuf;

use guided_synth::harness::{self, Domain, Mode, RunConfig};

fn main() {
    let root = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"));
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("guided-synth-batch"));
    let mut series = Vec::new();
    for mode in [Mode::NonStrict, Mode::Uniform] {
        let cfg = RunConfig {
            domain: Domain::Arc,
            tasks: vec![root.join("arc")],
            mode,
            cache_dir: root.join("cache"),
            out_dir: out.join(mode.name()),
            offline: true,
            timeout_secs: 60.0,
            workers: 2,
            ..RunConfig::default()
        };
        let report = harness::run(&cfg).expect("run");
        report.write(&cfg.out_dir, mode.name()).expect("write");
        for t in &report.tasks {
            println!("{:>10} {:<8} solved={} enumerated={}", mode.name(), t.result.task, t.result.solved, t.result.enumerated);
        }
        series.push((mode.name().to_string(), report.solved_times()));
    }
    print!("{}", harness::solved_over_time(&series));
    println!("reports in {}", out.display());
}
