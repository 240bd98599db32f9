use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use guided_synth::grammar::WeightedGrammarFile;
use guided_synth::harness::{self, Domain, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "guided-synth", about = "Bottom-up program synthesis guided by sampled completions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a batch of tasks and write results, timings and a solved-over-time table.
    Run(RunArgs),
    /// Learn a weighted grammar for one task and print it as JSON.
    Learn(TaskArgs),
    /// Solve one task and print the program.
    Solve(TaskArgs),
    /// Merge timing tables from several runs into one solved-over-time CSV.
    Report {
        /// Output directories of earlier runs; each becomes a series named after the directory.
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, value_enum)]
    domain: Option<Domain>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    samples: Option<usize>,
    /// Seconds per task, sampling included.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    /// Use cached completions only.
    #[arg(long)]
    offline: bool,
    /// TOML or JSON run config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Task files or directories.
    #[arg(long, num_args = 1..)]
    tasks: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TaskArgs {
    #[command(flatten)]
    common: Common,
    task: PathBuf,
}

impl Common {
    fn config(&self) -> Result<RunConfig, harness::HarnessError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = self.domain {
            cfg.domain = d;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(n) = self.samples {
            cfg.samples = n;
        }
        if let Some(t) = self.timeout {
            cfg.timeout_secs = t;
        }
        if let Some(c) = &self.cache {
            cfg.cache_dir = c.clone();
        }
        if let Some(m) = &self.model {
            cfg.model = m.clone();
        }
        if let Some(s) = self.smoothing {
            cfg.smoothing = s;
        }
        if let Some(s) = self.scale {
            cfg.scale = s;
        }
        cfg.offline |= self.offline;
        Ok(cfg)
    }
}

fn domain_of(path: &std::path::Path) -> Domain {
    match path.extension().and_then(|e| e.to_str()) {
        Some("txt") => Domain::Arc,
        _ => Domain::String,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match go(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn go(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Run(a) => {
            let mut cfg = a.common.config()?;
            if !a.tasks.is_empty() {
                cfg.tasks = a.tasks;
            }
            if let Some(o) = a.out {
                cfg.out_dir = o;
            }
            if let Some(w) = a.workers {
                cfg.workers = w;
            }
            cfg.validate()?;
            let report = harness::run(&cfg)?;
            report.write(&cfg.out_dir, cfg.mode.name())?;
            let solved = report.tasks.iter().filter(|t| t.result.solved).count();
            for t in &report.tasks {
                let r = &t.result;
                match (&r.program, &r.error) {
                    (_, Some(e)) => println!("{}: error: {e}", r.task),
                    (Some(p), _) => println!("{}: {p} ({:.2}s)", r.task, t.timing.elapsed_secs),
                    _ => println!("{}: unsolved", r.task),
                }
            }
            println!("solved {solved}/{} -> {}", report.tasks.len(), cfg.out_dir.display());
        }
        Cmd::Learn(a) => {
            let mut cfg = a.common.config()?;
            if a.common.domain.is_none() && a.common.config.is_none() {
                cfg.domain = domain_of(&a.task);
            }
            if cfg.mode == Mode::Uniform {
                cfg.mode = Mode::NonStrict;
            }
            cfg.validate()?;
            let (pg, cs) = harness::learn_task(&cfg, &a.task)?;
            eprintln!("{} of {} completions parse", cs.num_parsed(), cs.len());
            println!("{}", WeightedGrammarFile::from_pcfg(&pg, cfg.scale, &[]).to_json());
        }
        Cmd::Solve(a) => {
            let mut cfg = a.common.config()?;
            if a.common.domain.is_none() && a.common.config.is_none() {
                cfg.domain = domain_of(&a.task);
            }
            cfg.validate()?;
            let r = harness::run_task(&cfg, &a.task);
            let res = &r.result;
            if let Some(e) = &res.error {
                return Err(e.clone().into());
            }
            match &res.program {
                Some(p) => println!("{p}"),
                None => println!("no program found ({:?})", res.halt),
            }
            eprintln!(
                "enumerated {} in {:.2}s{}",
                res.enumerated,
                r.timing.elapsed_secs,
                res.test_correct.map(|c| format!("; test pairs {}", if c { "correct" } else { "wrong" })).unwrap_or_default()
            );
        }
        Cmd::Report { dirs, out } => {
            let mut series = Vec::new();
            for d in &dirs {
                let label = d.file_name().and_then(|n| n.to_str()).unwrap_or("run").to_string();
                series.push((label, harness::read_timing(&d.join("timing.csv"))?));
            }
            let csv = harness::solved_over_time(&series);
            match out {
                Some(p) => std::fs::write(p, csv)?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}
