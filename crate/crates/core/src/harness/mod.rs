//! Batch runs: load tasks, sample and learn (unless uniform), search, and
//! write reports.
//!
//! An output directory gets three files:
//! - `results.jsonl`: one record per task, sorted by task, with no timings,
//!   so runs over the same cache are byte-identical;
//! - `timing.csv`: `task,solved,sample_secs,learn_secs,search_secs,elapsed_secs`;
//! - `solved_over_time.csv`: cumulative solved counts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arc::{synth_arc, Abstraction, ArcDsl, ArcGrammars, ArcTask};
use crate::grammar::{ProbabilisticGrammar, WeightedGrammar, DEFAULT_SCALE};
use crate::llm::{self, Cache, CompletionRecord, EndpointConfig, LlmError, DEFAULT_PROMPT_TOKENS};
use crate::pcfg::{learn_pcfg, CompletionSet, LearnMode};
use crate::search::{Budget, Halt};
use crate::strings::StringTask;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad config: {0}")]
    Config(String),
    #[error("task {task}: {message}")]
    Task { task: String, message: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Arc,
    String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Uniform,
    Strict,
    NonStrict,
    Binary,
}

impl Mode {
    pub fn learn_mode(self) -> Option<LearnMode> {
        match self {
            Mode::Uniform => None,
            Mode::Strict => Some(LearnMode::Strict),
            Mode::NonStrict => Some(LearnMode::NonStrict),
            Mode::Binary => Some(LearnMode::Binary),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Uniform => "uniform",
            Mode::Strict => "strict",
            Mode::NonStrict => "non-strict",
            Mode::Binary => "binary",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    /// Task files, or directories of them.
    pub tasks: Vec<PathBuf>,
    pub mode: Mode,
    pub samples: usize,
    pub smoothing: f64,
    pub scale: f64,
    pub timeout_secs: f64,
    pub cache_dir: PathBuf,
    pub out_dir: PathBuf,
    pub model: String,
    /// Never call the endpoint; use whatever the cache holds.
    pub offline: bool,
    pub workers: usize,
    pub abstraction: Abstraction,
    pub endpoint: EndpointConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: Domain::String,
            tasks: Vec::new(),
            mode: Mode::Uniform,
            samples: 10,
            smoothing: 1.0,
            scale: DEFAULT_SCALE,
            timeout_secs: 600.0,
            cache_dir: "cache".into(),
            out_dir: "out".into(),
            model: "gpt-4o".into(),
            offline: false,
            workers: 1,
            abstraction: Abstraction::default(),
            endpoint: EndpointConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads TOML, or JSON when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<RunConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.timeout_secs > 0.0) {
            return Err(HarnessError::Config("timeout must be positive".into()));
        }
        if self.mode != Mode::Uniform && self.samples == 0 {
            return Err(HarnessError::Config("at least one sample is needed".into()));
        }
        if !(self.scale >= 1.0) {
            return Err(HarnessError::Config("scale must be >= 1".into()));
        }
        if !(self.smoothing > 0.0) {
            return Err(HarnessError::Config("smoothing must be positive".into()));
        }
        Ok(())
    }

    /// Task files in name order.
    pub fn task_files(&self) -> Result<Vec<PathBuf>, HarnessError> {
        let exts: &[&str] = match self.domain {
            Domain::Arc => &["txt"],
            Domain::String => &["sl", "json"],
        };
        let mut out = Vec::new();
        for p in &self.tasks {
            if p.is_dir() {
                for e in std::fs::read_dir(p).map_err(io_err(p))? {
                    let path = e.map_err(io_err(p))?.path();
                    if path.extension().and_then(|x| x.to_str()).is_some_and(|x| exts.contains(&x)) {
                        out.push(path);
                    }
                }
            } else {
                out.push(p.clone());
            }
        }
        out.sort();
        Ok(out)
    }
}

/// `(task, solved, elapsed seconds)`
pub type SolvedRow = (String, bool, f64);

/// The deterministic part of a task's result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    pub domain: Domain,
    pub mode: Mode,
    pub solved: bool,
    pub program: Option<String>,
    /// Whether the program also gets the held-out test pairs right (grid
    /// tasks with known test outputs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_correct: Option<bool>,
    pub enumerated: u64,
    pub banked: u64,
    pub samples: usize,
    pub parsed: usize,
    pub validity: Option<f64>,
    pub halt: Option<Halt>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub sample_secs: f64,
    pub learn_secs: f64,
    pub search_secs: f64,
    pub elapsed_secs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskReport {
    pub result: TaskResult,
    pub timing: Timing,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub tasks: Vec<TaskReport>,
}

enum Loaded {
    Arc(ArcTask),
    String(StringTask),
}

fn task_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("task").to_string()
}

fn load_task(domain: Domain, path: &Path) -> Result<Loaded, HarnessError> {
    let name = task_name(path);
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let task_err = |message: String| HarnessError::Task {
        task: name.clone(),
        message,
    };
    Ok(match domain {
        Domain::Arc => Loaded::Arc(ArcTask::parse(&name, &text).map_err(|e| task_err(e.to_string()))?),
        Domain::String => Loaded::String(StringTask::load(&name, &text).map_err(|e| task_err(e.to_string()))?),
    })
}

/// Completions for a task: from the cache only when offline, otherwise
/// cache first and then the endpoint.
pub fn completions(cfg: &RunConfig, task: &str, prompt: impl FnOnce() -> Result<llm::PromptSpec, LlmError>) -> Result<Vec<CompletionRecord>, HarnessError> {
    let cache = Cache::new(&cfg.cache_dir);
    if cfg.offline {
        let mut recs = cache.load(task, &cfg.model)?;
        recs.truncate(cfg.samples);
        return Ok(recs);
    }
    Ok(llm::sample(&prompt()?, task, &cfg.endpoint, &cache)?)
}

/// Learns the PCFG for one task (sampling if needed). Returns the completion
/// set too, for validity reporting.
pub fn learn_task(cfg: &RunConfig, path: &Path) -> Result<(ProbabilisticGrammar, CompletionSet), HarnessError> {
    let mode = cfg
        .mode
        .learn_mode()
        .ok_or_else(|| HarnessError::Config("uniform mode learns nothing".into()))?;
    let name = task_name(path);
    let (grammar, cs) = match load_task(cfg.domain, path)? {
        Loaded::Arc(t) => {
            let dsl = ArcDsl::for_task(&t, &cfg.abstraction);
            let recs = completions(cfg, &name, || llm::arc_prompt(&t, &dsl, &[], &cfg.model, cfg.samples, DEFAULT_PROMPT_TOKENS))?;
            let cs = llm::to_completion_set(&name, &recs, &dsl.grammar, mode, str::to_string);
            (dsl.grammar.clone(), cs)
        }
        Loaded::String(t) => {
            let recs = completions(cfg, &name, || Ok(llm::string_prompt(&t, &cfg.model, cfg.samples)))?;
            let cs = llm::to_completion_set(&name, &recs, &t.grammar, mode, |c| t.completion_body(c));
            (t.grammar.clone(), cs)
        }
    };
    Ok((learn_pcfg(grammar, &cs, mode, cfg.smoothing), cs))
}

/// Runs one task under its own deadline, which includes sampling.
pub fn run_task(cfg: &RunConfig, path: &Path) -> TaskReport {
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(cfg.timeout_secs);
    let mut result = TaskResult {
        task: task_name(path),
        domain: cfg.domain,
        mode: cfg.mode,
        solved: false,
        program: None,
        test_correct: None,
        enumerated: 0,
        banked: 0,
        samples: 0,
        parsed: 0,
        validity: None,
        halt: None,
        error: None,
    };
    let mut timing = Timing::default();
    if let Err(e) = run_task_inner(cfg, path, deadline, &mut result, &mut timing) {
        result.error = Some(e.to_string());
    }
    timing.elapsed_secs = started.elapsed().as_secs_f64();
    TaskReport { result, timing }
}

fn run_task_inner(cfg: &RunConfig, path: &Path, deadline: Instant, r: &mut TaskResult, t: &mut Timing) -> Result<(), HarnessError> {
    let task = load_task(cfg.domain, path)?;
    let mut pg = None;
    if cfg.mode != Mode::Uniform {
        let clock = Instant::now();
        let (p, cs) = learn_task(cfg, path)?;
        // sampling and fitting are timed together; cache hits make the
        // fit dominate
        t.sample_secs = clock.elapsed().as_secs_f64();
        r.samples = cs.len();
        r.parsed = cs.num_parsed();
        r.validity = (!cs.is_empty()).then(|| cs.validity());
        pg = Some(p);
    }
    let budget = Budget {
        deadline: Some(deadline),
        ..Budget::default()
    };
    let task_err = |message: String| HarnessError::Task {
        task: r.task.clone(),
        message,
    };
    match task {
        Loaded::Arc(task) => {
            let clock = Instant::now();
            let dsl = ArcDsl::for_task(&task, &cfg.abstraction);
            let grammars = match &pg {
                Some(pg) => ArcGrammars::from_pcfg(&dsl, pg, cfg.scale),
                None => ArcGrammars::uniform(&dsl),
            }
            .map_err(|e| task_err(e.to_string()))?;
            t.learn_secs = clock.elapsed().as_secs_f64();
            let clock = Instant::now();
            let out = synth_arc(&dsl, &task, &cfg.abstraction, &grammars, &budget);
            t.search_secs = clock.elapsed().as_secs_f64();
            r.enumerated = out.stats.enumerated();
            r.banked = out.stats.transform.banked + out.stats.filter.banked;
            r.halt = out.halt;
            if let Some(p) = &out.program {
                r.solved = true;
                r.program = out.text.clone();
                let known: Vec<_> = task.test.iter().filter_map(|g| g.output.as_ref().map(|o| (&g.input, o))).collect();
                if !known.is_empty() {
                    r.test_correct = Some(known.iter().all(|(i, o)| dsl.eval(p, i, &cfg.abstraction).as_ref() == Some(*o)));
                }
            }
        }
        Loaded::String(task) => {
            let clock = Instant::now();
            let wg = match &pg {
                Some(pg) => WeightedGrammar::from_pcfg(pg, cfg.scale, &[]),
                None => Ok(WeightedGrammar::uniform(task.grammar.clone())),
            }
            .map_err(|e| task_err(e.to_string()))?;
            t.learn_secs = clock.elapsed().as_secs_f64();
            let clock = Instant::now();
            let out = task.solve(&wg, &budget);
            t.search_secs = clock.elapsed().as_secs_f64();
            r.enumerated = out.stats.enumerated;
            r.banked = out.stats.banked;
            r.solved = out.solution.is_some();
            r.program = out.solution.as_ref().map(|p| p.render(&task.grammar));
            r.halt = (!r.solved).then_some(out.halt);
        }
    }
    Ok(())
}

/// Runs every task on a pool of `cfg.workers` threads. A panicking task is
/// reported as an error; the run goes on.
pub fn run(cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let files = cfg.task_files()?;
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<TaskReport>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..cfg.workers.max(1).min(files.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = files.get(i) else { break };
                log::info!("task {}", path.display());
                let report = std::panic::catch_unwind(|| run_task(cfg, path)).unwrap_or_else(|_| {
                    let mut r = run_task_placeholder(cfg, path);
                    r.result.error = Some("task panicked".into());
                    r
                });
                done.lock().expect("report sink").push(report);
            });
        }
    });
    let mut tasks = done.into_inner().expect("report sink");
    tasks.sort_by(|a, b| a.result.task.cmp(&b.result.task));
    Ok(RunReport { tasks })
}

fn run_task_placeholder(cfg: &RunConfig, path: &Path) -> TaskReport {
    TaskReport {
        result: TaskResult {
            task: task_name(path),
            domain: cfg.domain,
            mode: cfg.mode,
            solved: false,
            program: None,
            test_correct: None,
            enumerated: 0,
            banked: 0,
            samples: 0,
            parsed: 0,
            validity: None,
            halt: None,
            error: None,
        },
        timing: Timing::default(),
    }
}

impl RunReport {
    pub fn results_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.tasks {
            out.push_str(&serde_json::to_string(&t.result).expect("results serialize"));
            out.push('\n');
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("task,solved,sample_secs,learn_secs,search_secs,elapsed_secs\n");
        for t in &self.tasks {
            let tm = &t.timing;
            let _ = writeln!(
                out,
                "{},{},{:.3},{:.3},{:.3},{:.3}",
                t.result.task, t.result.solved, tm.sample_secs, tm.learn_secs, tm.search_secs, tm.elapsed_secs
            );
        }
        out
    }

    pub fn solved_times(&self) -> Vec<SolvedRow> {
        self.tasks
            .iter()
            .map(|t| (t.result.task.clone(), t.result.solved, t.timing.elapsed_secs))
            .collect()
    }

    pub fn write(&self, dir: &Path, label: &str) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(io_err(&p))
        };
        put("results.jsonl", self.results_jsonl())?;
        put("timing.csv", self.timing_csv())?;
        put("solved_over_time.csv", solved_over_time(&[(label.to_string(), self.solved_times())]))
    }
}

/// Cumulative solved counts per series: one row per solve, ordered by time
/// then task. Columns: `series,time_secs,solved`.
pub fn solved_over_time(series: &[(String, Vec<SolvedRow>)]) -> String {
    let mut out = String::from("series,time_secs,solved\n");
    for (label, tasks) in series {
        let mut times: Vec<(f64, &str)> = tasks.iter().filter(|t| t.1).map(|t| (t.2, t.0.as_str())).collect();
        times.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        for (k, (time, _)) in times.iter().enumerate() {
            let _ = writeln!(out, "{label},{time},{}", k + 1);
        }
    }
    out
}

/// Reads a `timing.csv` back as (task, solved, elapsed) rows.
pub fn read_timing(path: &Path) -> Result<Vec<SolvedRow>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || HarnessError::Config(format!("{}: bad row `{l}`", path.display()));
            if f.len() != 6 {
                return Err(bad());
            }
            Ok((
                f[0].to_string(),
                f[1].parse().map_err(|_| bad())?,
                f[5].parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solved_over_time_rows() {
        assert_eq!(solved_over_time(&[]), "series,time_secs,solved\n");
        let tasks = vec![
            ("c".to_string(), true, 7.0),
            ("a".to_string(), true, 1.0),
            ("x".to_string(), false, 3.0),
            ("b".to_string(), true, 5.0),
        ];
        assert_eq!(
            solved_over_time(&[("m".into(), tasks)]),
            "series,time_secs,solved\nm,1,1\nm,5,2\nm,7,3\n"
        );
    }

    #[test]
    fn config_round_trip_and_validation() {
        let text = "domain = \"arc\"\nmode = \"non-strict\"\ntasks = [\"fixtures/arc\"]\ntimeout_secs = 5\n\n[endpoint]\nbatch_size = 5\n";
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.domain, Domain::Arc);
        assert_eq!(cfg.mode, Mode::NonStrict);
        assert_eq!(cfg.endpoint.batch_size, 5);
        assert_eq!(cfg.samples, 10);
        cfg.validate().unwrap();
        let bad = RunConfig {
            timeout_secs: 0.0,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }
}
