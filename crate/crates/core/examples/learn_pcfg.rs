//! Learns a probabilistic grammar from cached completions for the
//! top-level-domain task and compares guided search with the cached data in
//! each learning mode.
//!
//! cargo run --release --example learn_pcfg

use std::time::Duration;

use guided_synth::grammar::{WeightedGrammar, DEFAULT_SCALE};
use guided_synth::llm::{self, Cache};
use guided_synth::pcfg::{learn_pcfg, LearnMode};
use guided_synth::search::Budget;
use guided_synth::strings::StringTask;

fn main() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");
    let text = std::fs::read_to_string(format!("{root}/string/tld.sl")).expect("task file");
    let task = StringTask::load("tld", &text).expect("task loads");
    let records = Cache::new(format!("{root}/cache")).load("tld", "gpt-4o").expect("cache");

    for mode in [LearnMode::Strict, LearnMode::NonStrict, LearnMode::Binary] {
        let cs = llm::to_completion_set("tld", &records, &task.grammar, mode, |c| task.completion_body(c));
        let pg = learn_pcfg(task.grammar.clone(), &cs, mode, 1.0);
        println!("{mode:?}: {} of {} completions parse", cs.num_parsed(), records.len());
        let mut probs: Vec<(f64, String)> = task
            .grammar
            .productions()
            .iter()
            .enumerate()
            .map(|(i, _)| (pg.probs()[i], task.grammar.describe(guided_synth::grammar::ProdId(i as u32))))
            .collect();
        probs.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (p, rule) in probs.iter().take(6) {
            println!("  {p:.3}  {rule}");
        }
        let wg = WeightedGrammar::from_pcfg(&pg, DEFAULT_SCALE, &[]).expect("weights");
        let out = task.solve(&wg, &Budget::timeout(Duration::from_secs(60)));
        match &out.solution {
            Some(p) => println!("  solved with {} enumerated: {}", out.stats.enumerated, p.render(&task.grammar)),
            None => println!("  unsolved ({:?})", out.halt),
        }
    }
}
