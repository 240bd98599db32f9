//! Solves the top-level-domain task with a uniform grammar.
//!
//! cargo run --release --example string_tld [path/to/task.sl]

use std::sync::Arc;
use std::time::Duration;

use guided_synth::grammar::WeightedGrammar;
use guided_synth::search::Budget;
use guided_synth::strings::StringTask;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/string/tld.sl").into());
    let text = std::fs::read_to_string(&path).expect("task file");
    let task = StringTask::load("tld", &text).expect("task loads");
    let wg = WeightedGrammar::uniform(Arc::clone(&task.grammar));
    let out = task.solve(&wg, &Budget::timeout(Duration::from_secs(120)));
    match &out.solution {
        Some(p) => println!("solved: {}", p.render(&task.grammar)),
        None => println!("unsolved ({:?})", out.halt),
    }
    println!(
        "enumerated {} banked {} in {:.2?}",
        out.stats.enumerated, out.stats.banked, out.stats.elapsed
    );
}
