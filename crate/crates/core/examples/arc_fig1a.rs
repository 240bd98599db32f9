//! Recolors grey objects after their single-pixel neighbor, once with
//! uniform weights and once guided by cached completions.
//!
//! cargo run --release --example arc_fig1a

use std::path::Path;
use std::time::Duration;

use guided_synth::arc::{synth_arc, Abstraction, ArcDsl, ArcGrammars, ArcTask};
use guided_synth::grammar::DEFAULT_SCALE;
use guided_synth::llm::{read_records, to_completion_set};
use guided_synth::pcfg::{learn_pcfg, LearnMode};
use guided_synth::search::Budget;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let text = std::fs::read_to_string(root.join("arc/fig1a.txt")).expect("fixture");
    let task = ArcTask::parse("fig1a", &text).expect("task parses");
    let abs = Abstraction::default();
    let dsl = ArcDsl::for_task(&task, &abs);

    let records = read_records(&root.join("cache/fig1a__gpt-4o.jsonl")).expect("completions");
    let cs = to_completion_set("fig1a", &records, &dsl.grammar, LearnMode::NonStrict, str::to_string);
    println!("{} of {} completions parse", cs.num_parsed(), cs.len());
    let pg = learn_pcfg(dsl.grammar.clone(), &cs, LearnMode::NonStrict, 1.0);

    let runs = [
        ("uniform", ArcGrammars::uniform(&dsl).unwrap()),
        ("guided", ArcGrammars::from_pcfg(&dsl, &pg, DEFAULT_SCALE).unwrap()),
    ];
    for (name, grammars) in runs {
        let out = synth_arc(&dsl, &task, &abs, &grammars, &Budget::timeout(Duration::from_secs(300)));
        println!(
            "{name}: {} in {:.2?}; enumerated {} (transforms {}, filters {}), at solution {:?}",
            out.text.as_deref().unwrap_or("no solution"),
            out.elapsed,
            out.stats.enumerated(),
            out.stats.transform.enumerated,
            out.stats.filter.enumerated,
            out.stats.enumerated_at_solution,
        );
        if let Some(p) = &out.program {
            for (i, pair) in task.test.iter().enumerate() {
                let got = dsl.eval(p, &pair.input, &abs);
                let ok = pair.output.is_some() && got == pair.output;
                println!("  test {}: {}", i + 1, if ok { "correct" } else { "wrong" });
            }
        }
    }
}
