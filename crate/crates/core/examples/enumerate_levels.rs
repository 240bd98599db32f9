//! Enumerates a three-rule grammar level by level, first with unit weights
//! and then with learned-looking probabilities.
//!
//! cargo run --example enumerate_levels

use std::sync::Arc;

use guided_synth::grammar::{GrammarBuilder, ProbabilisticGrammar, ProdId, WeightedGrammar};
use guided_synth::search::{Bank, Budget, Control, Enumerator, Semantics};

/// Every program evaluates to its own text, so nothing is pruned.
struct Text;

impl Semantics for Text {
    type Value = String;
    fn contexts(&self) -> usize {
        1
    }
    fn apply(&self, prod: ProdId, args: &[&[String]]) -> Vec<String> {
        vec![match prod.0 {
            0 => "a".into(),
            1 => format!("f({})", args[0][0]),
            _ => format!("g({},{})", args[0][0], args[1][0]),
        }]
    }
}

fn show(wg: &WeightedGrammar, levels: u32) {
    let mut en = Enumerator::new(wg, &Text);
    en.run(&Budget::levels(levels), |_| Control::Continue);
    let bank: &Bank<String> = en.bank();
    for level in 1..=levels {
        let mut progs: Vec<String> = bank
            .entries()
            .iter()
            .filter(|e| e.cost == level)
            .map(|e| e.program.render(wg.search_grammar()))
            .collect();
        progs.sort();
        println!("  level {level}: {}", progs.join(" "));
    }
}

fn main() {
    let mut b = GrammarBuilder::new("S");
    b.rule("$S", &["a"], None)
        .op("$S", "f(", &["f(", "$S", ")"])
        .op("$S", "g(", &["g(", "$S", ",", "$S", ")"]);
    let g = Arc::new(b.build().expect("grammar"));

    println!("unit weights:");
    show(&WeightedGrammar::uniform(g.clone()), 5);

    let pg = ProbabilisticGrammar::new(g, vec![0.5, 0.25, 0.25]).expect("probabilities");
    let wg = WeightedGrammar::from_pcfg(&pg, 1.0, &[]).expect("weights");
    println!("p = (0.5, 0.25, 0.25), scale 1:");
    show(&wg, 7);
}
